"""Decomposable tangent planes to the Grassmannian at the base point, their
Plücker coordinates, and the special planes singled out by the calibration
argument.

The tangent space to G(k, n) at the base k-plane is modelled as the span of
the dual vectors E[i,m] with i <= k < m, taken orthonormal.  A tangent
k'-plane is an orthonormal k' x D coordinate matrix over that basis (D =
k(n-k)); Plücker coordinates are the k' x k' minors indexed by sorted
generator subsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import itertools

import numpy as np

from .charforms import Split
from .exalg import DualVector
from .hypercomplex import QUATERNION_TENSOR, right_mult_matrix

ORTHO_TOL = 1e-12


def tangent_generators(split: Split) -> tuple[tuple[int, int], ...]:
    """Canonical ordering of the mixed generators spanning T(G(k,n))."""
    return tuple((i, m) for i in split.u_indices for m in split.v_indices)


def flag_generators(split: Split) -> tuple[tuple[int, int], ...]:
    """Generators tangent to the flag of lines in k-planes: verticals first."""
    vertical = tuple((1, j) for j in range(2, split.k + 1))
    return vertical + tangent_generators(split)


@dataclass(frozen=True)
class Frame:
    """Ordered orthonormal vectors in R^n (rows of `vectors`)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", v)
        gram = v @ v.T
        if not np.allclose(gram, np.eye(v.shape[0]), atol=1e-10):
            raise ValueError("frame is not orthonormal")

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class TangentPlane:
    """Decomposable tangent k'-plane at the base point, in E-coordinates.

    `matrix` rows are the plane's orthonormal basis vectors over `gens`;
    `exact` optionally carries the same matrix with Fraction entries for the
    symbolic evaluation path.
    """

    split: Split
    gens: tuple[tuple[int, int], ...]
    matrix: np.ndarray
    exact: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[1] != len(self.gens):
            raise ValueError("matrix shape does not match generator list")

    @property
    def degree(self) -> int:
        return self.matrix.shape[0]

    def gram_defect(self) -> float:
        g = self.matrix @ self.matrix.T
        return float(np.max(np.abs(g - np.eye(self.degree))))

    def dual_vectors(self) -> list[DualVector]:
        """Exact DualVector rows; requires the exact matrix."""
        if self.exact is None:
            raise ValueError("plane has no exact coordinates")
        out = []
        for row in self.exact:
            parts = {g: q for g, q in zip(self.gens, row) if q != 0}
            out.append(DualVector.combination(self.split.n, parts))
        return out

    def flipped(self) -> "TangentPlane":
        """Same plane with reversed orientation (first vector negated)."""
        m = self.matrix.copy()
        m[0] = -m[0]
        exact = None
        if self.exact is not None:
            first = tuple(-q for q in self.exact[0])
            exact = (first,) + self.exact[1:]
        return TangentPlane(self.split, self.gens, m, exact)


def plane_from_rows(split: Split, rows, gens=None, exact_rows=None, tol: float = ORTHO_TOL,
                    reorthonormalize: bool = False) -> TangentPlane:
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    m = np.asarray(rows, dtype=float)
    gram = m @ m.T
    defect = float(np.max(np.abs(gram - np.eye(m.shape[0]))))
    if defect > tol:
        if not reorthonormalize:
            raise ValueError(f"plane basis not orthonormal (defect {defect:.2e})")
        q, r = np.linalg.qr(m.T)
        m = (q * np.sign(np.diag(r))).T
        exact_rows = None
    return TangentPlane(split, gens, m, exact_rows)


# ---------------------------------------------------------------------------
# Plücker coordinates
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _subsets(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(dim), degree))


@dataclass(frozen=True)
class PluckerCoords:
    """Dense Plücker coordinate vector over sorted generator subsets."""

    gens: tuple[tuple[int, int], ...]
    degree: int
    values: np.ndarray

    def subset_index(self) -> tuple[tuple[int, ...], ...]:
        return _subsets(len(self.gens), self.degree)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def coefficient(self, gen_subset) -> float:
        """Coordinate for a set of generators, e.g. [(1,5),(1,6),(1,7),(1,8)]."""
        positions = tuple(sorted(self.gens.index(g) for g in gen_subset))
        idx = self.subset_index().index(positions)
        return float(self.values[idx])

    def shorthand(self, rows: tuple[int, ...]) -> float:
        """xi_{i1..ik'} with the column indices at their canonical values.

        The canonical columns are k+1..n in order, so shorthand((1,1,1,1))
        on (4,8) is the coordinate of E[1,5]^E[1,6]^E[1,7]^E[1,8].
        """
        split_cols = sorted({m for _, m in self.gens})
        if len(rows) != len(split_cols):
            raise ValueError("shorthand needs one row index per column")
        subset = [(i, m) for i, m in zip(rows, split_cols)]
        return self.coefficient(subset)


def plucker_coords(plane: TangentPlane, tol: float = 1e-9) -> PluckerCoords:
    """Minor expansion of the plane's wedge in the canonical E-monomial basis."""
    if plane.gram_defect() > tol:
        raise ValueError("plane basis not orthonormal")
    p = plane.degree
    subs = _subsets(len(plane.gens), p)
    cols = np.array(subs)  # (S, p)
    mats = plane.matrix[:, cols]  # (p, S, p)
    mats = np.transpose(mats, (1, 0, 2))
    values = np.linalg.det(mats)
    return PluckerCoords(plane.gens, p, values)


@lru_cache(maxsize=None)
def _wedge_pairs(dim: int, degree: int):
    """Index arrays for squaring a degree-`degree` multivector in R^dim."""
    subs = _subsets(dim, degree)
    pos = {s: i for i, s in enumerate(subs)}
    targets = _subsets(dim, 2 * degree)
    tpos = {s: i for i, s in enumerate(targets)}
    a_idx, b_idx, t_idx, signs = [], [], [], []
    for ia, sa in enumerate(subs):
        sa_set = set(sa)
        for sb in subs:
            if ia > pos[sb]:
                continue
            if sa_set & set(sb):
                continue
            merged = tuple(sorted(sa + sb))
            # count inversions of the concatenated word (sa, sb)
            inv = sum(1 for x in sa for y in sb if x > y)
            sign = -1.0 if inv % 2 else 1.0
            factor = 1.0 if sa == sb else 2.0  # unordered pairs counted once
            a_idx.append(ia)
            b_idx.append(pos[sb])
            t_idx.append(tpos[merged])
            signs.append(sign * factor)
    return (np.array(a_idx), np.array(b_idx), np.array(t_idx),
            np.array(signs), len(targets))


def plucker_residual(coords: PluckerCoords) -> float:
    """Euclidean norm of xi ^ xi; zero iff xi is decomposable."""
    dim = len(coords.gens)
    if 2 * coords.degree > dim:
        return 0.0
    a_idx, b_idx, t_idx, signs, n_targets = _wedge_pairs(dim, coords.degree)
    prods = signs * coords.values[a_idx] * coords.values[b_idx]
    out = np.bincount(t_idx, weights=prods, minlength=n_targets)
    return float(np.linalg.norm(out))


# ---------------------------------------------------------------------------
# samplers and special planes
# ---------------------------------------------------------------------------

def random_tangent_plane(split: Split, degree: int, seed, gens=None,
                         max_retries: int = 8) -> TangentPlane:
    """Orthonormal plane from Gaussian rows; deterministic per seed."""
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    dim = len(gens)
    if degree > dim:
        raise ValueError(f"degree {degree} exceeds tangent dimension {dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(max_retries):
        raw = rng.normal(size=(dim, degree))
        q, r = np.linalg.qr(raw)
        if np.min(np.abs(np.diag(r))) < 1e-10:
            continue
        m = (q * np.sign(np.diag(r))).T
        return TangentPlane(split, gens, m)
    raise RuntimeError("degenerate Gaussian samples exhausted retries")


def random_tangent_planes(split: Split, degree: int, count: int, seed, gens=None) -> np.ndarray:
    """Batch of orthonormal plane matrices, shape (count, degree, D)."""
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    dim = len(gens)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    raw = rng.normal(size=(count, dim, degree))
    q, r = np.linalg.qr(raw)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return np.transpose(q * signs[:, None, :], (0, 2, 1))


def axis_sphere_family_plane(split: Split) -> TangentPlane:
    """Tangent plane to the family of k-planes obtained by swinging the first
    axis: span{E[1,k+1], ..., E[1,n]}.  Maximizes the V-block Euler form."""
    if split.k not in (2, 4, 8):
        raise ValueError(f"axis family unsupported for U-rank {split.k}")
    gens = tangent_generators(split)
    rows = []
    exact = []
    for m in split.v_indices:
        row = np.zeros(len(gens))
        row[gens.index((1, m))] = 1.0
        rows.append(row)
        exact.append(tuple(Fraction(1) if g == (1, m) else Fraction(0) for g in gens))
    return TangentPlane(split, gens, np.array(rows), tuple(exact))


def quaternionic_tangent_plane(split: Split) -> TangentPlane:
    """Tangent plane at the base 4-plane to the quaternionic-line family in
    R^8, for the standard structure where right multiplication by 1, i, j, k
    maps the base plane onto its complement.  Oriented so the V-block Euler
    form is positive on it."""
    if (split.k, split.n) != (4, 8):
        raise ValueError("quaternionic plane needs split (4,8)")
    gens = tangent_generators(split)
    rows = []
    exact = []
    for unit in range(4):
        r_mat = right_mult_matrix(QUATERNION_TENSOR, unit)
        row = np.zeros(len(gens))
        row_exact = [Fraction(0)] * len(gens)
        for a in range(4):
            img = r_mat[:, a]  # e_a * e_unit in the complement copy
            for m in range(4):
                if img[m]:
                    pos = gens.index((a + 1, m + 5))
                    row[pos] = img[m] / 2.0
                    row_exact[pos] = Fraction(int(img[m]), 2)
        rows.append(row)
        exact.append(tuple(row_exact))
    return TangentPlane(split, gens, np.array(rows), tuple(exact))


def complex_tangent_plane(split: Split) -> TangentPlane:
    """Tangent plane to the complex-line family for the complex structure
    pairing coordinates (1,2), (3,4), ...; the U-rank must be 2."""
    if split.k != 2 or split.n % 2:
        raise ValueError("complex plane needs split (2, even)")
    gens = tangent_generators(split)
    rows = []
    for m in range(3, split.n + 1, 2):
        for vec in ([((1, m), 1.0), ((2, m + 1), 1.0)],
                    [((1, m + 1), 1.0), ((2, m), -1.0)]):
            row = np.zeros(len(gens))
            for g, q in vec:
                row[gens.index(g)] = q
            rows.append(row)
    m = np.array(rows)
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    return TangentPlane(split, gens, m, None)


def plane_wedge_vector(plane: TangentPlane) -> PluckerCoords:
    return plucker_coords(plane)
