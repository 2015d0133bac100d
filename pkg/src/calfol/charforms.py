"""Invariant forms for the split rotation coframe: curvature blocks, Euler
(Pfaffian) forms, first Pontryagin forms, the transgression, and the
calibration Te ^ euler_v.

All constructors work at the base point of the homogeneous model, where the
U-block occupies indices 1..k and the V-block k+1..n.  Curvatures are the
mixed-coframe quadratics

    omega_u[i,j]  = sum_{m>k} mu[i,m] ^ mu[j,m]       (i, j <= k)
    omega_v[p,q]  = sum_{i<=k} mu[i,p] ^ mu[i,q]      (p, q > k)

and the Euler form of an even-rank block is the Pfaffian combination of its
curvature entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
import itertools
import math
import time

import numpy as np

from .exalg import (
    FormExpr,
    Monomial,
    ScalarPi,
    apply_index_map,
    ce_differential,
    merge_monomials,
    wedge,
)


@dataclass(frozen=True)
class Split:
    """Block split of the index range 1..n into U = 1..k and V = k+1..n."""

    k: int
    n: int

    def __post_init__(self):
        if not (1 <= self.k < self.n):
            raise ValueError(f"invalid split ({self.k},{self.n})")

    @property
    def u_indices(self) -> range:
        return range(1, self.k + 1)

    @property
    def v_indices(self) -> range:
        return range(self.k + 1, self.n + 1)

    def block(self, name: str) -> range:
        if name == "u":
            return self.u_indices
        if name == "v":
            return self.v_indices
        raise ValueError("block must be 'u' or 'v'")

    def __str__(self) -> str:
        return f"({self.k},{self.n})"


class Normalization(Enum):
    """Euler-form scaling.

    LITERAL uses 1/(2 pi) for a rank-2 block and 1/(2 pi^2) for a rank-4
    block (the constants the evaluation table and comass targets are stated
    in); blocks of rank > 4 fall back to the Pfaffian scaling.  PFAFFIAN is
    Pf(Omega / 2 pi), i.e. 1/(2 pi)^m for rank 2m.
    """

    LITERAL = "literal"
    PFAFFIAN = "pfaffian"


def curvature_u(split: Split, i: int, j: int) -> FormExpr:
    """Curvature entry of the U-block; antisymmetric in (i, j)."""
    if i not in split.u_indices or j not in split.u_indices:
        raise ValueError(f"indices ({i},{j}) outside U-block of {split}")
    if i == j:
        raise ValueError("curvature entry needs i != j")
    sign = 1
    if i > j:
        i, j = j, i
        sign = -1
    terms = [(ScalarPi.of(sign), [(i, m), (j, m)]) for m in split.v_indices]
    return FormExpr.from_raw(split.n, terms)


def curvature_v(split: Split, p: int, q: int) -> FormExpr:
    """Curvature entry of the V-block; antisymmetric in (p, q)."""
    if p not in split.v_indices or q not in split.v_indices:
        raise ValueError(f"indices ({p},{q}) outside V-block of {split}")
    if p == q:
        raise ValueError("curvature entry needs p != q")
    sign = 1
    if p > q:
        p, q = q, p
        sign = -1
    terms = [(ScalarPi.of(sign), [(i, p), (i, q)]) for i in split.u_indices]
    return FormExpr.from_raw(split.n, terms)


# ---------------------------------------------------------------------------
# Pfaffians
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def perfect_matchings(size: int) -> tuple[tuple[int, tuple[tuple[int, int], ...]], ...]:
    """Signed perfect matchings of positions 0..size-1 (size even).

    The sign is that of the permutation (a1, b1, a2, b2, ...), so that
    Pf(A) = sum over matchings of sign * prod A[a,b].
    """
    if size % 2:
        raise ValueError("perfect matchings need an even number of points")

    def rec(points: tuple[int, ...]):
        if not points:
            yield 1, ()
            return
        a = points[0]
        for t, b in enumerate(points[1:]):
            rest = points[1:t + 1] + points[t + 2:]
            # moving b next to a crosses t elements
            s0 = -1 if t % 2 else 1
            for s, pairs in rec(rest):
                yield s0 * s, ((a, b),) + pairs

    return tuple(rec(tuple(range(size))))


def pfaffian_numeric(a: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix by the matching-sum formula."""
    a = np.asarray(a, dtype=float)
    size = a.shape[0]
    if a.shape != (size, size):
        raise ValueError("matrix must be square")
    if size % 2:
        return 0.0
    total = 0.0
    for sign, pairs in perfect_matchings(size):
        prod = float(sign)
        for i, j in pairs:
            prod *= a[i, j]
        total += prod
    return total


def _euler_coefficient(block_rank: int, norm: Normalization) -> ScalarPi:
    m = block_rank // 2
    if norm is Normalization.LITERAL and block_rank in (2, 4):
        return ScalarPi.of(1, 2, -m)
    return ScalarPi.of(1, 2**m, -m)


def euler_form(split: Split, block: str, norm: Normalization = Normalization.LITERAL) -> FormExpr:
    """Euler form of a block: scaled Pfaffian of its curvature matrix."""
    idx = list(split.block(block))
    if len(idx) % 2:
        raise ValueError(f"{block}-block of {split} has odd rank {len(idx)}")
    curv = curvature_u if block == "u" else curvature_v
    coef = _euler_coefficient(len(idx), norm)
    total = FormExpr.zero(split.n)
    for sign, pairs in perfect_matchings(len(idx)):
        prod = FormExpr.scalar(split.n, ScalarPi.of(sign))
        for a, b in pairs:
            prod = wedge(prod, curv(split, idx[a], idx[b]))
        total = total + prod
    return total * coef


def pontryagin1(split: Split, block: str) -> FormExpr:
    """First Pontryagin form: -(1/8 pi^2) * sum_{i<j} 2 * omega_ij ^ omega_ij."""
    idx = list(split.block(block))
    curv = curvature_u if block == "u" else curvature_v
    total = FormExpr.zero(split.n)
    for i, j in itertools.combinations(idx, 2):
        om = curv(split, i, j)
        total = total + wedge(om, om)
    return total * ScalarPi.of(-2, 8, -2)


def _mu(split: Split, a: int, b: int) -> FormExpr:
    return FormExpr.mu(split.n, a, b)


def _omega_squared(split: Split, i: int, j: int) -> FormExpr:
    # (omega ^ omega)_ij for the U-block truncation omega_ij = mu[i,j], i,j <= k
    total = FormExpr.zero(split.n)
    for l in split.u_indices:
        if l == i or l == j:
            continue
        total = total + wedge(_mu(split, i, l), _mu(split, l, j))
    return total


def transgression(split: Split) -> FormExpr:
    """Chern-Simons transgression Te with d(Te) = euler_form(U) exactly.

    U-rank 2: Te = (1/2 pi) mu[1,2].  U-rank 4: the transgression of the
    Pfaffian, Te = c (P(omega, Omega) - (1/3) P(omega, omega^omega)) with P
    the polarized Pfaffian; restricted to directions tangent to the flag of
    lines in U-planes (where mu[u,v] = 0 for 2 <= u < v <= 4) it reduces to

        c (mu[1,2]^mu[1,3]^mu[1,4] + mu[1,2]^mu[3,m]^mu[4,m]
           - mu[1,3]^mu[2,m]^mu[4,m] + mu[1,4]^mu[2,m]^mu[3,m]),

    the base-point expression the comass and scan evaluations see.
    """
    n = split.n
    if split.k == 2:
        return FormExpr.from_raw(n, [(ScalarPi.of(1, 2, -1), [(1, 2)])])
    if split.k == 4:
        # polarized Pfaffian P(X, Y) summed over the three matchings of 1..4
        matchings = [((1, 2), (3, 4), 1), ((1, 3), (2, 4), -1), ((1, 4), (2, 3), 1)]

        def pol(yform) -> FormExpr:
            total = FormExpr.zero(n)
            for (a, b), (c, d), sign in matchings:
                t1 = wedge(_mu(split, a, b), yform(c, d))
                t2 = wedge(_mu(split, c, d), yform(a, b))
                total = total + (t1 + t2) * ScalarPi.of(sign, 2)
            return total

        te = pol(lambda c, d: curvature_u(split, c, d))
        te = te - pol(lambda c, d: _omega_squared(split, c, d)) * Fraction(1, 3)
        return te * ScalarPi.of(1, 2, -2)
    raise ValueError(f"transgression unsupported for U-rank {split.k}")


def transgression_flag_restriction(split: Split) -> FormExpr:
    """Te with monomials containing isotropy generators mu[u,v], 2<=u<v<=k dropped.

    This is the form of Te seen by any plane tangent to the flag of lines in
    U-planes; it evaluates identically to `transgression` there.
    """
    te = transgression(split)
    iso = {(u, v) for u in range(2, split.k + 1) for v in range(u + 1, split.k + 1)}
    kept = {m: c for m, c in te.terms.items() if not any(g in iso for g in m)}
    return FormExpr(split.n, kept)


def calibration_phi(split: Split, comass_constant: float | ScalarPi | None = None) -> FormExpr:
    """The calibration Te ^ euler_v (times the comass constant when known)."""
    phi = wedge(transgression(split), euler_form(split, "v", Normalization.LITERAL))
    if comass_constant is None or comass_constant == 1:
        return phi
    if isinstance(comass_constant, ScalarPi):
        return phi * comass_constant
    return phi * Fraction(comass_constant).limit_denominator(10**12)


# ---------------------------------------------------------------------------
# exact orthogonality verification
# ---------------------------------------------------------------------------

def _integer_terms(form: FormExpr) -> tuple[ScalarPi, dict[Monomial, int]]:
    """Factor a form as scale * (integer combination of monomials)."""
    terms = form.terms
    if not terms:
        return ScalarPi.of(1), {}
    exps = {c.pi_exp for c in terms.values()}
    if len(exps) != 1 or not all(c.is_single_grade() for c in terms.values()):
        raise ValueError("form is not homogeneous in pi grade")
    fracs = {m: Fraction(c.num, c.den) for m, c in terms.items()}
    den_lcm = 1
    for q in fracs.values():
        den_lcm = den_lcm * q.denominator // math.gcd(den_lcm, q.denominator)
    num_gcd = 0
    for q in fracs.values():
        num_gcd = math.gcd(num_gcd, abs(q.numerator * (den_lcm // q.denominator)))
    num_gcd = num_gcd or 1
    scale = ScalarPi.of(num_gcd, den_lcm, exps.pop())
    ints = {m: int(q * den_lcm) // num_gcd for m, q in fracs.items()}
    return scale, ints


def _check_equivariance(ints: dict[Monomial, int], rank: int, swaps) -> None:
    """Assert a term map transforms by +-1 under each index transposition."""
    for a, b in swaps:
        mapping = {a: b, b: a}
        mapped: dict[Monomial, int] = {}
        form = FormExpr(rank, {m: ScalarPi.of(c) for m, c in ints.items()})
        out = apply_index_map(form, mapping)
        for m, c in out.terms.items():
            mapped[m] = c.num
        for chi in (1, -1):
            if mapped == {m: chi * c for m, c in ints.items()}:
                break
        else:
            raise AssertionError(f"term map not equivariant under swap ({a},{b})")


def _usage_patterns(pairs: int):
    """Integer partitions of `pairs` (usage multiplicities of one index)."""
    def rec(total, largest):
        if total == 0:
            yield ()
            return
        for part in range(min(total, largest), 0, -1):
            for rest in rec(total - part, part):
                yield (part,) + rest
    return list(rec(pairs, pairs))


def _normalized_multiset(pattern, indices) -> tuple[int, ...]:
    """The degree-sorted multiset over `indices` realizing a usage pattern.

    Multiplicities are assigned in decreasing order to the smallest indices;
    as a multiset this representative is unique per pattern (ties between
    equal multiplicities do not change the multiset).
    """
    ms: list[int] = []
    for pos, part in enumerate(sorted(pattern, reverse=True)):
        ms.extend([indices[pos]] * part)
    return tuple(sorted(ms))


def _col_multiset(mono: Monomial, k: int) -> tuple[int, ...]:
    cols = sorted(j for _, j in mono)
    # each column appears an even number of times in a U-euler monomial
    return tuple(cols[::2])


def _row_multiset(mono: Monomial, k: int) -> tuple[int, ...]:
    rows = sorted(i for i, _ in mono)
    return tuple(rows[::2])


def euler_orthogonality(split: Split, method: str = "auto") -> dict:
    """Exact check that euler_u ^ euler_v vanishes identically.

    method="direct" expands the full wedge product; method="reduced" uses
    the equivariance of both factors under row/column relabelings to check
    only degree-sorted representative product monomials (needed for the
    (8,16) case, where the direct product has ~10^10 term pairs).
    Both are exact; they are cross-checked against each other in tests.
    """
    if method == "auto":
        method = "reduced" if split.n - split.k >= 8 or split.k >= 8 else "direct"
    t0 = time.perf_counter()
    eu = euler_form(split, "u", Normalization.PFAFFIAN)
    ev = euler_form(split, "v", Normalization.PFAFFIAN)
    before = eu.term_count() * ev.term_count()
    if method == "direct":
        prod = wedge(eu, ev)
        after = prod.term_count()
        exact = prod.is_zero()
    elif method == "reduced":
        leftover = _reduced_product_support(split, eu, ev)
        after = len(leftover)
        exact = not leftover
    else:
        raise ValueError(f"unknown method {method!r}")
    return {
        "split": str(split),
        "method": method,
        "exact": exact,
        "term_count_before": before,
        "term_count_after": after,
        "elapsed_s": round(time.perf_counter() - t0, 3),
    }


def _reduced_product_support(split: Split, eu: FormExpr, ev: FormExpr,
                             with_stats: bool = False):
    """Nonzero coefficients of eu ^ ev on degree-sorted representatives.

    eu monomials use every U-row exactly once and V-columns in pairs; ev
    monomials use every V-column exactly once and U-rows in pairs.  Both term
    maps are (+-1)-equivariant under permutations of U-rows and of V-columns
    (asserted below), and the wedge is equivariant under the induced algebra
    automorphism, so the product vanishes iff its coefficients vanish on
    monomials whose row/column usage counts are non-increasing along each
    block.  Those are enumerated cell by cell.

    With `with_stats` the per-cell disjoint-pair counts are returned too;
    multiplying them by the number of relabelings of each cell reproduces the
    total disjoint-pair count of the direct product, which is how tests pin
    the coverage of the enumeration.
    """
    k, n = split.k, split.n
    rank = split.n
    _, a_int = _integer_terms(eu)
    _, b_int = _integer_terms(ev)

    u = list(split.u_indices)
    v = list(split.v_indices)
    swaps = [(u[i], u[i + 1]) for i in range(len(u) - 1)]
    swaps += [(v[i], v[i + 1]) for i in range(len(v) - 1)]
    _check_equivariance(a_int, rank, swaps)
    _check_equivariance(b_int, rank, swaps)

    # structural facts the cell decomposition and collision argument rely on
    for mono in a_int:
        assert sorted(i for i, _ in mono) == u, "euler_u monomial must cover U-rows once"
        cols = sorted(j for _, j in mono)
        assert all(cols[t] == cols[t + 1] for t in range(0, len(cols), 2)), \
            "euler_u monomial columns must pair up"
    for mono in b_int:
        assert sorted(j for _, j in mono) == v, "euler_v monomial must cover V-columns once"
        rows = sorted(i for i, _ in mono)
        assert all(rows[t] == rows[t + 1] for t in range(0, len(rows), 2)), \
            "euler_v monomial rows must pair up"

    m_u = k // 2
    m_v = (n - k) // 2
    a_by_cols: dict[tuple[int, ...], list] = {}
    for mono, c in a_int.items():
        a_by_cols.setdefault(_col_multiset(mono, k), []).append((mono, c))
    b_by_rows: dict[tuple[int, ...], list] = {}
    for mono, c in b_int.items():
        b_by_rows.setdefault(_row_multiset(mono, k), []).append((mono, c))

    leftover: dict[Monomial, int] = {}
    stats: dict[tuple, int] = {}
    for x_pat in _usage_patterns(m_u):
        if m_u > 1 and max(x_pat) == m_u:
            # a column used by all k/2 pairs carries every U-row; the extra
            # occurrence of that column in any ev monomial collides, so the
            # whole cell vanishes termwise
            continue
        for y_pat in _usage_patterns(m_v):
            if m_v > 1 and max(y_pat) == m_v:
                continue
            if m_u == 1 or m_v == 1:
                # rank-2 side: its single column (row) carries the whole
                # block, so every pair collides; nothing to enumerate
                continue
            cols = _normalized_multiset(x_pat, v)
            ts = a_by_cols.get(cols, [])
            if not ts:
                continue
            rows = _normalized_multiset(y_pat, u)
            tps = b_by_rows.get(rows, [])
            pairs = 0
            for mono_a, ca in ts:
                for mono_b, cb in tps:
                    s, merged = merge_monomials(mono_a, mono_b)
                    if s == 0:
                        continue
                    pairs += 1
                    leftover[merged] = leftover.get(merged, 0) + s * ca * cb
            stats[(x_pat, y_pat)] = pairs
    leftover = {m: c for m, c in leftover.items() if c}
    if with_stats:
        return leftover, stats
    return leftover


def euler_closedness(split: Split, block: str) -> dict:
    """Exact check that d(euler form) = 0."""
    t0 = time.perf_counter()
    e = euler_form(split, block, Normalization.PFAFFIAN)
    de = ce_differential(e)
    return {
        "split": str(split),
        "block": block,
        "exact": de.is_zero(),
        "term_count_before": e.term_count(),
        "term_count_after": de.term_count(),
        "elapsed_s": round(time.perf_counter() - t0, 3),
    }
