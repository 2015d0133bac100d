"""Exact sparse exterior algebra over the rotation coframe mu[i,j].

The generators are the left-invariant 1-forms mu[i,j], 1 <= i < j <= n, of
the rank-n rotation Lie algebra; mu[j,i] = -mu[i,j] and mu[i,i] = 0.  All
coefficients are exact: rational numbers times an integer power of pi
(:class:`ScalarPi`).  The exterior derivative is the Chevalley-Eilenberg
differential fixed by the structure equation

    d mu[i,j] = - sum_k mu[i,k] ^ mu[k,j]        (d mu = -mu ^ mu)

which is the one sign convention everything else in this package hangs off;
it is pinned by the transgression tests in :mod:`calfol.charforms`.

Monomials are stored as lexicographically sorted tuples of (i, j) pairs, so
equality of forms is equality of dictionaries and every symbolic identity
here is decided exactly, never numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math
from typing import Iterable, Mapping, Sequence

Gen = tuple[int, int]
Monomial = tuple[Gen, ...]


# ---------------------------------------------------------------------------
# scalars
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarPi:
    """Exact scalar: a finite sum of (rational) * pi**e over integer e.

    Single-grade values (one pi power) expose ``num``, ``den`` and
    ``pi_exp``; sums of different grades are kept formally, so equality
    against a literal like 3/(2 pi^2) is exact.  Zero is the empty sum and
    presents as (0, 1, 0).
    """

    terms: tuple[tuple[int, Fraction], ...] = ()

    @staticmethod
    def of(num: int | Fraction, den: int = 1, pi_exp: int = 0) -> "ScalarPi":
        q = Fraction(num, den)
        if q == 0:
            return ScalarPi()
        return ScalarPi(((pi_exp, q),))

    @staticmethod
    def from_terms(terms: Mapping[int, Fraction]) -> "ScalarPi":
        items = tuple(sorted((e, q) for e, q in terms.items() if q != 0))
        return ScalarPi(items)

    def is_zero(self) -> bool:
        return not self.terms

    def is_single_grade(self) -> bool:
        return len(self.terms) <= 1

    @property
    def num(self) -> int:
        return self._single().numerator

    @property
    def den(self) -> int:
        return self._single().denominator

    @property
    def pi_exp(self) -> int:
        if not self.terms:
            return 0
        return self.terms[0][0]

    def _single(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if len(self.terms) > 1:
            raise ValueError(f"scalar {self} has mixed pi grades")
        return self.terms[0][1]

    def __add__(self, other: "ScalarPi") -> "ScalarPi":
        if not isinstance(other, ScalarPi):
            return NotImplemented
        acc = dict(self.terms)
        for e, q in other.terms:
            acc[e] = acc.get(e, Fraction(0)) + q
        return ScalarPi.from_terms(acc)

    def __sub__(self, other: "ScalarPi") -> "ScalarPi":
        return self + (-other)

    def __neg__(self) -> "ScalarPi":
        return ScalarPi(tuple((e, -q) for e, q in self.terms))

    def __mul__(self, other):
        if isinstance(other, ScalarPi):
            acc: dict[int, Fraction] = {}
            for e1, q1 in self.terms:
                for e2, q2 in other.terms:
                    e = e1 + e2
                    acc[e] = acc.get(e, Fraction(0)) + q1 * q2
            return ScalarPi.from_terms(acc)
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return ScalarPi()
            return ScalarPi(tuple((e, q * other) for e, q in self.terms))
        return NotImplemented

    __rmul__ = __mul__

    def __float__(self) -> float:
        return math.fsum(float(q) * math.pi**e for e, q in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = [f"{q.numerator}/{q.denominator} * pi^{e}" for e, q in self.terms]
        if len(parts) == 1:
            return parts[0]
        return "(" + " + ".join(parts) + ")"

    __repr__ = __str__


SCALAR_ZERO = ScalarPi()
SCALAR_ONE = ScalarPi.of(1)


# ---------------------------------------------------------------------------
# monomials
# ---------------------------------------------------------------------------

def normalize_generator(a: int, b: int, rank: int) -> tuple[int, Gen | None]:
    """Canonicalize a raw index pair: (sign, (i, j)) with i < j, or sign 0."""
    if not (1 <= a <= rank and 1 <= b <= rank):
        raise ValueError(f"generator index ({a},{b}) outside 1..{rank}")
    if a == b:
        return 0, None
    if a < b:
        return 1, (a, b)
    return -1, (b, a)


def normalize_monomial(raw: Iterable[tuple[int, int]], rank: int) -> tuple[int, Monomial | None]:
    """Sort a wedge word of index pairs into canonical form.

    Returns (sign, monomial) with sign in {-1, 0, +1}; sign is 0 when a
    1-form repeats or a pair is degenerate, in which case the monomial is
    None.  sign * monomial equals the input word.
    """
    sign = 1
    gens: list[Gen] = []
    for a, b in raw:
        s, g = normalize_generator(a, b, rank)
        if s == 0:
            return 0, None
        sign *= s
        gens.append(g)  # type: ignore[arg-type]
    # insertion sort, counting transpositions of 1-forms
    for i in range(1, len(gens)):
        g = gens[i]
        j = i - 1
        while j >= 0 and gens[j] > g:
            gens[j + 1] = gens[j]
            j -= 1
            sign = -sign
        gens[j + 1] = g
        if j >= 0 and gens[j] == g:
            return 0, None
    return sign, tuple(gens)


def merge_monomials(m1: Monomial, m2: Monomial) -> tuple[int, Monomial | None]:
    """Merge two canonical monomials; sign counts crossings, 0 on repeats."""
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    out: list[Gen] = []
    i = j = 0
    sign = 1
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        a, b = m1[i], m2[j]
        if a == b:
            return 0, None
        if a < b:
            out.append(a)
            i += 1
        else:
            out.append(b)
            j += 1
            if (n1 - i) % 2:
                sign = -sign
    out.extend(m1[i:])
    out.extend(m2[j:])
    return sign, tuple(out)


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------

class FormExpr:
    """Sparse exterior polynomial in canonical monomials with ScalarPi coefficients.

    Immutable by convention: no method mutates ``self``; all operations
    return fresh forms, so instances are safe to share.
    """

    __slots__ = ("rank", "_terms")

    def __init__(self, rank: int, terms: Mapping[Monomial, ScalarPi] | None = None):
        if rank < 2:
            raise ValueError("rank must be at least 2")
        self.rank = rank
        clean: dict[Monomial, ScalarPi] = {}
        if terms:
            for mono, coef in terms.items():
                if not coef.is_zero():
                    clean[mono] = coef
        self._terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(rank: int) -> "FormExpr":
        return FormExpr(rank)

    @staticmethod
    def scalar(rank: int, coef: ScalarPi) -> "FormExpr":
        return FormExpr(rank, {(): coef})

    @staticmethod
    def mu(rank: int, a: int, b: int) -> "FormExpr":
        s, g = normalize_generator(a, b, rank)
        if s == 0:
            return FormExpr(rank)
        return FormExpr(rank, {(g,): ScalarPi.of(s)})

    @staticmethod
    def from_raw(rank: int, raw_terms: Iterable[tuple[ScalarPi, Sequence[tuple[int, int]]]]) -> "FormExpr":
        acc: dict[Monomial, ScalarPi] = {}
        for coef, word in raw_terms:
            s, mono = normalize_monomial(word, rank)
            if s == 0:
                continue
            add = coef * s
            prev = acc.get(mono)
            acc[mono] = add if prev is None else prev + add
        return FormExpr(rank, acc)

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, ScalarPi]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int | None:
        """Homogeneous degree, or None for the zero form / mixed degrees."""
        degs = {len(m) for m in self._terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def term_count(self) -> int:
        return len(self._terms)

    def coefficient(self, word: Sequence[tuple[int, int]]) -> ScalarPi:
        s, mono = normalize_monomial(word, self.rank)
        if s == 0:
            return SCALAR_ZERO
        coef = self._terms.get(mono)
        if coef is None:
            return SCALAR_ZERO
        return coef * s

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormExpr):
            return NotImplemented
        return self.rank == other.rank and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FormExpr(rank={self.rank}, terms={len(self._terms)})"

    # -- arithmetic --------------------------------------------------------

    def _check_rank(self, other: "FormExpr") -> None:
        if self.rank != other.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other: "FormExpr") -> "FormExpr":
        self._check_rank(other)
        acc = dict(self._terms)
        for mono, coef in other._terms.items():
            prev = acc.get(mono)
            acc[mono] = coef if prev is None else prev + coef
        return FormExpr(self.rank, acc)

    def __sub__(self, other: "FormExpr") -> "FormExpr":
        return self + (-other)

    def __neg__(self) -> "FormExpr":
        return FormExpr(self.rank, {m: -c for m, c in self._terms.items()})

    def __mul__(self, scalar) -> "FormExpr":
        if isinstance(scalar, (int, Fraction, ScalarPi)):
            return FormExpr(self.rank, {m: c * scalar for m, c in self._terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def wedge(self, other: "FormExpr") -> "FormExpr":
        return wedge(self, other)

    def d(self) -> "FormExpr":
        return ce_differential(self)

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form: one `coef * mu[i,j]^...` term per line."""
        if not self._terms:
            return "0"
        lines = []
        for mono in sorted(self._terms, key=lambda m: (len(m), m)):
            coef = self._terms[mono]
            if mono:
                word = "^".join(f"mu[{i},{j}]" for i, j in mono)
                lines.append(f"{coef} * {word}")
            else:
                lines.append(str(coef))
        return "\n".join(lines)


def wedge(a: FormExpr, b: FormExpr) -> FormExpr:
    """Exterior product in canonical form; exact and graded-anticommutative."""
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")
    acc: dict[Monomial, ScalarPi] = {}
    bt = b._terms
    for m1, c1 in a._terms.items():
        for m2, c2 in bt.items():
            s, mono = merge_monomials(m1, m2)
            if s == 0:
                continue
            add = (c1 * c2) * s
            prev = acc.get(mono)
            acc[mono] = add if prev is None else prev + add
    return FormExpr(a.rank, acc)


def is_zero(a: FormExpr) -> bool:
    return a.is_zero()


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg differential
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _d_generator(i: int, j: int, rank: int) -> tuple[tuple[int, Gen, Gen], ...]:
    # d mu[i,j] = - sum_k mu[i,k] ^ mu[k,j], k != i, j
    out = []
    for k in range(1, rank + 1):
        if k == i or k == j:
            continue
        s1, g1 = normalize_generator(i, k, rank)
        s2, g2 = normalize_generator(k, j, rank)
        sign = -s1 * s2
        if g1 > g2:  # type: ignore[operator]
            g1, g2 = g2, g1
            sign = -sign
        out.append((sign, g1, g2))
    return tuple(out)


def ce_differential(a: FormExpr) -> FormExpr:
    """Exterior derivative on left-invariant forms (graded Leibniz, d^2 = 0)."""
    rank = a.rank
    acc: dict[Monomial, ScalarPi] = {}
    for mono, coef in a._terms.items():
        for t, gen in enumerate(mono):
            rest = mono[:t] + mono[t + 1:]
            pos_sign = -1 if t % 2 else 1
            for s, g1, g2 in _d_generator(gen[0], gen[1], rank):
                ms, merged = merge_monomials((g1, g2), rest)
                if ms == 0:
                    continue
                add = coef * (s * ms * pos_sign)
                prev = acc.get(merged)
                acc[merged] = add if prev is None else prev + add
    return FormExpr(rank, acc)


# ---------------------------------------------------------------------------
# dual vectors and evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualVector:
    """Exact linear combination of the dual basis vectors E[i,j].

    The pairing is <mu[a,b], E[c,d]> = 1 iff (a,b) = (c,d) canonically, with
    sign transport for reversed pairs.
    """

    rank: int
    components: tuple[tuple[Gen, Fraction], ...]

    @staticmethod
    def basis(rank: int, a: int, b: int) -> "DualVector":
        s, g = normalize_generator(a, b, rank)
        if s == 0:
            raise ValueError("degenerate dual basis index")
        return DualVector(rank, ((g, Fraction(s)),))

    @staticmethod
    def combination(rank: int, parts: Mapping[tuple[int, int], Fraction | int]) -> "DualVector":
        acc: dict[Gen, Fraction] = {}
        for (a, b), q in parts.items():
            s, g = normalize_generator(a, b, rank)
            if s == 0:
                continue
            acc[g] = acc.get(g, Fraction(0)) + Fraction(q) * s
        items = tuple(sorted((g, q) for g, q in acc.items() if q != 0))
        return DualVector(rank, items)

    def component(self, g: Gen) -> Fraction:
        for gen, q in self.components:
            if gen == g:
                return q
        return Fraction(0)

    def __add__(self, other: "DualVector") -> "DualVector":
        acc = {g: q for g, q in self.components}
        for g, q in other.components:
            acc[g] = acc.get(g, Fraction(0)) + q
        return DualVector(self.rank, tuple(sorted((g, q) for g, q in acc.items() if q != 0)))

    def scaled(self, q: Fraction | int) -> "DualVector":
        q = Fraction(q)
        return DualVector(self.rank, tuple((g, c * q) for g, c in self.components))


def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    n = len(m)
    m = [row[:] for row in m]
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if m[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f == 0:
                continue
            row_r, row_c = m[r], m[col]
            for c in range(col, n):
                row_r[c] -= f * row_c[c]
    return det


def evaluate(a: FormExpr, vectors: Sequence[DualVector]) -> ScalarPi:
    """Alternating multilinear pairing of a homogeneous form with dual vectors."""
    deg = a.degree()
    if deg is None and not a.is_zero():
        raise ValueError("form is not homogeneous")
    if a.is_zero():
        return SCALAR_ZERO
    if deg != len(vectors):
        raise ValueError(f"arity mismatch: degree {deg} form, {len(vectors)} vectors")
    for v in vectors:
        if v.rank != a.rank:
            raise ValueError("dual vector rank mismatch")
    if deg == 0:
        return a._terms.get((), SCALAR_ZERO)
    comps = [dict(v.components) for v in vectors]
    total = SCALAR_ZERO
    for mono, coef in a._terms.items():
        matrix = [[comps[c].get(g, Fraction(0)) for c in range(deg)] for g in mono]
        if any(all(x == 0 for x in row) for row in matrix):
            continue
        det = _det_fraction(matrix)
        if det != 0:
            total = total + coef * det
    return total


def evaluate_basis(a: FormExpr, word: Sequence[tuple[int, int]]) -> ScalarPi:
    """Fast evaluation against a pure tuple of dual basis vectors E[i,j]."""
    s, mono = normalize_monomial(word, a.rank)
    if s == 0:
        return SCALAR_ZERO
    coef = a._terms.get(mono)
    if coef is None:
        return SCALAR_ZERO
    return coef * s


# ---------------------------------------------------------------------------
# index relabeling and infinitesimal rotations
# ---------------------------------------------------------------------------

def apply_index_map(a: FormExpr, mapping: Mapping[int, int]) -> FormExpr:
    """Algebra automorphism induced by a permutation of the index set 1..n."""
    rank = a.rank
    full = {i: mapping.get(i, i) for i in range(1, rank + 1)}
    if sorted(full.values()) != list(range(1, rank + 1)):
        raise ValueError("mapping is not a permutation of 1..rank")
    acc: dict[Monomial, ScalarPi] = {}
    for mono, coef in a._terms.items():
        word = [(full[i], full[j]) for i, j in mono]
        s, new = normalize_monomial(word, rank)
        if s == 0:
            continue
        add = coef * s
        prev = acc.get(new)
        acc[new] = add if prev is None else prev + add
    return FormExpr(rank, acc)


def rotation_derivative(a: FormExpr, p: int, q: int) -> FormExpr:
    """Derivative of a form along the infinitesimal rotation in the (p,q) plane.

    This is the coadjoint action of the rotation generator on the coframe,
    extended as a derivation; a form is invariant under the corresponding
    one-parameter subgroup iff the result is zero.
    """
    rank = a.rank
    if p == q:
        raise ValueError("rotation plane needs two distinct indices")

    def delta_gen(i: int, j: int) -> list[tuple[int, tuple[int, int]]]:
        out = []
        if i == p:
            out.append((1, (q, j)))
        if i == q:
            out.append((-1, (p, j)))
        if j == p:
            out.append((1, (i, q)))
        if j == q:
            out.append((-1, (i, p)))
        return out

    acc: dict[Monomial, ScalarPi] = {}
    for mono, coef in a._terms.items():
        for t, (i, j) in enumerate(mono):
            rest = mono[:t] + mono[t + 1:]
            for ds, (x, y) in delta_gen(i, j):
                s0, g = normalize_generator(x, y, rank)
                if s0 == 0:
                    continue
                ms, merged = merge_monomials((g,), rest)
                if ms == 0:
                    continue
                # position sign: single generator re-inserted where it was
                pos_sign = -1 if t % 2 else 1
                # merge_monomials counts crossings against rest from the left,
                # matching insertion at slot 0; fold the slot-t sign in.
                add = coef * (ds * s0 * ms * pos_sign)
                prev = acc.get(merged)
                acc[merged] = add if prev is None else prev + add
    return FormExpr(rank, acc)
