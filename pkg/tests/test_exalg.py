import random
from fractions import Fraction

import pytest

from calfol.exalg import (
    DualVector,
    FormExpr,
    ScalarPi,
    apply_index_map,
    ce_differential,
    evaluate,
    evaluate_basis,
    normalize_monomial,
    wedge,
)


def mu(rank, a, b):
    return FormExpr.mu(rank, a, b)


class TestScalarPi:
    def test_zero_is_canonical(self):
        z = ScalarPi.of(0, 5, 3)
        assert z.is_zero()
        assert (z.num, z.den, z.pi_exp) == (0, 1, 0)

    def test_reduction(self):
        s = ScalarPi.of(6, 4, -2)
        assert (s.num, s.den, s.pi_exp) == (3, 2, -2)

    def test_same_grade_addition(self):
        s = ScalarPi.of(1, 2, -2) + ScalarPi.of(1, 1, -2)
        assert s == ScalarPi.of(3, 2, -2)

    def test_mixed_grades_held_formally(self):
        s = ScalarPi.of(1, 2, 0) + ScalarPi.of(3, 4, -2)
        assert not s.is_single_grade()
        with pytest.raises(ValueError):
            _ = s.num
        # exact comparison, not float comparison
        assert s - ScalarPi.of(3, 4, -2) == ScalarPi.of(1, 2)

    def test_multiplication_adds_exponents(self):
        s = ScalarPi.of(1, 2, -1) * ScalarPi.of(1, 2, -1)
        assert s == ScalarPi.of(1, 4, -2)

    def test_str_format(self):
        assert str(ScalarPi.of(3, 2, -2)) == "3/2 * pi^-2"
        assert str(ScalarPi()) == "0"


class TestNormalizeMonomial:
    def test_generator_antisymmetry(self):
        assert normalize_monomial([(2, 1)], 4) == (-1, ((1, 2),))

    def test_repeated_one_form_dies(self):
        sign, mono = normalize_monomial([(1, 2), (1, 2)], 4)
        assert sign == 0 and mono is None

    def test_single_transposition(self):
        assert normalize_monomial([(3, 4), (1, 2)], 4) == (-1, ((1, 2), (3, 4)))

    def test_degenerate_pair_dies(self):
        assert normalize_monomial([(2, 2)], 4)[0] == 0

    def test_out_of_range_raises(self):
        with pytest.raises(ValueError):
            normalize_monomial([(1, 5)], 4)


class TestWedge:
    def test_square_of_one_form_vanishes(self):
        a = mu(4, 1, 2)
        assert wedge(a, a).is_zero()

    def test_product_keeps_coefficient(self):
        prod = wedge(mu(4, 1, 2), mu(4, 1, 3))
        assert prod.terms == {((1, 2), (1, 3)): ScalarPi.of(1)}

    def test_rank_mismatch_raises(self):
        with pytest.raises(ValueError):
            wedge(mu(4, 1, 2), mu(6, 1, 2))

    def test_euler_orthogonality_via_wedge(self):
        # the wedge itself must realize the pairwise cancellation on (4,8)
        from calfol.charforms import Normalization, Split, euler_form

        sp = Split(4, 8)
        eu = euler_form(sp, "u", Normalization.LITERAL)
        ev = euler_form(sp, "v", Normalization.LITERAL)
        assert wedge(eu, ev).is_zero()

    def test_flow_orthogonality_via_wedge(self):
        from calfol.charforms import Normalization, Split, euler_form

        sp = Split(2, 6)
        prod = wedge(euler_form(sp, "u", Normalization.LITERAL),
                     euler_form(sp, "v", Normalization.LITERAL))
        assert prod.is_zero()

    def test_canonicality_random_association_orders(self):
        # wedging generator words in any order and tree shape lands on the
        # same canonical monomial with the sign normalize_monomial computes
        rng = random.Random(20240817)
        for _ in range(1000):
            rank = rng.randint(4, 8)
            count = rng.randint(2, 5)
            word = [(rng.randint(1, rank), rng.randint(1, rank)) for _ in range(count)]
            rng.shuffle(word)
            sign, mono = normalize_monomial(word, rank)
            factors = [FormExpr.mu(rank, a, b) for a, b in word]

            def fold(lo, hi):
                if hi - lo == 1:
                    return factors[lo]
                mid = rng.randint(lo + 1, hi - 1)
                return wedge(fold(lo, mid), fold(mid, hi))

            prod = fold(0, count)
            if sign == 0:
                assert prod.is_zero()
            else:
                assert prod.terms == {mono: ScalarPi.of(sign)}

    def test_graded_anticommutativity(self):
        rng = random.Random(7)
        for _ in range(200):
            rank = rng.randint(4, 8)

            def random_form(degree):
                terms = []
                for _ in range(rng.randint(1, 4)):
                    word = []
                    for _ in range(degree):
                        a, b = rng.randint(1, rank), rng.randint(1, rank)
                        if a == b:
                            b = a % rank + 1
                        word.append((a, b))
                    terms.append((ScalarPi.of(rng.randint(-3, 3)), word))
                return FormExpr.from_raw(rank, terms)

            p, q = rng.randint(1, 3), rng.randint(1, 3)
            a, b = random_form(p), random_form(q)
            lhs = wedge(a, b)
            rhs = wedge(b, a) * ScalarPi.of((-1) ** (p * q))
            assert lhs == rhs

    def test_index_map_is_algebra_automorphism(self):
        rng = random.Random(99)
        mapping = {1: 3, 3: 1, 5: 6, 6: 5}
        for _ in range(100):
            rank = 6
            a = wedge(mu(rank, rng.randint(1, 5), 6), mu(rank, 1, rng.randint(2, 6)))
            b = mu(rank, rng.randint(1, 5), rng.randint(2, 6)) + mu(rank, 2, 3)
            lhs = apply_index_map(wedge(a, b), mapping)
            rhs = wedge(apply_index_map(a, mapping), apply_index_map(b, mapping))
            assert lhs == rhs


class TestDifferential:
    def test_d_mu12_rank4(self):
        # hand expansion of the structure equation
        expected = wedge(mu(4, 1, 3), mu(4, 2, 3)) + wedge(mu(4, 1, 4), mu(4, 2, 4))
        assert ce_differential(mu(4, 1, 2)) == expected

    @pytest.mark.parametrize("rank", [4, 5, 6, 7, 8])
    def test_d_squared_on_generators(self, rank):
        for i in range(1, rank + 1):
            for j in range(i + 1, rank + 1):
                assert ce_differential(ce_differential(FormExpr.mu(rank, i, j))).is_zero()

    def test_d_squared_on_random_forms(self):
        rng = random.Random(5)
        for _ in range(100):
            rank = rng.randint(4, 8)
            terms = []
            for _ in range(rng.randint(1, 5)):
                degree = rng.randint(1, 3)
                word = []
                for _ in range(degree):
                    a = rng.randint(1, rank - 1)
                    word.append((a, rng.randint(a + 1, rank)))
                terms.append((ScalarPi.of(rng.randint(-4, 4), rng.randint(1, 3)), word))
            form = FormExpr.from_raw(rank, terms)
            assert ce_differential(ce_differential(form)).is_zero()

    def test_flow_transgression_differential(self):
        from calfol.charforms import Normalization, Split, euler_form, transgression

        sp = Split(2, 4)
        assert ce_differential(transgression(sp)) == euler_form(sp, "u", Normalization.LITERAL)

    def test_degree_raises_by_one(self):
        d = ce_differential(mu(5, 1, 2))
        assert d.degree() == 2


class TestEvaluate:
    def setup_method(self):
        from calfol.charforms import Normalization, Split, euler_form

        self.split = Split(4, 8)
        self.ev = euler_form(self.split, "v", Normalization.LITERAL)

    def E(self, a, b):
        return DualVector.basis(8, a, b)

    def test_diagonal_tuple(self):
        val = evaluate(self.ev, [self.E(1, 5), self.E(1, 6), self.E(1, 7), self.E(1, 8)])
        assert val == ScalarPi.of(3, 2, -2)

    def test_paired_tuple(self):
        val = evaluate(self.ev, [self.E(1, 5), self.E(1, 6), self.E(2, 7), self.E(2, 8)])
        assert val == ScalarPi.of(1, 2, -2)

    def test_sign_is_permutation_sign(self):
        val = evaluate(self.ev, [self.E(1, 6), self.E(1, 5), self.E(2, 7), self.E(2, 8)])
        assert val == ScalarPi.of(-1, 2, -2)

    def test_four_distinct_rows_vanish(self):
        val = evaluate(self.ev, [self.E(1, 5), self.E(2, 6), self.E(3, 7), self.E(4, 8)])
        assert val.is_zero()

    def test_alternating_under_swaps(self):
        rng = random.Random(11)
        vecs = [self.E(1, 5), self.E(2, 6), self.E(1, 7), self.E(2, 8)]
        base = evaluate(self.ev, vecs)
        for _ in range(10):
            i, j = rng.sample(range(4), 2)
            swapped = list(vecs)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            assert evaluate(self.ev, swapped) == -base

    def test_arity_mismatch_raises(self):
        with pytest.raises(ValueError):
            evaluate(self.ev, [self.E(1, 5)])

    def test_non_homogeneous_raises(self):
        form = mu(4, 1, 2) + wedge(mu(4, 1, 2), mu(4, 1, 3))
        with pytest.raises(ValueError):
            evaluate(form, [DualVector.basis(4, 1, 2)])

    def test_combination_vectors(self):
        v = DualVector.combination(8, {(1, 5): Fraction(3, 5), (2, 5): Fraction(4, 5)})
        w = DualVector.combination(8, {(1, 6): Fraction(3, 5), (2, 6): Fraction(4, 5)})
        x = DualVector.combination(8, {(1, 7): Fraction(3, 5), (2, 7): Fraction(4, 5)})
        y = DualVector.combination(8, {(1, 8): Fraction(3, 5), (2, 8): Fraction(4, 5)})
        assert evaluate(self.ev, [v, w, x, y]) == ScalarPi.of(3, 2, -2)

    def test_evaluate_basis_matches_evaluate(self):
        word = [(1, 5), (1, 6), (2, 7), (2, 8)]
        assert evaluate_basis(self.ev, word) == evaluate(self.ev, [self.E(*g) for g in word])


class TestIsZeroAndText:
    def test_zero_form(self):
        assert FormExpr.zero(4).is_zero()

    def test_cancellation_to_zero(self):
        assert (mu(4, 1, 2) - mu(4, 1, 2)).is_zero()

    def test_flow_orthogonality_rank8(self):
        from calfol.charforms import Normalization, Split, euler_form

        sp = Split(2, 8)
        prod = wedge(euler_form(sp, "u", Normalization.LITERAL),
                     euler_form(sp, "v", Normalization.LITERAL))
        assert prod.is_zero()

    def test_text_serialization_round_shape(self):
        form = mu(4, 1, 2) * ScalarPi.of(3, 2, -2)
        assert form.to_text() == "3/2 * pi^-2 * mu[1,2]"
        assert FormExpr.zero(4).to_text() == "0"
