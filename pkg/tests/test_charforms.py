import math
import random
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from calfol.charforms import (
    Normalization,
    Split,
    _reduced_product_support,
    calibration_phi,
    curvature_u,
    curvature_v,
    euler_closedness,
    euler_form,
    euler_orthogonality,
    perfect_matchings,
    pfaffian_numeric,
    pontryagin1,
    transgression,
    transgression_flag_restriction,
)
from calfol.exalg import (
    FormExpr,
    ScalarPi,
    apply_index_map,
    ce_differential,
    rotation_derivative,
    wedge,
)

GOLDEN = Path(__file__).parent / "golden"


class TestCurvature:
    def test_u_block_4_8(self):
        sp = Split(4, 8)
        expected = FormExpr.from_raw(8, [(ScalarPi.of(1), [(1, m), (2, m)]) for m in range(5, 9)])
        assert curvature_u(sp, 1, 2) == expected
        assert curvature_u(sp, 1, 2).term_count() == 4

    def test_u_antisymmetry(self):
        sp = Split(4, 8)
        assert (curvature_u(sp, 1, 2) + curvature_u(sp, 2, 1)).is_zero()

    def test_u_block_2_6(self):
        sp = Split(2, 6)
        expected = FormExpr.from_raw(6, [(ScalarPi.of(1), [(1, m), (2, m)]) for m in range(3, 7)])
        assert curvature_u(sp, 1, 2) == expected

    def test_v_block_4_8(self):
        sp = Split(4, 8)
        expected = FormExpr.from_raw(8, [(ScalarPi.of(1), [(i, 5), (i, 6)]) for i in range(1, 5)])
        assert curvature_v(sp, 5, 6) == expected

    def test_v_reversed_negates(self):
        sp = Split(4, 8)
        assert curvature_v(sp, 6, 5) == -curvature_v(sp, 5, 6)

    def test_v_block_2_4(self):
        # hand expansion at the smallest split
        sp = Split(2, 4)
        expected = FormExpr.from_raw(4, [
            (ScalarPi.of(1), [(1, 3), (1, 4)]),
            (ScalarPi.of(1), [(2, 3), (2, 4)]),
        ])
        assert curvature_v(sp, 3, 4) == expected

    def test_indices_outside_block_raise(self):
        sp = Split(4, 8)
        with pytest.raises(ValueError):
            curvature_u(sp, 1, 5)
        with pytest.raises(ValueError):
            curvature_v(sp, 4, 5)


class TestEulerForm:
    def test_rank2_literal_is_half_pi_curvature(self):
        sp = Split(2, 6)
        assert euler_form(sp, "u", Normalization.LITERAL) == \
            curvature_u(sp, 1, 2) * ScalarPi.of(1, 2, -1)

    def test_rank4_literal_matches_matching_expansion(self):
        sp = Split(4, 8)
        cv = lambda p, q: curvature_v(sp, p, q)
        expected = (wedge(cv(5, 6), cv(7, 8)) - wedge(cv(5, 7), cv(6, 8))
                    + wedge(cv(5, 8), cv(6, 7))) * ScalarPi.of(1, 2, -2)
        assert euler_form(sp, "v", Normalization.LITERAL) == expected

    def test_rank4_golden_serialization(self):
        sp = Split(4, 8)
        text = euler_form(sp, "v", Normalization.LITERAL).to_text()
        golden = (GOLDEN / "euler_v_4_8.txt").read_text().rstrip("\n")
        assert text == golden

    def test_odd_rank_rejected(self):
        with pytest.raises(ValueError):
            euler_form(Split(3, 6), "u", Normalization.LITERAL)

    def test_normalizations_proportional(self):
        sp = Split(4, 8)
        lit = euler_form(sp, "v", Normalization.LITERAL)
        pf = euler_form(sp, "v", Normalization.PFAFFIAN)
        assert lit == pf * ScalarPi.of(2)  # positive scalar, same support
        sp2 = Split(2, 6)
        assert euler_form(sp2, "u", Normalization.LITERAL) == \
            euler_form(sp2, "u", Normalization.PFAFFIAN)

    def test_pfaffian_squared_is_determinant(self):
        rng = np.random.default_rng(42)
        for size in (2, 4, 6, 8):
            for _ in range(100):
                g = rng.normal(size=(size, size))
                a = g - g.T
                pf = pfaffian_numeric(a)
                det = np.linalg.det(a)
                assert math.isclose(pf * pf, det, rel_tol=1e-9)

    def test_pfaffian_odd_size_zero(self):
        assert pfaffian_numeric(np.zeros((3, 3))) == 0.0

    def test_matching_signs_recursion(self):
        # 105 signed matchings on 8 points, consistent with Pf of a known matrix
        ms = perfect_matchings(8)
        assert len(ms) == 105
        assert sum(s for s, _ in ms) in range(-105, 106)


class TestTransgression:
    @pytest.mark.parametrize("split", [(2, 4), (2, 6), (2, 8), (4, 8), (4, 12)])
    def test_differential_is_euler(self, split):
        sp = Split(*split)
        te = transgression(sp)
        assert ce_differential(te) == euler_form(sp, "u", Normalization.LITERAL)

    def test_rank2_is_scaled_generator(self):
        sp = Split(2, 6)
        assert transgression(sp) == FormExpr.mu(6, 1, 2) * ScalarPi.of(1, 2, -1)

    def test_unsupported_rank_raises(self):
        with pytest.raises(ValueError):
            transgression(Split(8, 16))

    def test_flag_restriction_shape(self):
        # on flag-tangent directions Te reduces to the compact 13-term
        # base-point expression, at half scale
        sp = Split(4, 8)
        c = ScalarPi.of(1, 4, -2)
        raw = [(c, [(1, 2), (1, 3), (1, 4)])]
        for m in sp.v_indices:
            raw.append((c, [(1, 2), (3, m), (4, m)]))
            raw.append((-c, [(1, 3), (2, m), (4, m)]))
            raw.append((c, [(1, 4), (2, m), (3, m)]))
        assert transgression_flag_restriction(sp) == FormExpr.from_raw(8, raw)

    def test_isotropy_invariance(self):
        te = transgression(Split(4, 8))
        for plane in [(2, 3), (2, 4), (3, 4)]:
            assert rotation_derivative(te, *plane).is_zero()

    def test_not_invariant_under_mixed_rotation(self):
        te = transgression(Split(4, 8))
        assert not rotation_derivative(te, 1, 5).is_zero()


class TestCalibration:
    @pytest.mark.parametrize("split", [(2, 4), (2, 6), (4, 8)])
    def test_dphi_zero(self, split):
        sp = Split(*split)
        assert ce_differential(calibration_phi(sp)).is_zero()

    def test_unsupported_split_raises(self):
        with pytest.raises(ValueError):
            calibration_phi(Split(8, 16))


class TestPontryagin:
    def test_term_count_before_cancellation(self):
        # 6 index pairs x 6 column pairs on the (4,8) U-block
        sp = Split(4, 8)
        assert pontryagin1(sp, "u").term_count() == 36

    def test_rank1_block_is_zero(self):
        assert pontryagin1(Split(1, 5), "u").is_zero()

    def test_product_verdict_recorded_not_asserted(self):
        sp = Split(4, 8)
        prod = wedge(pontryagin1(sp, "u"), pontryagin1(sp, "v"))
        # the exact form-level verdict: nonzero (only the classes vanish)
        assert not prod.is_zero()


class TestOrthogonality:
    @pytest.mark.parametrize("split", [(2, 4), (2, 6), (2, 8), (4, 8), (4, 12)])
    def test_direct_and_reduced_agree(self, split):
        sp = Split(*split)
        rd = euler_orthogonality(sp, method="direct")
        rr = euler_orthogonality(sp, method="reduced")
        assert rd["exact"] and rr["exact"]

    @pytest.mark.parametrize("split", [(2, 4), (2, 6), (2, 8), (4, 8), (4, 12)])
    def test_closedness(self, split):
        sp = Split(*split)
        assert euler_closedness(sp, "u")["exact"]
        assert euler_closedness(sp, "v")["exact"]

    def test_reduced_detects_nonzero_products(self):
        # flip the sign of one term of euler_v: the product is then nonzero,
        # and the reduced coefficients must match the direct wedge on every
        # degree-sorted representative
        sp = Split(4, 8)
        eu = euler_form(sp, "u", Normalization.PFAFFIAN)
        ev = euler_form(sp, "v", Normalization.PFAFFIAN)
        terms = ev.terms
        key = sorted(terms)[0]
        terms[key] = -terms[key]
        broken = FormExpr(sp.n, terms)

        leftovers = _reduced_product_support(sp, eu, broken)
        assert leftovers

        direct = wedge(eu, broken)
        scale = None
        for mono, coef in leftovers.items():
            got = direct.terms.get(mono)
            assert got is not None
            ratio = Fraction(got.num, got.den) / coef
            if scale is None:
                scale = ratio
            assert ratio == scale

    def test_equivariance_guard_trips_on_broken_input(self):
        # a non-equivariant factor must be rejected, not silently accepted
        sp = Split(4, 8)
        eu = euler_form(sp, "u", Normalization.PFAFFIAN)
        ev = euler_form(sp, "v", Normalization.PFAFFIAN)
        terms = ev.terms
        key = sorted(terms)[0]
        del terms[key]
        broken = FormExpr(sp.n, terms)
        with pytest.raises(AssertionError):
            _reduced_product_support(sp, eu, broken)

    def test_euler_u_equivariant_under_row_swap(self):
        sp = Split(4, 8)
        eu = euler_form(sp, "u", Normalization.LITERAL)
        assert apply_index_map(eu, {1: 2, 2: 1}) == -eu
        assert apply_index_map(eu, {5: 6, 6: 5}) == eu * ScalarPi.of(-1)


@pytest.mark.slow
class TestSlowSplit816:
    def test_euler_orthogonality_8_16(self):
        report = euler_orthogonality(Split(8, 16), method="reduced")
        assert report["exact"]
        assert report["term_count_after"] == 0

    def test_euler_closedness_8_16(self):
        sp = Split(8, 16)
        assert euler_closedness(sp, "u")["exact"]
        assert euler_closedness(sp, "v")["exact"]
