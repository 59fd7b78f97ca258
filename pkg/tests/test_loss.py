"""Core loss/gradient tests.

Expected values marked "oracle" below were computed ahead of time with a
50-digit mpmath evaluation of the closed forms (see the values' comments);
everything else is either exact by symmetry or checked against the
central-difference oracle.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpolab.loss import (
    DOMAIN_FLOOR,
    Dominance,
    DomainError,
    LossParams,
    RatioPoint,
    ReferencePair,
    dominance,
    dpo_gradient,
    dpo_loss,
    dpo_loss_sigmoid_form,
    finite_diff_gradient,
    update_rate,
)

LOG2 = math.log(2.0)

# mpmath, 50 digits: loss(2, 0.5, beta=0.1) = 0.6262328064086961001457244...
LOSS_2_HALF_B01 = 0.6262328064086961
# mpmath: loss(0.75, 1.2, beta=0.5) = 0.8175354928516672918003601...
LOSS_075_12_B05 = 0.8175354928516673
# mpmath: grad(2, 0.5, 0.1) = (-0.02326990193096182414..., +0.09307960772384729656...)
GRAD_2_HALF_B01 = (-0.023269901930961824, 0.09307960772384730)

ratios = st.floats(min_value=0.01, max_value=2.0)
betas = st.sampled_from([0.1, 0.3, 0.5, 1.0])


class TestLossValues:
    def test_symmetric_point_is_log2_for_any_beta(self):
        for c in (0.01, 0.5, 1.0, 1.7, 2.0, 150.0):
            for beta in (0.01, 0.1, 0.3, 1.0, 2.0):
                assert dpo_loss(RatioPoint(c, c), LossParams(beta)) == LOG2

    def test_direct_evaluation_beta_one(self):
        # x1^1 / (x1 + x2) = 2/3
        loss = dpo_loss(RatioPoint(2.0, 1.0), LossParams(1.0))
        assert loss == pytest.approx(-math.log(2.0 / 3.0), rel=1e-15)

    def test_high_precision_oracle_value(self):
        loss = dpo_loss(RatioPoint(2.0, 0.5), LossParams(0.1))
        assert loss == pytest.approx(LOSS_2_HALF_B01, rel=1e-14)

    def test_strictly_positive(self):
        assert dpo_loss(RatioPoint(1000.0, 0.01), LossParams(1.0)) > 0.0

    def test_rejects_bad_domain(self):
        with pytest.raises(DomainError):
            RatioPoint(0.0, 1.0)
        with pytest.raises(DomainError):
            RatioPoint(1.0, -0.5)
        with pytest.raises(DomainError):
            RatioPoint(1.0, DOMAIN_FLOOR / 2)
        with pytest.raises(DomainError):
            RatioPoint(math.inf, 1.0)
        with pytest.raises(DomainError):
            RatioPoint(math.nan, 1.0)
        with pytest.raises(DomainError):
            LossParams(0.0)
        with pytest.raises(DomainError):
            LossParams(-0.3)

    @settings(deadline=None)
    @given(x1=ratios, x2=ratios, beta=st.floats(min_value=0.01, max_value=2.0))
    def test_monotone_in_each_coordinate(self, x1, x2, beta):
        params = LossParams(beta)
        base = dpo_loss(RatioPoint(x1, x2), params)
        assert dpo_loss(RatioPoint(x1 + 0.1, x2), params) < base
        assert dpo_loss(RatioPoint(x1, x2 + 0.1), params) > base


class TestSigmoidForm:
    def test_equal_ratios_give_log2(self):
        loss = dpo_loss_sigmoid_form(0.5, 0.5, ReferencePair(0.5, 0.5), LossParams(0.2))
        assert loss == LOG2

    def test_no_reference_case(self):
        loss = dpo_loss_sigmoid_form(0.8, 0.2, ReferencePair(1.0, 1.0), LossParams(1.0))
        assert loss == pytest.approx(-math.log(0.8), rel=1e-15)

    def test_matches_ratio_form_on_example(self):
        # pi_w/ref_w = 0.75, pi_l/ref_l = 1.2
        sig = dpo_loss_sigmoid_form(0.3, 0.6, ReferencePair(0.4, 0.5), LossParams(0.5))
        ratio = dpo_loss(RatioPoint(0.75, 1.2), LossParams(0.5))
        assert sig == pytest.approx(LOSS_075_12_B05, rel=1e-14)
        assert sig == pytest.approx(ratio, rel=1e-12)

    @settings(deadline=None)
    @given(
        pi_w=st.floats(min_value=0.01, max_value=1.0),
        pi_l=st.floats(min_value=0.01, max_value=1.0),
        ref_w=st.floats(min_value=0.05, max_value=1.0),
        ref_l=st.floats(min_value=0.05, max_value=1.0),
        beta=st.floats(min_value=0.01, max_value=2.0),
    )
    def test_form_equivalence_everywhere(self, pi_w, pi_l, ref_w, ref_l, beta):
        params = LossParams(beta)
        sig = dpo_loss_sigmoid_form(pi_w, pi_l, ReferencePair(ref_w, ref_l), params)
        ratio = dpo_loss(RatioPoint(pi_w / ref_w, pi_l / ref_l), params)
        assert sig == pytest.approx(ratio, rel=1e-12)

    def test_rejects_nonpositive_probabilities(self):
        refs = ReferencePair(1.0, 1.0)
        with pytest.raises(DomainError):
            dpo_loss_sigmoid_form(0.0, 0.5, refs, LossParams(0.1))
        with pytest.raises(DomainError):
            dpo_loss_sigmoid_form(0.5, -0.1, refs, LossParams(0.1))
        with pytest.raises(DomainError):
            dpo_loss_sigmoid_form(1.2, 0.5, refs, LossParams(0.1))
        with pytest.raises(DomainError):
            ReferencePair(0.0, 1.0)


class TestGradient:
    def test_symmetric_point_is_half_beta(self):
        grad = dpo_gradient(RatioPoint(1.0, 1.0), LossParams(0.5))
        assert (grad.d_x1, grad.d_x2) == (-0.25, 0.25)
        grad = dpo_gradient(RatioPoint(1.0, 1.0), LossParams(0.1))
        assert (grad.d_x1, grad.d_x2) == (-0.05, 0.05)

    def test_against_frozen_oracle(self):
        grad = dpo_gradient(RatioPoint(2.0, 0.5), LossParams(0.1))
        assert grad.d_x1 == pytest.approx(GRAD_2_HALF_B01[0], rel=1e-14)
        assert grad.d_x2 == pytest.approx(GRAD_2_HALF_B01[1], rel=1e-14)
        assert abs(grad.d_x1) / grad.d_x2 == pytest.approx(0.25, rel=1e-14)

    @settings(deadline=None)
    @given(x1=ratios, x2=ratios, beta=betas)
    def test_sign_structure(self, x1, x2, beta):
        grad = dpo_gradient(RatioPoint(x1, x2), LossParams(beta))
        assert grad.d_x1 < 0.0
        assert grad.d_x2 > 0.0

    @settings(deadline=None, max_examples=200)
    @given(x1=ratios, x2=ratios, beta=betas)
    def test_matches_finite_differences(self, x1, x2, beta):
        p = RatioPoint(x1, x2)
        params = LossParams(beta)
        analytic = dpo_gradient(p, params)
        numeric = finite_diff_gradient(p, params, h=1e-6)
        assert analytic.d_x1 == pytest.approx(numeric.d_x1, rel=1e-6)
        assert analytic.d_x2 == pytest.approx(numeric.d_x2, rel=1e-6)

    def test_not_singular_on_the_grid(self):
        grad = dpo_gradient(RatioPoint(0.05, 0.95), LossParams(0.3))
        assert not grad.singular


class TestFiniteDifferenceOracle:
    def test_symmetric_point(self):
        fd = finite_diff_gradient(RatioPoint(1.0, 1.0), LossParams(0.5), h=1e-5)
        assert fd.d_x1 == pytest.approx(-0.25, rel=1e-9)
        assert fd.d_x2 == pytest.approx(0.25, rel=1e-9)

    def test_self_consistency_at_derived_points(self):
        params = LossParams(0.1)
        a = dpo_gradient(RatioPoint(2.0, 0.5), params)
        f = finite_diff_gradient(RatioPoint(2.0, 0.5), params, h=1e-6)
        assert f.d_x1 == pytest.approx(a.d_x1, rel=1e-6)
        assert f.d_x2 == pytest.approx(a.d_x2, rel=1e-6)

        params = LossParams(0.3)
        a = dpo_gradient(RatioPoint(0.05, 0.95), params)
        f = finite_diff_gradient(RatioPoint(0.05, 0.95), params, h=1e-7)
        assert f.d_x1 == pytest.approx(a.d_x1, rel=1e-5)
        assert f.d_x2 == pytest.approx(a.d_x2, rel=1e-5)

    def test_stencil_domain_errors(self):
        with pytest.raises(DomainError):
            finite_diff_gradient(RatioPoint(1e-6, 1.0), LossParams(0.1), h=1e-5)
        with pytest.raises(DomainError):
            finite_diff_gradient(RatioPoint(1.0, 1.0), LossParams(0.1), h=0.0)
        with pytest.raises(DomainError):
            finite_diff_gradient(RatioPoint(1.0, 1.0), LossParams(0.1), h=-1e-6)


class TestUpdateRate:
    def test_examples(self):
        assert update_rate(RatioPoint(1.0, 1.0)) == 1.0
        assert update_rate(RatioPoint(2.0, 0.5)) == 0.25
        assert update_rate(RatioPoint(0.1, 0.9)) == pytest.approx(9.0, rel=1e-15)

    @settings(deadline=None, max_examples=300)
    @given(x1=ratios, x2=ratios, beta=st.floats(min_value=0.01, max_value=2.0))
    def test_equals_gradient_ratio_for_every_beta(self, x1, x2, beta):
        """|dL/dx1| / (dL/dx2) reduces to x2/x1 independently of beta."""
        p = RatioPoint(x1, x2)
        grad = dpo_gradient(p, LossParams(beta))
        from_grad = abs(grad.d_x1) / grad.d_x2
        direct = update_rate(p)
        assert abs(from_grad - direct) <= 8 * math.ulp(direct)


class TestDominance:
    def test_examples(self):
        assert dominance(RatioPoint(2.0, 0.5), tol=0.0) is Dominance.X2_DOMINANT
        assert dominance(RatioPoint(1.0, 1.0), tol=0.01) is Dominance.BALANCED
        assert dominance(RatioPoint(0.05, 0.95), tol=0.0) is Dominance.X1_DOMINANT

    def test_default_tol_breaks_only_near_diagonal(self):
        assert dominance(RatioPoint(1.0, 1.0)) is Dominance.BALANCED
        assert dominance(RatioPoint(1.0, 1.0 + 1e-6)) is Dominance.X1_DOMINANT
        assert dominance(RatioPoint(1.0 + 1e-6, 1.0)) is Dominance.X2_DOMINANT

    def test_rejects_negative_tol(self):
        with pytest.raises(DomainError):
            dominance(RatioPoint(1.0, 1.0), tol=-1e-3)
