"""Acceptance suite: one test per exit criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Every tolerance is pinned here; nothing is deferred to later
calibration.  The suite exercises only the primary package (no plotting
frontend involved).
"""

import math
import time

import numpy as np
import pytest

from dpolab.field import Region, default_grid, sample_field
from dpolab.flow import IntegratorConfig, Method, Termination, integrate_flow
from dpolab.loss import (
    Dominance,
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
from dpolab.policy import (
    PreferenceTriple,
    TabularPolicy,
    dpo_policy_gradient,
    finite_diff_policy_gradient,
    preset_atomic,
    rate_asymmetry_report,
    train,
    train_finite_diff,
)

BETAS = (0.1, 0.3, 0.5, 1.0)


def report(line: str) -> None:
    print(f"\n{line}")


@pytest.fixture(scope="module")
def seeded_points():
    rng = np.random.default_rng(20240117)
    pts = 0.01 + rng.random((10_000, 2)) * (2.0 - 0.01)
    return [RatioPoint(float(a), float(b)) for a, b in pts]


def test_criterion_1_analytic_gradients_match_finite_differences(seeded_points):
    """10,000 seeded points x beta in {0.1,0.3,0.5,1.0}: max rel err < 1e-6, < 5 s."""
    started = time.perf_counter()
    worst = 0.0
    for beta in BETAS:
        params = LossParams(beta)
        for p in seeded_points:
            a = dpo_gradient(p, params)
            f = finite_diff_gradient(p, params, h=1e-6)
            err = max(
                abs(a.d_x1 - f.d_x1) / abs(a.d_x1),
                abs(a.d_x2 - f.d_x2) / abs(a.d_x2),
            )
            if err > worst:
                worst = err
    elapsed = time.perf_counter() - started
    assert worst < 1e-6
    assert elapsed < 5.0
    report(f"ACCEPTANCE 1 PASS: gradient check max rel err {worst:.3e} (< 1e-6) in {elapsed:.2f}s")


def test_criterion_2_update_rate_identity_within_8_ulps(seeded_points):
    """|dL/dx1|/(dL/dx2) = x2/x1 to 8 ulps for every beta, < 1 s."""
    started = time.perf_counter()
    worst_ulps = 0.0
    for beta in BETAS:
        params = LossParams(beta)
        for p in seeded_points:
            grad = dpo_gradient(p, params)
            rate = update_rate(p)
            ulps = abs(abs(grad.d_x1) / grad.d_x2 - rate) / math.ulp(rate)
            if ulps > worst_ulps:
                worst_ulps = ulps
            assert ulps <= 8.0
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    report(f"ACCEPTANCE 2 PASS: ratio identity within {worst_ulps:.2f} ulps (<= 8) in {elapsed:.2f}s")


def test_criterion_3_sigmoid_and_ratio_forms_agree():
    """Both loss forms agree to 1e-12 relative error, nonunit references included."""
    worst = 0.0
    probs = np.linspace(0.02, 1.0, 12)
    refs = np.linspace(0.1, 1.0, 8)
    for beta in BETAS:
        params = LossParams(beta)
        for pw in probs:
            for pl in probs:
                for rw in refs:
                    for rl in refs:
                        sig = dpo_loss_sigmoid_form(pw, pl, ReferencePair(rw, rl), params)
                        ratio = dpo_loss(RatioPoint(pw / rw, pl / rl), params)
                        rel = abs(sig - ratio) / ratio
                        if rel > worst:
                            worst = rel
                        assert rel < 1e-12
    report(f"ACCEPTANCE 3 PASS: form equivalence worst rel diff {worst:.3e} (< 1e-12)")


def test_criterion_4_flow_monotonicity_and_discrete_update_rate():
    """100 seeded RK4 trajectories: monotone x1/x2/loss, ratio strictly down,
    and |dx2| > dx1 per step whenever the start has x2 < x1.  < 30 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(71)
    inits = 0.05 + rng.random((100, 2)) * 1.90
    config = IntegratorConfig(method=Method.RK4, step=5e-3, max_steps=12_000)
    params = LossParams(0.1)
    asym_checked = 0
    for x1_0, x2_0 in inits:
        init = RatioPoint(float(x1_0), float(x2_0))
        traj = integrate_flow(init, params, config)
        assert traj.termination in (Termination.FLOOR_HIT, Termination.LOSS_REACHED)
        steps = traj.steps
        below_diagonal = init.x2 < init.x1
        for prev, cur in zip(steps, steps[1:]):
            assert cur.point.x1 >= prev.point.x1 - 1e-9
            assert cur.point.x2 <= prev.point.x2 + 1e-9
            assert cur.loss <= prev.loss + 1e-9
            assert cur.ratio < prev.ratio
            if below_diagonal:
                dx1 = cur.point.x1 - prev.point.x1
                dx2 = prev.point.x2 - cur.point.x2
                assert dx2 > dx1 * (1.0 - 1e-9)
        if below_diagonal:
            asym_checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    report(
        f"ACCEPTANCE 4 PASS: 100 trajectories monotone; discrete update-rate "
        f"asymmetry on {asym_checked} below-diagonal starts in {elapsed:.2f}s"
    )


def test_criterion_5_region_properties_on_default_grid():
    """50x50 field: TopLeft 100% X1Dominant, BottomLowX2 100% X2Dominant,
    TopRight mean gradient norm below the reflected low corner's."""
    samples = sample_field(default_grid(), LossParams(0.1))
    top_left = [s for s in samples if s.region.kind is Region.TOP_LEFT]
    bottom = [s for s in samples if s.region.kind is Region.BOTTOM_LOW_X2]
    top_right = [s for s in samples if s.region.kind is Region.TOP_RIGHT]
    assert top_left and bottom and top_right

    assert all(dominance(s.point) is Dominance.X1_DOMINANT for s in top_left)
    assert all(dominance(s.point) is Dominance.X2_DOMINANT for s in bottom)

    mean_top_right = float(np.mean([s.grad_norm for s in top_right]))
    reflected = [
        dpo_gradient(RatioPoint(1.0 / s.point.x1, 1.0 / s.point.x2), LossParams(0.1)).norm
        for s in top_right
    ]
    mean_reflected = float(np.mean(reflected))
    assert mean_top_right < mean_reflected
    report(
        f"ACCEPTANCE 5 PASS: {len(top_left)}/{len(top_left)} TopLeft X1Dominant, "
        f"{len(bottom)}/{len(bottom)} BottomLowX2 X2Dominant, "
        f"TopRight mean |grad| {mean_top_right:.4f} < reflected {mean_reflected:.4f}"
    )


def test_criterion_6_policy_gradients_match_finite_differences():
    """1,000 random atomic/autoregressive instances at rel tol 1e-5."""
    rng = np.random.default_rng(99)
    params_pool = [LossParams(b) for b in BETAS]
    checked = 0
    for i in range(1000):
        params = params_pool[i % len(params_pool)]
        if i % 2 == 0:
            k = int(rng.integers(2, 7))
            y_w, y_l = (int(v) for v in rng.choice(k, size=2, replace=False))
            triple = PreferenceTriple("p", y_w, y_l)
            policy = TabularPolicy.atomic_uniform(["p"], k)
            ref = TabularPolicy.atomic_uniform(["p"], k)
        else:
            vocab = int(rng.integers(2, 5))
            length = int(rng.integers(2, 5))
            while True:
                y_w = tuple(int(t) for t in rng.integers(0, vocab, size=length))
                y_l = tuple(int(t) for t in rng.integers(0, vocab, size=length))
                if y_w != y_l:
                    break
            triple = PreferenceTriple("p", y_w, y_l)
            policy = TabularPolicy.autoregressive_uniform([triple], vocab, length)
            ref = TabularPolicy.autoregressive_uniform([triple], vocab, length)
        for _, row in policy.param_items():
            row += rng.normal(size=row.shape)
        analytic = dpo_policy_gradient(policy, ref, triple, params)
        numeric = finite_diff_policy_gradient(policy, ref, [triple], params, h=1e-6)
        scale = max(max(float(np.abs(g).max()) for g in analytic.values()), 1e-3)
        for key in analytic:
            np.testing.assert_allclose(
                analytic[key], numeric[key], rtol=1e-5, atol=1e-5 * scale
            )
        checked += 1
    assert checked == 1000
    report("ACCEPTANCE 6 PASS: 1000 random policy instances match finite differences at 1e-5")


def test_criterion_7_shared_prefix_cancellation_and_confined_movement():
    """vocab-4 length-4, policy = reference: shared-prefix gradients are exact
    zeros and training movement stays strictly past the divergence position."""
    triple = PreferenceTriple("p", (0, 1, 2, 3), (0, 1, 2, 0))
    policy = TabularPolicy.autoregressive_uniform([triple], 4, 4)
    ref = TabularPolicy.autoregressive_uniform([triple], 4, 4)
    params = LossParams(0.3)

    grad = dpo_policy_gradient(policy, ref, triple, params)
    shared_prefixes = ((), (0,), (0, 1))
    for prefix in shared_prefixes:
        assert np.all(grad[("p", prefix)] == 0.0)

    before = {key: row.copy() for key, row in policy.param_items()}
    train(policy, ref, [triple], lr=0.2, steps=25, params=params)
    for prefix in shared_prefixes:
        assert np.array_equal(policy.row(("p", prefix)), before[("p", prefix)])
    assert np.any(policy.row(("p", (0, 1, 2))) != before[("p", (0, 1, 2))])
    report("ACCEPTANCE 7 PASS: shared-prefix gradients bitwise zero; movement confined past divergence")


def test_criterion_8_training_matches_finite_difference_oracle():
    """200-step analytic-gradient traces match the finite-difference training
    oracle to 1e-6 in every recorded field, atomic and autoregressive."""
    params = LossParams(0.1)
    fields = ("loss", "pi_w", "pi_l", "x1", "x2", "margin", "rest_mass", "grad_norm", "d_pi_w", "d_pi_l")

    def compare(policy_a, policy_b, ref, dataset):
        analytic = train(policy_a, ref, dataset, 0.1, 200, params)
        oracle = train_finite_diff(policy_b, ref, dataset, 0.1, 200, params)
        worst = 0.0
        for ra, ro in zip(analytic.records, oracle.records):
            for name in fields:
                diff = abs(getattr(ra, name) - getattr(ro, name))
                worst = max(worst, diff)
                assert diff <= 1e-6
        return worst

    atomic = TabularPolicy.atomic_uniform(["p"], 4)
    worst_atomic = compare(
        atomic, atomic.clone(), TabularPolicy.atomic_uniform(["p"], 4), [PreferenceTriple("p", 0, 1)]
    )
    triple = PreferenceTriple("p", (0, 1), (0, 2))
    ar = TabularPolicy.autoregressive_uniform([triple], 3, 2)
    worst_ar = compare(
        ar, ar.clone(), TabularPolicy.autoregressive_uniform([triple], 3, 2), [triple]
    )
    report(
        f"ACCEPTANCE 8 PASS: 200-step traces match oracle (atomic worst {worst_atomic:.2e}, "
        f"autoregressive worst {worst_ar:.2e}, <= 1e-6)"
    )


def test_criterion_9_rate_asymmetry_from_leading_presets():
    """Starts with x2 < x1: |dlog x2| >= dlog x1 - 2(lr*beta)^2 at every step,
    and the report carries the cumulative probability curves."""
    lr, steps = 0.1, 200
    for preset in ("preferred_leading", "bottom_right", (1.9, 0.3)):
        policy, ref, triple = preset_atomic(preset)
        trace = train(policy, ref, [triple], lr, steps, LossParams(0.1))
        rep = rate_asymmetry_report(trace)
        assert rep.slack == 2.0 * (lr * 0.1) ** 2
        assert rep.steps_checked == steps
        assert rep.asymmetry_holds, f"violations at {rep.violations} for {preset}"
        assert len(rep.cum_pi_w_gain) == steps and len(rep.cum_pi_l_drop) == steps
        assert rep.cum_pi_w_gain[-1] > 0.0 and rep.cum_pi_l_drop[-1] > 0.0
        assert all(b >= a - 1e-15 for a, b in zip(rep.cum_pi_w_gain, rep.cum_pi_w_gain[1:]))
        assert all(b >= a - 1e-15 for a, b in zip(rep.cum_pi_l_drop, rep.cum_pi_l_drop[1:]))
    report("ACCEPTANCE 9 PASS: discrete update-rate asymmetry holds for every step of 3 leading presets")
