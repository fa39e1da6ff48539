"""Threshold scans, useful-region boundaries, sensitivity, and yield."""

from __future__ import annotations

import math

import pytest

from miswire import (
    DecoderKind,
    DecoderSpec,
    DegreeDistribution,
    DEParams,
    SensitivityResult,
    ThresholdQuery,
    YieldParams,
    alpha_max,
    eta_threshold,
    iterate_to_fixpoint,
    sensitivity,
    threshold_curve,
    useful_region_boundary,
    yield_gain,
)

DD36 = DegreeDistribution.from_regular(3, 6)

# Frozen outputs of the default-resolution scanners (eta 1e-5, eps resolution
# 1e-5, coarse step 1e-3); the brute-force tests below bound the same
# quantities independently at coarse resolution.
GA_THRESHOLD = 0.0394609375
PEELING_THRESHOLD = 0.4294296875
KEEP_BOUNDARY_001 = 0.0300625  # eps resolution 1e-4
FLIP_BOUNDARY_001 = 0.0180625
PEELING_ALPHA_MAX_0001 = 0.017392578125


def brute_force_threshold(spec: DecoderSpec, eta: float, hi: float, step: float) -> float:
    """Largest grid epsilon whose DE limit falls below eta, by direct runs."""
    best = 0.0
    eps = step
    while eps < hi:
        traj = iterate_to_fixpoint(DEParams(epsilon=eps, spec=spec, dd=DD36))
        if traj.converged and traj.x_inf < eta:
            best = eps
        eps += step
    return best


def test_fault_free_thresholds_match_frozen_values():
    ga = eta_threshold(ThresholdQuery(spec=DecoderSpec(DecoderKind.GALLAGER_A), dd=DD36), 0.0)
    assert ga == pytest.approx(GA_THRESHOLD, abs=1e-9)
    pe = eta_threshold(ThresholdQuery(spec=DecoderSpec(DecoderKind.PEELING), dd=DD36), 0.0)
    assert pe == pytest.approx(PEELING_THRESHOLD, abs=1e-9)
    # degree-3 counting and unanimity rules coincide without wiring faults
    gb = eta_threshold(ThresholdQuery(spec=DecoderSpec(DecoderKind.GALLAGER_B), dd=DD36), 0.0)
    assert gb == pytest.approx(ga, abs=1e-9)


def test_thresholds_agree_with_brute_force_scan():
    brute = brute_force_threshold(DecoderSpec(DecoderKind.GALLAGER_A), 1e-5, 0.1, 1e-3)
    assert abs(GA_THRESHOLD - brute) <= 1e-3
    brute = brute_force_threshold(DecoderSpec(DecoderKind.PEELING), 1e-5, 0.5, 5e-3)
    assert abs(PEELING_THRESHOLD - brute) <= 5e-3


def test_threshold_is_a_pass_fail_boundary():
    spec = DecoderSpec(DecoderKind.GALLAGER_A)
    below = iterate_to_fixpoint(DEParams(epsilon=GA_THRESHOLD - 1e-4, spec=spec, dd=DD36))
    assert below.converged and below.x_inf < 1e-5
    above = iterate_to_fixpoint(DEParams(epsilon=GA_THRESHOLD + 2e-4, spec=spec, dd=DD36))
    assert not (above.converged and above.x_inf < 1e-5)


def test_threshold_curve_records_failures_instead_of_raising():
    # threshold 5 exceeds the 2 extrinsic wires of a degree-3 variable, so
    # every DE step raises; the curve must carry that as a failed point
    q = ThresholdQuery(
        spec=DecoderSpec(DecoderKind.GALLAGER_B, gb_threshold_b=5), dd=DD36
    )
    points = threshold_curve(q, [0.0, 0.01])
    assert [p.alpha for p in points] == [0.0, 0.01]
    assert all(not p.ok and math.isnan(p.eps_star) and p.detail for p in points)
    good = threshold_curve(
        ThresholdQuery(spec=DecoderSpec(DecoderKind.GALLAGER_A), dd=DD36), [0.0]
    )
    assert good[0].ok and good[0].eps_star == pytest.approx(GA_THRESHOLD, abs=1e-9)


def test_boundary_matches_frozen_values():
    keep = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A), DD36, [0.01], eps_resolution=1e-4
    )[0][1]
    flip = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A, tie_break_keep_channel=False),
        DD36,
        [0.01],
        eps_resolution=1e-4,
    )[0][1]
    assert keep == pytest.approx(KEEP_BOUNDARY_001, abs=1e-9)
    assert flip == pytest.approx(FLIP_BOUNDARY_001, abs=1e-9)


def test_boundary_satisfies_its_definition():
    # below the boundary the decoder beats the raw channel; above it the DE
    # limit is at least the channel error rate
    spec = DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.01)
    lo = KEEP_BOUNDARY_001 - 1e-4
    hi = KEEP_BOUNDARY_001 + 2e-4
    t_lo = iterate_to_fixpoint(DEParams(epsilon=lo, spec=spec, dd=DD36))
    assert t_lo.converged and t_lo.x_inf < lo
    t_hi = iterate_to_fixpoint(DEParams(epsilon=hi, spec=spec, dd=DD36))
    assert t_hi.x_inf >= hi or not t_hi.converged


def test_peeling_boundary_spans_the_channel_range():
    # erasure filling never leaves more erasures than the channel made, so
    # the useful region extends to the top of the scanned range at any alpha
    pairs = useful_region_boundary(
        DecoderSpec(DecoderKind.PEELING), DD36, [0.0, 0.1], eps_resolution=1e-3, coarse_step=5e-3
    )
    for _, boundary in pairs:
        assert boundary == pytest.approx(0.5, abs=2e-3)


def test_keep_tie_break_dominates_flip():
    alphas = [0.0, 0.02, 0.04]
    keep = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A), DD36, alphas, eps_resolution=1e-3
    )
    flip = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A, tie_break_keep_channel=False),
        DD36,
        alphas,
        eps_resolution=1e-3,
    )
    for (a1, b_keep), (a2, b_flip) in zip(keep, flip):
        assert a1 == a2
        assert b_keep >= b_flip - 1e-12


def test_alpha_max_matches_frozen_value_and_brute_force():
    got = alpha_max(DecoderSpec(DecoderKind.PEELING), DD36, epsilon=0.001, eta=1e-5)
    assert got == pytest.approx(PEELING_ALPHA_MAX_0001, abs=1e-9)
    best = 0.0
    for k in range(1, 100):
        a = k * 1e-3
        spec = DecoderSpec(DecoderKind.PEELING, alpha=a)
        traj = iterate_to_fixpoint(DEParams(epsilon=0.001, spec=spec, dd=DD36))
        if traj.converged and traj.x_inf < 1e-5:
            best = a
    assert abs(got - best) <= 1e-3


def test_alpha_max_is_zero_when_fault_free_already_fails():
    got = alpha_max(
        DecoderSpec(DecoderKind.GALLAGER_A), DD36, epsilon=0.2, eta=1e-5, alpha_resolution=1e-3
    )
    assert got == 0.0


def test_sensitivity_matches_direct_finite_differences():
    # differentiate the converged limit directly and compare with the
    # implicit-function evaluation at the same point
    cases = [
        (DecoderSpec(DecoderKind.GALLAGER_A), 0.05, 0.03),
        (DecoderSpec(DecoderKind.PEELING), 0.45, 0.02),
        (DecoderSpec(DecoderKind.GALLAGER_B), 0.05, 0.05),
    ]
    h = 1e-5
    for spec, eps, alpha in cases:
        result = sensitivity(spec, DD36, epsilon=eps, alpha=alpha)

        def limit(e: float, a: float) -> float:
            from dataclasses import replace

            traj = iterate_to_fixpoint(
                DEParams(epsilon=e, spec=replace(spec, alpha=a), dd=DD36, fixpoint_tol=1e-14)
            )
            assert traj.converged
            return traj.x_inf

        d_eps = (limit(eps + h, alpha) - limit(eps - h, alpha)) / (2 * h)
        d_alpha = (limit(eps, alpha + h) - limit(eps, alpha - h)) / (2 * h)
        assert result.d_eps == pytest.approx(d_eps, rel=1e-2)
        assert result.d_alpha == pytest.approx(d_alpha, rel=1e-2)


def test_sensitivity_pins_evaluation_state_when_asked():
    result = sensitivity(
        DecoderSpec(DecoderKind.GALLAGER_A), DD36, epsilon=0.03, alpha=0.01, at_state=0.03
    )
    assert result.x_inf == 0.03
    assert math.isfinite(result.d_eps) and math.isfinite(result.d_alpha)


def test_sensitivity_ratio_handles_vanishing_denominator():
    assert SensitivityResult(0.1, 1.0, 0.0).ratio is not None
    assert math.isnan(SensitivityResult(0.1, 1.0, 0.0).ratio)
    assert SensitivityResult(0.1, 1.0, -2.0).ratio == pytest.approx(-0.5)


def test_yield_gain_worked_example():
    gain = yield_gain(YieldParams(alpha_max=0.01, d0_area=1.0))
    assert gain.delta_yield == pytest.approx(0.0025, abs=1e-15)
    assert gain.relative_delta == pytest.approx(0.005, abs=1e-15)


def test_yield_gain_scales_with_baseline():
    # relative gain is the absolute gain divided by the baseline 1/(1+q)
    for a, q in [(0.001, 0.1), (0.02, 2.0), (0.5, 5.0)]:
        gain = yield_gain(YieldParams(alpha_max=a, d0_area=q))
        assert gain.relative_delta == pytest.approx(gain.delta_yield * (1.0 + q), rel=1e-12)
        assert gain.delta_yield >= 0.0


def test_yield_params_validation():
    with pytest.raises(ValueError):
        YieldParams(alpha_max=-0.1, d0_area=1.0)
    with pytest.raises(ValueError):
        YieldParams(alpha_max=0.1, d0_area=-1.0)
    with pytest.raises(ValueError):
        ThresholdQuery(spec=DecoderSpec(DecoderKind.PEELING), dd=DD36, eta=0.0)
    with pytest.raises(ValueError):
        ThresholdQuery(spec=DecoderSpec(DecoderKind.PEELING), dd=DD36, eps_resolution=0.7)
