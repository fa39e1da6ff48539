"""Acceptance criteria: one test per criterion, numbered in order.

Each test states its claim, tolerance, and runtime budget; `pytest -v`
prints one pass/fail line per criterion.  Criterion 4 asserts a stated
fault-tolerance bound verbatim; the measured tolerable fault rate is an
order of magnitude below that bound everywhere on its channel grid, so the
test fails by design rather than silently weakening the requirement (see
the test body for the measured numbers).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from miswire import (
    ChannelKind,
    ChannelModel,
    DecoderKind,
    DecoderSpec,
    DegreeDistribution,
    DEParams,
    MaskMode,
    MiswiringMask,
    TannerGraph,
    ThresholdQuery,
    TrialConfig,
    alpha_max,
    decode_peeling,
    gallager_a_step,
    gallager_b_step,
    iterate_to_fixpoint,
    oracle_exact_ser,
    run_trials,
    sample_code,
    sensitivity,
    simulate_graph,
    threshold_curve,
    transmit_all_one,
    useful_region_boundary,
)
from miswire.cli import main as cli_main

DD36 = DegreeDistribution.from_regular(3, 6)

EPS_GRID = [round(0.05 * k, 2) for k in range(1, 10)]  # 0.05 .. 0.45
ALPHA_GRID = [0.0, 0.01, 0.05, 0.1, 0.3]


def de_limit(spec: DecoderSpec, eps: float, alpha: float) -> float:
    traj = iterate_to_fixpoint(
        DEParams(epsilon=eps, spec=replace(spec, alpha=alpha), dd=DD36)
    )
    assert traj.converged, (spec.kind, eps, alpha)
    return traj.x_inf


def test_criterion_01_fault_free_unanimity_threshold(tmp_path):
    """CLI threshold at eta=1e-6 returns 0.039 +/- 0.002 in under 10 s."""
    out = tmp_path / "thr.json"
    start = time.perf_counter()
    code = cli_main(
        [
            "threshold", "--decoder", "gallager-a", "--dv", "3", "--dc", "6",
            "--alpha", "0", "--eta", "1e-6",
            "--output", str(out), "--format", "json",
        ]
    )
    elapsed = time.perf_counter() - start
    assert code == 0
    row = json.loads(out.read_text())["rows"][0]
    assert row["eps_star"] == pytest.approx(0.039, abs=0.002)
    assert elapsed < 10.0, f"threshold run took {elapsed:.1f}s"


def test_criterion_02_erasure_decoding_never_exceeds_channel_rate():
    """Peeling DE limit stays at or below eps over the whole grid, < 30 s."""
    start = time.perf_counter()
    spec = DecoderSpec(DecoderKind.PEELING)
    for eps in EPS_GRID:
        for alpha in ALPHA_GRID:
            x_inf = de_limit(spec, eps, alpha)
            assert x_inf <= eps + 1e-12, (eps, alpha, x_inf)
    assert time.perf_counter() - start < 30.0


def test_criterion_03_erasure_floor_bound():
    """DE limit respects the silent-check floor eps*lam(1-(1-a)rho(1-a))."""
    spec = DecoderSpec(DecoderKind.PEELING)
    for eps in EPS_GRID:
        for alpha in ALPHA_GRID[1:]:
            x_inf = de_limit(spec, eps, alpha)
            floor = eps * DD36.eval_lambda(
                1.0 - (1.0 - alpha) * DD36.eval_rho(1.0 - alpha)
            )
            assert x_inf >= floor - 1e-10, (eps, alpha, x_inf, floor)


def test_criterion_04_tolerable_fault_rate_sufficiency():
    """Claimed: alpha_max >= 0.01 for peeling at eta=1e-5 for every eps <= 0.3.

    This is asserted exactly as claimed, and it fails across the whole
    grid: the floor of criterion 3 forces x_inf >= eps*(1-(1-a)^6)^2 for
    the (3,6) ensemble, which at a=0.01 equals 3.4e-3*eps and therefore
    already exceeds eta=1e-5 for every eps above ~3e-3.  The scanner
    agrees, measuring alpha_max from 2.4e-3 (eps=0.05) down to 9.5e-4
    (eps=0.3) -- an order of magnitude below the claimed bound.  The
    failure is the finding; the measured values are printed below.
    """
    spec = DecoderSpec(DecoderKind.PEELING)
    measured = {
        eps: alpha_max(spec, DD36, epsilon=eps, eta=1e-5)
        for eps in (0.05, 0.1, 0.2, 0.3)
    }
    print(f"measured alpha_max by eps: {measured}")
    failing = {eps: a for eps, a in measured.items() if a < 0.01}
    assert not failing, (
        "alpha_max >= 0.01 does not hold for every eps <= 0.3: "
        + ", ".join(f"alpha_max({eps})={a:.6f}" for eps, a in failing.items())
    )


def test_criterion_05_counting_rule_threshold_rises_with_small_fault_rates():
    """The eta-threshold of the counting rule increases for some alpha > 0."""
    q = ThresholdQuery(
        spec=DecoderSpec(DecoderKind.GALLAGER_B),
        dd=DD36,
        eta=1e-5,
        eps_resolution=1e-8,
        max_iters=20000,
    )
    points = threshold_curve(q, [0.0, 2e-6, 5e-6, 1e-5])
    assert all(p.ok for p in points)
    base = points[0].eps_star
    best = max(p.eps_star for p in points[1:])
    assert best > base, f"no facilitation: eps*(0)={base!r}, best={best!r}"


def test_criterion_06_keep_tie_break_dominates_flip_on_alpha_sweep():
    """Keep-channel boundary >= flip boundary at alpha in {0, 0.01, ..., 0.1}."""
    alphas = [round(0.01 * k, 2) for k in range(11)]
    keep = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A), DD36, alphas, eps_resolution=1e-4
    )
    flip = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A, tie_break_keep_channel=False),
        DD36,
        alphas,
        eps_resolution=1e-4,
    )
    for (alpha, b_keep), (_, b_flip) in zip(keep, flip):
        assert b_keep >= b_flip - 1e-12, (alpha, b_keep, b_flip)


TREE = TannerGraph(
    n=4, m=2,
    var_of=np.array([0, 1, 1, 2, 3]), chk_of=np.array([0, 0, 1, 0, 1]),
    dv=2, dc=3,
)
RING = TannerGraph(
    n=4, m=4,
    var_of=np.array([0, 0, 1, 1, 2, 2, 3, 3]), chk_of=np.array([0, 1, 1, 2, 2, 3, 3, 0]),
    dv=2, dc=2,
)
TWIN = TannerGraph(
    n=2, m=3,
    var_of=np.array([0, 0, 0, 1, 1, 1]), chk_of=np.array([0, 1, 2, 0, 1, 2]),
    dv=3, dc=2,
)
STAR = TannerGraph(
    n=3, m=2,
    var_of=np.array([0, 0, 1, 2]), chk_of=np.array([0, 1, 0, 1]),
    dv=2, dc=2,
)


def test_criterion_07_monte_carlo_matches_enumeration_oracle():
    """1e5-trial MC within 3 standard errors of exact SER, 3 graphs/decoder."""
    bec = ChannelModel(ChannelKind.BEC, 0.3)
    bsc = ChannelModel(ChannelKind.BSC, 0.2)
    perm, trans = MaskMode.PERMANENT, MaskMode.TRANSIENT
    cases = [
        (TREE, bec, DecoderSpec(DecoderKind.PEELING, alpha=0.15), trans, 3),
        (RING, bec, DecoderSpec(DecoderKind.PEELING, alpha=0.25), perm, 4),
        (TWIN, bec, DecoderSpec(DecoderKind.PEELING, alpha=0.15), perm, 4),
        (TREE, bsc, DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.15), perm, 4),
        (RING, bsc, DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.1), trans, 2),
        (STAR, bsc, DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.25), perm, 4),
        (TREE, bsc, DecoderSpec(DecoderKind.GALLAGER_B, alpha=0.2), perm, 4),
        (RING, bsc, DecoderSpec(DecoderKind.GALLAGER_B, alpha=0.15), perm, 3),
        (STAR, bsc, DecoderSpec(DecoderKind.GALLAGER_B, alpha=0.2), trans, 4),
    ]
    start = time.perf_counter()
    for graph, channel, spec, mode, iterations in cases:
        assert iterations <= 5
        exact = oracle_exact_ser(graph, channel, spec, mode, iterations)
        mc = simulate_graph(
            graph, channel, spec, mode, iterations, n_trials=100_000, master_seed=1
        )
        stderr = np.maximum(mc.stderr, 1e-12)
        z = np.abs(mc.mean_ser - exact) / stderr
        assert np.all(z <= 3.0), (spec.kind, graph.n, mode, z.max())
    assert time.perf_counter() - start < 300.0


def test_criterion_08_mask_persistence_is_invisible_at_finite_length():
    """Permanent vs transient mean SER curves overlap within 95% CIs."""
    start = time.perf_counter()
    for eps in [0.01, 0.02, 0.03, 0.04, 0.05, 0.06]:
        stats = {}
        for mode in (MaskMode.PERMANENT, MaskMode.TRANSIENT):
            config = TrialConfig(
                n=1998,
                dv=3,
                dc=6,
                channel=ChannelModel(ChannelKind.BSC, eps),
                spec=DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.02),
                mode=mode,
                iterations=30,
                num_code_realizations=100,
                master_seed=2026,
            )
            stats[mode] = run_trials(config, workers=2)
        p, t = stats[MaskMode.PERMANENT], stats[MaskMode.TRANSIENT]
        assert p.trials >= 100 and t.trials >= 100
        gap = abs(float(p.mean_ser[-1]) - float(t.mean_ser[-1]))
        reach = 1.96 * (float(p.stderr[-1]) + float(t.stderr[-1]))
        assert gap <= reach, (eps, gap, reach)
    assert time.perf_counter() - start < 900.0


def test_criterion_09_fault_free_steps_match_classical_recursions():
    """alpha=0 updates equal independently coded fault-free forms, 1e-12."""

    def classical(x: float, eps: float, rule: str) -> float:
        s = (1.0 - 2.0 * x) ** 5
        pp, pm = (1.0 + s) / 2.0, (1.0 - s) / 2.0
        if rule == "unanimity":
            return eps - eps * pp**2 + (1.0 - eps) * pm**2
        # counting rule, threshold 2 of 2 extrinsic messages
        return (1.0 - eps) * pm**2 + eps * (1.0 - pp**2)

    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(1000):
        x = float(rng.uniform(0.0, 0.5))
        eps = float(rng.uniform(0.0, 0.5))
        for keep in (True, False):
            got = gallager_a_step(x, eps, 0.0, DD36, tie_break_keep_channel=keep)
            worst = max(worst, abs(got - classical(x, eps, "unanimity")))
        got = gallager_b_step(x, eps, 0.0, DD36)
        worst = max(worst, abs(got - classical(x, eps, "counting")))
    assert worst < 1e-12, worst


def test_criterion_10_implicit_sensitivity_matches_direct_differences():
    """Implicit partials within 1e-2 relative of direct FD at 20 points."""

    def limit_or_none(spec: DecoderSpec, eps: float, alpha: float) -> float | None:
        traj = iterate_to_fixpoint(
            DEParams(epsilon=eps, spec=replace(spec, alpha=alpha), dd=DD36, fixpoint_tol=1e-14)
        )
        return traj.x_inf if traj.converged else None

    rng = np.random.default_rng(0)
    kinds = [
        DecoderSpec(DecoderKind.PEELING),
        DecoderSpec(DecoderKind.GALLAGER_A),
        DecoderSpec(DecoderKind.GALLAGER_B),
    ]
    h = 1e-5
    accepted = 0
    tried = 0
    while accepted < 20:
        tried += 1
        assert tried < 400, "could not find 20 stable interior points"
        spec = kinds[tried % 3]
        if spec.kind is DecoderKind.PEELING:
            eps, alpha = rng.uniform(0.3, 0.48), rng.uniform(0.02, 0.3)
        else:
            eps, alpha = rng.uniform(0.03, 0.12), rng.uniform(0.01, 0.08)
        x = limit_or_none(spec, eps, alpha)
        if x is None or x < 1e-4:
            continue
        try:
            result = sensitivity(spec, DD36, epsilon=eps, alpha=alpha)
        except ArithmeticError:
            continue
        probes = {
            "d_eps": (limit_or_none(spec, eps - h, alpha), limit_or_none(spec, eps + h, alpha)),
            "d_alpha": (limit_or_none(spec, eps, alpha - h), limit_or_none(spec, eps, alpha + h)),
        }
        if any(v is None or v < 1e-4 for pair in probes.values() for v in pair):
            continue
        for attr, (lo, hi) in probes.items():
            direct = (hi - lo) / (2.0 * h)
            got = getattr(result, attr)
            assert abs(got - direct) <= 1e-2 * max(abs(direct), 1e-12), (
                spec.kind, eps, alpha, attr, got, direct,
            )
        accepted += 1


def test_criterion_11_coupled_masks_make_faults_pathwise_monotone():
    """SER(alpha2) >= SER(alpha1) on every coupled peeling path, 1e4 trials."""
    graph = sample_code(120, 3, 6, seed=11)
    channel = ChannelModel(ChannelKind.BEC, 0.35)
    violations = 0
    for trial in range(10_000):
        received = transmit_all_one(channel, graph.n, seed=trial)
        lo = MiswiringMask(
            mode=MaskMode.PERMANENT, alpha=0.05, seed=trial, n_edges=graph.n_edges
        )
        hi = MiswiringMask(
            mode=MaskMode.PERMANENT, alpha=0.25, seed=trial, n_edges=graph.n_edges
        )
        ser_lo = decode_peeling(graph, lo, received, 6)
        ser_hi = decode_peeling(graph, hi, received, 6)
        violations += int(np.any(ser_lo > ser_hi + 1e-15))
    assert violations == 0, f"{violations} of 10000 coupled paths violated monotonicity"


def test_criterion_12_worker_count_never_changes_output_bytes(tmp_path):
    """Same seed, different --workers: byte-identical data files."""
    commands = [
        [
            "simulate", "--decoder", "gallager-a", "--n", "300", "--eps", "0.02,0.03",
            "--alpha", "0.01", "--iterations", "8", "--codes", "12", "--seed", "5",
        ],
        [
            "de-curve", "--decoder", "gallager-b", "--alpha", "0,0.01",
            "--eps", "0.01:0.04:0.01", "--seed", "5",
        ],
        [
            "threshold", "--decoder", "peeling", "--alpha", "0,0.02", "--seed", "5",
            "--eps-resolution", "1e-4",
        ],
    ]
    for idx, command in enumerate(commands):
        payloads = []
        for workers in (1, 3):
            out = tmp_path / f"cmd{idx}_w{workers}.csv"
            code = cli_main(command + ["--workers", str(workers), "--output", str(out)])
            assert code == 0
            payloads.append(out.read_bytes())
        assert payloads[0] == payloads[1], command[0]
