"""Command-line tools: DE curves, thresholds, regions, yield, simulation.

Each subcommand writes a CSV or JSON data file whose metadata header (the
command, every resolved parameter, the seed, and the package version) is
sufficient to reproduce the file bit-identically.  Exit codes: 0 success,
2 usage error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import ast
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .analysis import (
    ThresholdQuery,
    YieldParams,
    alpha_max,
    eta_threshold,
    sensitivity,
    useful_region_boundary,
    yield_gain,
)
from .de import (
    DecoderKind,
    DecoderSpec,
    DEParams,
    GBMassConvention,
    gallager_a_step,
    gallager_b_step,
    iterate_to_fixpoint,
    peeling_step,
)
from .ensemble import DegreeDistribution
from .fileio import parse_int_list, parse_values, read_config_args, write_records
from .graph import MaskMode, TannerGraph
from .sim import (
    ChannelKind,
    ChannelModel,
    TrialConfig,
    oracle_exact_ser,
    run_trials,
    simulate_graph,
)

_USAGE_ERROR = 2
_NUMERICAL_ERROR = 3
_VERIFY_ERROR = 4


def _pool_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map, optionally across processes."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _build_dd(args: argparse.Namespace) -> DegreeDistribution:
    if getattr(args, "lambda_coeffs", None) or getattr(args, "rho_coeffs", None):
        if not (args.lambda_coeffs and args.rho_coeffs):
            raise ValueError("irregular profiles need both --lambda-coeffs and --rho-coeffs")
        lam = ast.literal_eval(args.lambda_coeffs)
        rho = ast.literal_eval(args.rho_coeffs)
        if not isinstance(lam, dict) or not isinstance(rho, dict):
            raise ValueError("degree profiles must be dict literals like '{3: 1.0}'")
        return DegreeDistribution(lam, rho)
    return DegreeDistribution.from_regular(args.dv, args.dc)


def _build_spec(args: argparse.Namespace, alpha: float = 0.0) -> DecoderSpec:
    return DecoderSpec(
        kind=DecoderKind(args.decoder),
        alpha=alpha,
        tie_break_keep_channel=args.tie_break == "keep",
        gb_threshold_b=args.gb_b,
        gb_mass_convention=GBMassConvention(args.gb_convention),
    )


def _meta(args: argparse.Namespace, command: str) -> dict:
    # workers is an execution detail: any worker count yields the same rows,
    # so it must not perturb the byte-identity of otherwise equal runs
    skip = {"func", "config", "output", "format", "command", "seed", "workers"}
    params = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in skip and value is not None
    }
    return {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", 0),
        "params": params,
    }


def _emit(args: argparse.Namespace, command: str, rows: list[dict], fields: list[str]) -> None:
    write_records(args.output, args.format, _meta(args, command), rows, fields)


def cmd_de_curve(args: argparse.Namespace) -> int:
    dd = _build_dd(args)
    alphas = parse_values(args.alpha)
    eps_values = parse_values(args.eps)
    points = [(a, e) for a in alphas for e in eps_values]
    rows = _pool_map(partial(_de_point, args, dd), points, args.workers)
    _emit(args, "de-curve", rows, ["alpha", "epsilon", "x_inf", "converged", "iterations"])
    return 0


def _de_point(args: argparse.Namespace, dd: DegreeDistribution, point: tuple) -> dict:
    alpha, eps = point
    params = DEParams(
        epsilon=eps,
        spec=_build_spec(args, alpha),
        dd=dd,
        max_iters=args.max_iters,
        fixpoint_tol=args.fixpoint_tol,
    )
    trajectory = iterate_to_fixpoint(params)
    return {
        "alpha": alpha,
        "epsilon": eps,
        "x_inf": trajectory.x_inf,
        "converged": trajectory.converged,
        "iterations": trajectory.iterations,
    }


def cmd_threshold(args: argparse.Namespace) -> int:
    dd = _build_dd(args)
    alphas = parse_values(args.alpha)
    query = ThresholdQuery(
        spec=_build_spec(args),
        dd=dd,
        eta=args.eta,
        eps_resolution=args.eps_resolution,
        coarse_step=args.coarse_step,
        max_iters=args.max_iters,
        fixpoint_tol=args.fixpoint_tol,
    )
    rows = _pool_map(partial(_threshold_point, query, args.eta), alphas, args.workers)
    _emit(args, "threshold", rows, ["alpha", "eta", "eps_star", "ok", "detail"])
    return 0 if all(row["ok"] for row in rows) else _NUMERICAL_ERROR


def _threshold_point(query: ThresholdQuery, eta: float, alpha: float) -> dict:
    try:
        eps_star = eta_threshold(query, alpha)
        return {"alpha": alpha, "eta": eta, "eps_star": eps_star, "ok": True, "detail": ""}
    except (ArithmeticError, FloatingPointError) as exc:
        return {
            "alpha": alpha,
            "eta": eta,
            "eps_star": float("nan"),
            "ok": False,
            "detail": str(exc),
        }


def cmd_useful_region(args: argparse.Namespace) -> int:
    dd = _build_dd(args)
    alphas = parse_values(args.alpha)
    kind = DecoderKind(args.decoder)
    variants = [True, False] if kind is DecoderKind.GALLAGER_A else [None]
    rows = []
    for keep in variants:
        task = partial(_boundary_point, args, dd, keep)
        rows.extend(_pool_map(task, alphas, args.workers))
    _emit(
        args,
        "useful-region",
        rows,
        ["alpha", "tie_break_keep_channel", "eps_boundary"],
    )
    return 0


def _boundary_point(
    args: argparse.Namespace, dd: DegreeDistribution, keep: bool | None, alpha: float
) -> dict:
    spec = _build_spec(args)
    if keep is not None:
        spec = DecoderSpec(
            kind=spec.kind,
            alpha=spec.alpha,
            tie_break_keep_channel=keep,
            gb_threshold_b=spec.gb_threshold_b,
            gb_mass_convention=spec.gb_mass_convention,
        )
    pairs = useful_region_boundary(
        spec,
        dd,
        [alpha],
        eps_resolution=args.eps_resolution,
        coarse_step=args.coarse_step,
        max_iters=args.max_iters,
        fixpoint_tol=args.fixpoint_tol,
    )
    return {
        "alpha": alpha,
        "tie_break_keep_channel": keep,
        "eps_boundary": pairs[0][1],
    }


def cmd_sensitivity(args: argparse.Namespace) -> int:
    dd = _build_dd(args)
    alphas = parse_values(args.alpha)
    rows = _pool_map(partial(_sensitivity_point, args, dd), alphas, args.workers)
    _emit(
        args,
        "sensitivity",
        rows,
        ["alpha", "eps_boundary", "d_eps", "d_alpha", "ratio", "ok", "detail"],
    )
    return 0 if all(row["ok"] for row in rows) else _NUMERICAL_ERROR


def _sensitivity_point(args: argparse.Namespace, dd: DegreeDistribution, alpha: float) -> dict:
    spec = _build_spec(args)
    row = {
        "alpha": alpha,
        "eps_boundary": float("nan"),
        "d_eps": float("nan"),
        "d_alpha": float("nan"),
        "ratio": float("nan"),
        "ok": False,
        "detail": "",
    }
    boundary = useful_region_boundary(
        spec,
        dd,
        [alpha],
        eps_resolution=args.eps_resolution,
        coarse_step=args.coarse_step,
        max_iters=args.max_iters,
        fixpoint_tol=args.fixpoint_tol,
    )[0][1]
    row["eps_boundary"] = boundary
    if boundary <= 0.0:
        row["detail"] = "empty useful region"
        return row
    try:
        result = sensitivity(
            spec,
            dd,
            epsilon=boundary,
            alpha=alpha,
            fd_step=args.fd_step,
            max_iters=args.max_iters,
            fixpoint_tol=args.fixpoint_tol,
            at_state=boundary,
        )
    except (ArithmeticError, FloatingPointError) as exc:
        row["detail"] = str(exc)
        return row
    row.update(
        d_eps=result.d_eps, d_alpha=result.d_alpha, ratio=result.ratio, ok=True
    )
    return row


def cmd_yield(args: argparse.Namespace) -> int:
    dd = _build_dd(args)
    spec = _build_spec(args)
    limit = alpha_max(
        spec,
        dd,
        epsilon=args.epsilon,
        eta=args.eta,
        alpha_resolution=args.alpha_resolution,
        coarse_step=args.coarse_step,
        max_iters=args.max_iters,
        fixpoint_tol=args.fixpoint_tol,
    )
    gain = yield_gain(YieldParams(alpha_max=limit, d0_area=args.d0 * args.area))
    rows = [
        {
            "alpha_max": limit,
            "d0": args.d0,
            "area": args.area,
            "delta_yield": gain.delta_yield,
            "relative_delta": gain.relative_delta,
        }
    ]
    _emit(
        args,
        "yield",
        rows,
        ["alpha_max", "d0", "area", "delta_yield", "relative_delta"],
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    blocklengths = parse_int_list(args.n)
    eps_values = parse_values(args.eps)
    modes = (
        [MaskMode.PERMANENT, MaskMode.TRANSIENT]
        if args.mode == "both"
        else [MaskMode(args.mode)]
    )
    kind = DecoderKind(args.decoder)
    channel_kind = ChannelKind.BEC if kind is DecoderKind.PEELING else ChannelKind.BSC
    rows = []
    for n in blocklengths:
        for mode in modes:
            for eps in eps_values:
                config = TrialConfig(
                    n=n,
                    dv=args.dv,
                    dc=args.dc,
                    channel=ChannelModel(channel_kind, eps),
                    spec=_build_spec(args, args.alpha),
                    mode=mode,
                    iterations=args.iterations,
                    num_code_realizations=args.codes,
                    trials_per_code=args.trials_per_code,
                    master_seed=args.seed,
                )
                stats = run_trials(config, workers=args.workers)
                rows.append(
                    {
                        "n": n,
                        "mode": mode.value,
                        "epsilon": eps,
                        "ser": float(stats.mean_ser[-1]),
                        "stderr": float(stats.stderr[-1]),
                        "trials": stats.trials,
                        "iterations": args.iterations,
                    }
                )
    _emit(
        args,
        "simulate",
        rows,
        ["n", "mode", "epsilon", "ser", "stderr", "trials", "iterations"],
    )
    return 0


def _classical_ga_step(x: float, eps: float, dv: int, dc: int) -> float:
    p_plus = (1.0 + (1.0 - 2.0 * x) ** (dc - 1)) / 2.0
    p_minus = (1.0 - (1.0 - 2.0 * x) ** (dc - 1)) / 2.0
    return eps - eps * p_plus ** (dv - 1) + (1.0 - eps) * p_minus ** (dv - 1)


def _classical_gb_step(x: float, eps: float, dv: int, dc: int, b: int) -> float:
    p_plus = (1.0 + (1.0 - 2.0 * x) ** (dc - 1)) / 2.0
    p_minus = (1.0 - (1.0 - 2.0 * x) ** (dc - 1)) / 2.0

    def tail(p: float) -> float:
        return sum(
            math.comb(dv - 1, j) * p**j * (1.0 - p) ** (dv - 1 - j)
            for j in range(b, dv)
        )

    return (1.0 - eps) * tail(p_minus) + eps * (1.0 - tail(p_plus))


def _verify_checks(seed: int) -> list[tuple[str, bool, str]]:
    dd = DegreeDistribution.from_regular(3, 6)
    checks: list[tuple[str, bool, str]] = []

    def record(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, bool(ok), detail))

    # Fault-free reductions: the adapted updates must collapse to the
    # classical recursions when no wire is missing.
    worst = 0.0
    for x in (0.02, 0.1, 0.3):
        for eps in (0.02, 0.04):
            worst = max(worst, abs(
                gallager_a_step(x, eps, 0.0, dd) - _classical_ga_step(x, eps, 3, 6)
            ))
            worst = max(worst, abs(
                gallager_b_step(x, eps, 0.0, dd) - _classical_gb_step(x, eps, 3, 6, 2)
            ))
    record("fault-free-reduction", worst < 1e-12, f"max deviation {worst:.2e}")

    # Frozen fault-free thresholds at default scan settings.
    ga = eta_threshold(ThresholdQuery(spec=DecoderSpec(DecoderKind.GALLAGER_A), dd=dd), 0.0)
    record(
        "unanimity-threshold",
        abs(ga - 0.0394609375) < 2e-5,
        f"eps_star {ga!r}",
    )
    peel = eta_threshold(ThresholdQuery(spec=DecoderSpec(DecoderKind.PEELING), dd=dd), 0.0)
    record(
        "peeling-threshold",
        abs(peel - 0.4294296875) < 2e-5,
        f"eps_star {peel!r}",
    )

    # Erasure decoding never exceeds the channel erasure rate, and never
    # drops below the floor forced by permanently silent check messages.
    ok_bound, ok_floor = True, True
    for eps in (0.1, 0.3, 0.42):
        for alpha in (0.0, 0.01, 0.1):
            params = DEParams(epsilon=eps, spec=DecoderSpec(DecoderKind.PEELING, alpha=alpha), dd=dd)
            x_inf = iterate_to_fixpoint(params).x_inf
            ok_bound &= x_inf <= eps + 1e-12
            floor = eps * dd.eval_lambda(1.0 - (1.0 - alpha) * dd.eval_rho(1.0 - alpha))
            ok_floor &= x_inf >= floor - 1e-10
    record("erasure-ceiling", ok_bound)
    record("erasure-floor", ok_floor)

    # Tie-break dominance: keeping the channel value on lone dissent covers
    # at least the useful region of the flipping variant.
    keep = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A), dd, [0.01, 0.03], eps_resolution=1e-4
    )
    flip = useful_region_boundary(
        DecoderSpec(DecoderKind.GALLAGER_A, tie_break_keep_channel=False),
        dd,
        [0.01, 0.03],
        eps_resolution=1e-4,
    )
    dominance = all(k[1] >= f[1] - 1e-12 for k, f in zip(keep, flip))
    record("tie-break-dominance", dominance, f"keep={keep} flip={flip}")

    # Exhaustive oracle vs Monte Carlo on a tiny graph.
    tiny = TannerGraph(
        n=4, m=4,
        var_of=np.array([0, 0, 1, 1, 2, 2, 3, 3]),
        chk_of=np.array([0, 1, 1, 2, 2, 3, 3, 0]),
        dv=2, dc=2,
    )
    channel = ChannelModel(ChannelKind.BSC, 0.2)
    spec = DecoderSpec(DecoderKind.GALLAGER_A, alpha=0.1)
    exact = oracle_exact_ser(tiny, channel, spec, MaskMode.TRANSIENT, 2)
    stats = simulate_graph(tiny, channel, spec, MaskMode.TRANSIENT, 2, n_trials=20000, master_seed=seed)
    sigma = np.maximum(stats.stderr, 1e-9)
    dev = float(np.max(np.abs(stats.mean_ser - exact) / sigma))
    record("oracle-vs-simulation", dev <= 4.0, f"max deviation {dev:.2f} sigma")

    # Tree graphs: per-iteration error is identical under permanent and
    # transient wiring faults.
    tree = TannerGraph(
        n=4, m=2,
        var_of=np.array([0, 1, 1, 2, 3]),
        chk_of=np.array([0, 0, 1, 0, 1]),
        dv=2, dc=3,
    )
    spec_tree = DecoderSpec(DecoderKind.PEELING, alpha=0.25)
    bec = ChannelModel(ChannelKind.BEC, 0.3)
    perm = oracle_exact_ser(tree, bec, spec_tree, MaskMode.PERMANENT, 3)
    trans = oracle_exact_ser(tree, bec, spec_tree, MaskMode.TRANSIENT, 3)
    gap = float(np.max(np.abs(perm - trans)))
    record("tree-mode-equivalence", gap < 1e-12, f"max gap {gap:.2e}")

    # Yield formulas on the worked example.
    gain = yield_gain(YieldParams(alpha_max=0.01, d0_area=1.0))
    record(
        "yield-example",
        abs(gain.delta_yield - 0.0025) < 1e-15 and abs(gain.relative_delta - 0.005) < 1e-15,
        f"delta={gain.delta_yield} relative={gain.relative_delta}",
    )
    return checks


def cmd_verify(args: argparse.Namespace) -> int:
    checks = _verify_checks(args.seed)
    rows = []
    failed = 0
    for name, ok, detail in checks:
        status = "ok" if ok else "FAIL"
        line = f"{status:4s} {name}" + (f" ({detail})" if detail else "")
        print(line)
        rows.append({"check": name, "ok": ok, "detail": detail})
        failed += not ok
    if args.output not in (None, "-"):
        write_records(args.output, args.format, _meta(args, "verify"), rows, ["check", "ok", "detail"])
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else _VERIFY_ERROR


def _add_common(parser: argparse.ArgumentParser, *, decoder: bool = True) -> None:
    parser.add_argument("--config", help="key=value file; explicit flags override it")
    parser.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers")
    if decoder:
        parser.add_argument(
            "--decoder",
            required=True,
            choices=[kind.value for kind in DecoderKind],
        )
        parser.add_argument("--dv", type=int, default=3)
        parser.add_argument("--dc", type=int, default=6)
        parser.add_argument("--lambda-coeffs", dest="lambda_coeffs",
                            help="edge-perspective variable profile, e.g. '{3: 1.0}'")
        parser.add_argument("--rho-coeffs", dest="rho_coeffs",
                            help="edge-perspective check profile, e.g. '{6: 1.0}'")
        parser.add_argument("--tie-break", choices=["keep", "flip"], default="keep")
        parser.add_argument("--gb-b", type=int, default=None,
                            help="counting threshold; default majority of design dv")
        parser.add_argument(
            "--gb-convention",
            choices=[c.value for c in GBMassConvention],
            default=GBMassConvention.TRUNCATED.value,
        )
        parser.add_argument("--max-iters", type=int, default=2000)
        parser.add_argument("--fixpoint-tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miswire",
        description="Message-passing decoding with missing connections: "
        "asymptotic analysis and finite-length simulation.",
    )
    parser.add_argument("--version", action="version", version=f"miswire {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("de-curve", help="density-evolution limit over an (alpha, eps) grid")
    _add_common(p)
    p.add_argument("--alpha", required=True, help="wire-removal rates: start:stop:step or comma list")
    p.add_argument("--eps", required=True, help="channel grid start:stop:step or comma list")
    p.set_defaults(func=cmd_de_curve)

    p = sub.add_parser("threshold", help="eta-threshold vs alpha")
    _add_common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--eta", type=float, default=1e-5)
    p.add_argument("--eps-resolution", type=float, default=1e-5)
    p.add_argument("--coarse-step", type=float, default=1e-3)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("useful-region", help="channel boundary of the useful region vs alpha")
    _add_common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--eps-resolution", type=float, default=1e-5)
    p.add_argument("--coarse-step", type=float, default=1e-3)
    p.set_defaults(func=cmd_useful_region)

    p = sub.add_parser("sensitivity", help="boundary sensitivity to channel noise vs wiring faults")
    _add_common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--eps-resolution", type=float, default=1e-5)
    p.add_argument("--coarse-step", type=float, default=1e-3)
    p.add_argument("--fd-step", type=float, default=1e-7)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("yield", help="tolerable defect rate and manufacturing yield gain")
    _add_common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--eta", type=float, default=1e-5)
    p.add_argument("--d0", type=float, required=True, help="defect density")
    p.add_argument("--area", type=float, required=True, help="die area")
    p.add_argument("--alpha-resolution", type=float, default=1e-5)
    p.add_argument("--coarse-step", type=float, default=1e-2)
    p.set_defaults(func=cmd_yield)

    p = sub.add_parser("simulate", help="finite-length Monte Carlo SER vs epsilon")
    _add_common(p)
    p.add_argument("--n", required=True, help="comma list of blocklengths")
    p.add_argument("--eps", required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--mode", choices=["permanent", "transient", "both"], default="permanent")
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--codes", type=int, default=100)
    p.add_argument("--trials-per-code", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="fast self-checks; exit 4 on any failure")
    _add_common(p, decoder=False)
    p.set_defaults(func=cmd_verify)

    return parser


def _expand_config(tokens: list[str]) -> list[str]:
    for i, token in enumerate(tokens):
        if token == "--config" and i + 1 < len(tokens):
            path = tokens[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
        else:
            continue
        return tokens[:1] + read_config_args(path) + tokens[1:]
    return tokens


def main(argv: list[str] | None = None) -> int:
    tokens = list(sys.argv[1:] if argv is None else argv)
    try:
        tokens = _expand_config(tokens)
    except (OSError, ValueError) as exc:
        print(f"miswire: config error: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    parser = build_parser()
    args = parser.parse_args(tokens)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"miswire: invalid parameters: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"miswire: numerical failure: {exc}", file=sys.stderr)
        return _NUMERICAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
