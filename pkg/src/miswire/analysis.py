"""Threshold, robustness and yield analyses built on the DE recursions.

All scanners share the same shape: a coarse sweep over the scanned parameter
locates the last passing grid cell (guarding against non-monotone pass
regions), then bisection inside that cell refines the boundary to the
requested resolution.  A probe whose DE run does not converge counts as
failing.

The DE maps are nondecreasing in the state x, which licenses two early
exits inside a probe: once the trajectory is falling and already below the
target, it can never rise back above it; once it is rising and already at
or above the target, it can never fall back under.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .de import DecoderSpec, DEParams, de_step, iterate_to_fixpoint
from .ensemble import DegreeDistribution

# denominators smaller than this mean the fixed point is numerically
# indistinguishable from a phase transition
_SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class ThresholdQuery:
    """Parameters shared by threshold-style scans."""

    spec: DecoderSpec
    dd: DegreeDistribution
    eta: float = 1e-5
    eps_resolution: float = 1e-5
    coarse_step: float = 1e-3
    max_iters: int = 2000
    fixpoint_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta={self.eta!r} outside (0, 1)")
        if not 0.0 < self.eps_resolution < 0.5:
            raise ValueError("eps_resolution outside (0, 0.5)")
        if not 0.0 < self.coarse_step < 0.5:
            raise ValueError("coarse_step outside (0, 0.5)")


@dataclass(frozen=True)
class ThresholdPoint:
    alpha: float
    eps_star: float
    ok: bool = True
    detail: str = ""


@dataclass(frozen=True)
class SensitivityResult:
    x_inf: float
    d_eps: float
    d_alpha: float

    @property
    def ratio(self) -> float:
        """d_eps / d_alpha; NaN when the alpha partial vanishes."""
        if self.d_alpha == 0.0:
            return math.nan
        return self.d_eps / self.d_alpha


@dataclass(frozen=True)
class YieldParams:
    """alpha_max plus the defect-density/area product of the fabricated device."""

    alpha_max: float
    d0_area: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha_max <= 1.0:
            raise ValueError("alpha_max outside [0, 1]")
        if not self.d0_area >= 0.0:
            raise ValueError("d0_area must be >= 0")


@dataclass(frozen=True)
class YieldGain:
    delta_yield: float
    relative_delta: float


def _limit_state(
    spec: DecoderSpec,
    dd: DegreeDistribution,
    eps: float,
    target: float,
    max_iters: int,
    tol: float,
) -> bool:
    """True iff the DE limit from x0=eps provably falls below target."""
    x = eps
    for _ in range(max_iters):
        x_new = de_step(x, eps, spec, dd)
        if not math.isfinite(x_new):
            return False
        x_new = min(1.0, max(0.0, x_new))
        if x_new <= x and x_new < target:
            return True
        if x_new >= x and x_new >= target:
            return False
        if abs(x_new - x) < tol:
            return x_new < target
        x = x_new
    return False


def _scan_last_passing(passes, grid: list[float], hi_cap: float, resolution: float) -> float:
    """Locate sup{u : passes(u)} by last-passing-cell scan plus bisection."""
    last = None
    for u in grid:
        if passes(u):
            last = u
    if last is None:
        return 0.0
    idx = grid.index(last)
    hi = grid[idx + 1] if idx + 1 < len(grid) else hi_cap
    lo = last
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def eta_threshold(q: ThresholdQuery, alpha: float) -> float:
    """Largest channel parameter in [0, 0.5) whose DE limit stays below eta.

    Resolved to q.eps_resolution; returns 0.0 when no probe passes.  A probe
    that does not converge within q.max_iters counts as failing, so values
    near a slow-converging transition are conservative.
    """
    spec = replace(q.spec, alpha=float(alpha))

    def passes(eps: float) -> bool:
        return _limit_state(spec, q.dd, eps, q.eta, q.max_iters, q.fixpoint_tol)

    n = int(math.floor(0.5 / q.coarse_step - 1e-9)) + 1
    grid = [k * q.coarse_step for k in range(n)]
    return _scan_last_passing(passes, grid, 0.5, q.eps_resolution)


def threshold_curve(q: ThresholdQuery, alpha_grid) -> list[ThresholdPoint]:
    """eta_threshold at each alpha; failures are recorded, not dropped."""
    out = []
    for a in alpha_grid:
        try:
            out.append(ThresholdPoint(alpha=float(a), eps_star=eta_threshold(q, a)))
        except Exception as exc:  # noqa: BLE001 - survey must not abort
            out.append(
                ThresholdPoint(alpha=float(a), eps_star=math.nan, ok=False, detail=str(exc))
            )
    return out


def useful_region_boundary(
    spec: DecoderSpec,
    dd: DegreeDistribution,
    alpha_grid,
    *,
    eps_resolution: float = 1e-5,
    coarse_step: float = 1e-3,
    max_iters: int = 2000,
    fixpoint_tol: float = 1e-12,
) -> list[tuple[float, float]]:
    """For each alpha, sup{eps in (0, 0.5) : x_inf(eps, alpha) < eps}.

    Above the returned boundary the decoder leaves more errors than the raw
    channel delivers.  For the peeling decoder the whole quadrant is useful
    and the scan tops out one resolution step under 0.5.
    """
    out = []
    for a in alpha_grid:
        s = replace(spec, alpha=float(a))

        def passes(eps: float) -> bool:
            if eps <= 0.0:
                return False
            return _limit_state(s, dd, eps, eps, max_iters, fixpoint_tol)

        n = int(math.floor(0.5 / coarse_step - 1e-9)) + 1
        grid = [k * coarse_step for k in range(1, n)]
        out.append((float(a), _scan_last_passing(passes, grid, 0.5, eps_resolution)))
    return out


def alpha_max(
    spec: DecoderSpec,
    dd: DegreeDistribution,
    epsilon: float,
    eta: float,
    *,
    alpha_resolution: float = 1e-5,
    coarse_step: float = 1e-2,
    max_iters: int = 2000,
    fixpoint_tol: float = 1e-12,
) -> float:
    """Largest wiring-fault probability keeping the DE limit below eta.

    Scans alpha over [0, 1]; returns 0.0 when even the fault-free decoder
    misses the target at this channel parameter.
    """

    def passes(a: float) -> bool:
        s = replace(spec, alpha=a)
        return _limit_state(s, dd, epsilon, eta, max_iters, fixpoint_tol)

    n = int(round(1.0 / coarse_step))
    grid = [k * coarse_step for k in range(n + 1)]
    return _scan_last_passing(passes, grid, 1.0, alpha_resolution)


def _central_partial(fun, u: float, lo: float, hi: float, h: float) -> float:
    """Central difference, degrading to one-sided at the domain edge."""
    if u - h >= lo and u + h <= hi:
        return (fun(u + h) - fun(u - h)) / (2.0 * h)
    if u + h <= hi:
        return (fun(u + h) - fun(u)) / h
    return (fun(u) - fun(u - h)) / h


def sensitivity(
    spec: DecoderSpec,
    dd: DegreeDistribution,
    epsilon: float,
    alpha: float,
    *,
    fd_step: float = 1e-7,
    max_iters: int = 2000,
    fixpoint_tol: float = 1e-12,
    at_state: float | None = None,
) -> SensitivityResult:
    """Partials of the DE limit with respect to the channel parameter and alpha.

    Differentiates the fixed-point identity x = f(x, eps, alpha) implicitly:
    dx/du = (df/du) / (1 - df/dx), with the inner partials taken by central
    finite differences of the one-step map (step fd_step relative to
    max(|value|, 1)).  By default x is the converged DE limit; at_state pins
    the evaluation state instead, which is how boundary points are probed
    (the boundary state x = eps is a fixed point that plain iteration
    escapes).  Raises ArithmeticError when |1 - df/dx| < 1e-6, i.e. at a
    phase transition, where the implicit form is meaningless.
    """
    spec = replace(spec, alpha=float(alpha))
    if at_state is None:
        traj = iterate_to_fixpoint(
            DEParams(
                epsilon=epsilon,
                spec=spec,
                dd=dd,
                max_iters=max_iters,
                fixpoint_tol=fixpoint_tol,
            )
        )
        if not traj.converged:
            raise ArithmeticError(
                f"DE did not converge at eps={epsilon}, alpha={alpha}; "
                "sensitivity undefined"
            )
        x0 = traj.x_inf
    else:
        x0 = float(at_state)

    def f_of_x(x):
        return de_step(x, epsilon, spec, dd)

    def f_of_eps(e):
        return de_step(x0, e, spec, dd)

    def f_of_alpha(a):
        return de_step(x0, epsilon, replace(spec, alpha=a), dd)

    hx = fd_step * max(abs(x0), 1.0)
    he = fd_step * max(abs(epsilon), 1.0)
    ha = fd_step * max(abs(alpha), 1.0)
    fx = _central_partial(f_of_x, x0, 0.0, 1.0, hx)
    fe = _central_partial(f_of_eps, epsilon, 0.0, 0.5, he)
    fa = _central_partial(f_of_alpha, float(alpha), 0.0, 1.0, ha)
    den = 1.0 - fx
    if abs(den) < _SINGULAR_TOL:
        raise ArithmeticError(
            f"|1 - df/dx| = {abs(den):.3e} at x={x0:.6g}; "
            "fixed point is at a phase transition"
        )
    return SensitivityResult(x_inf=x0, d_eps=fe / den, d_alpha=fa / den)


def yield_gain(p: YieldParams) -> YieldGain:
    """Fabrication-yield improvement from tolerating alpha_max wiring faults.

    With defect-density/area product q = d0_area, accepting devices whose
    fault fraction is below alpha_max adds

        delta_yield    = alpha_max * q / (1 + q)^2
        relative_delta = alpha_max * q / (1 + q)

    on top of the baseline yield 1 / (1 + q).
    """
    q = p.d0_area
    return YieldGain(
        delta_yield=p.alpha_max * q / (1.0 + q) ** 2,
        relative_delta=p.alpha_max * q / (1.0 + q),
    )
