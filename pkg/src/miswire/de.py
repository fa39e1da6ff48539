"""Density evolution for message-passing decoders with missing connections.

Wires between variable and check nodes are absent independently with
probability alpha; a missing wire delivers an erasure in both directions.
The recursions below track the per-iteration probability that a
variable-to-check message is wrong (or erased, for the peeling decoder),
under the all-one codeword restriction.

Decoders:

* peeling      - binary erasure channel, erasure-filling rule.
* gallager_a   - binary symmetric channel, unanimity rule: flip the channel
                 value only when every delivered message opposes it.  The
                 tie-break flag decides what happens when a single opposing
                 message arrives alone (keep the channel value, or flip).
* gallager_b   - binary symmetric channel, counting rule: flip when at least
                 b delivered messages oppose the current value.

For gallager_b two conventions are provided.  "truncated" sums only over
variables with at least b connected checks, dropping the error mass of the
rest; "event-complete" is the exact tree recursion of the counting rule
(for dv=3 it equals the truncated form plus
eps * Pr[fewer than b connected checks]).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .ensemble import DegreeDistribution

logger = logging.getLogger(__name__)

# states are clamped to [0,1]; excursions beyond this are reported
_CLAMP_WARN = 1e-9


class DecoderKind(str, Enum):
    PEELING = "peeling"
    GALLAGER_A = "gallager-a"
    GALLAGER_B = "gallager-b"


class GBMassConvention(str, Enum):
    TRUNCATED = "truncated"
    EVENT_COMPLETE = "event-complete"


@dataclass(frozen=True)
class DecoderSpec:
    """Decoder family plus the wiring-fault probability alpha."""

    kind: DecoderKind
    alpha: float = 0.0
    tie_break_keep_channel: bool = True
    gb_threshold_b: int | None = None
    gb_mass_convention: GBMassConvention = GBMassConvention.TRUNCATED

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DecoderKind(self.kind))
        object.__setattr__(
            self, "gb_mass_convention", GBMassConvention(self.gb_mass_convention)
        )
        a = float(self.alpha)
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha={self.alpha!r} outside [0, 1]")
        object.__setattr__(self, "alpha", a)
        if self.gb_threshold_b is not None:
            b = self.gb_threshold_b
            if not isinstance(b, int) or isinstance(b, bool) or b < 1:
                raise ValueError(f"gb_threshold_b={b!r} must be a positive integer")


def default_gb_threshold(dv: int) -> int:
    """Majority threshold floor((dv+1)/2) computed from the designed degree."""
    return (dv + 1) // 2


@dataclass(frozen=True)
class DEParams:
    """One density-evolution run: channel parameter plus iteration control."""

    epsilon: float
    spec: DecoderSpec
    dd: DegreeDistribution
    max_iters: int = 2000
    fixpoint_tol: float = 1e-12

    def __post_init__(self) -> None:
        e = float(self.epsilon)
        if not 0.0 <= e < 0.5:
            raise ValueError(f"epsilon={self.epsilon!r} outside [0, 0.5)")
        object.__setattr__(self, "epsilon", e)
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.fixpoint_tol > 0.0:
            raise ValueError("fixpoint_tol must be positive")


@dataclass
class DETrajectory:
    """State sequence of a DE run; xs[0] is the channel parameter."""

    xs: list[float]
    converged: bool

    @property
    def x_inf(self) -> float:
        return self.xs[-1]

    @property
    def iterations(self) -> int:
        return len(self.xs) - 1


def _check_state_args(x: float, epsilon: float, alpha: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x!r} outside [0, 1]")
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon={epsilon!r} outside [0, 0.5]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha={alpha!r} outside [0, 1]")


def _poly_edge(coeffs, s: float) -> float:
    """sum_d c_d s^(d-1) without domain restriction on s."""
    return sum(c * s ** (d - 1) for d, c in coeffs.items())


def peeling_step(x: float, epsilon: float, alpha: float, dd: DegreeDistribution) -> float:
    """One erasure-rate update of the peeling decoder.

    x' = eps * lambda( alpha + (1-alpha) * (1 - rho((1-x)(1-alpha))) )

    A check helps only if its own wire and all other inputs are present and
    unerased; a variable stays erased only if the channel erased it and no
    connected check helps.
    """
    _check_state_args(x, epsilon, alpha)
    inner = alpha + (1.0 - alpha) * (1.0 - _poly_edge(dd.rho_coeffs, (1.0 - x) * (1.0 - alpha)))
    return epsilon * _poly_edge(dd.lambda_coeffs, inner)


def check_message_probs(
    x: float,
    alpha: float,
    dd: DegreeDistribution,
    *,
    literal_irregular: bool = False,
) -> tuple[float, float, float]:
    """Distribution (p0, p_plus, p_minus) of a delivered check-to-variable message.

    Conditions on the check-to-variable wire being present.  p0 is the
    probability the check emits an erasure because one of its other wires is
    missing; p_plus / p_minus are the probabilities of a correct / incorrect
    sign under all-one transmission when the variable-to-check error rate
    is x.

    For irregular rho the default uses the product form with p_plus carrying
    the 1 + rho(1-2x) factor (regular and irregular forms then coincide on
    point masses).  literal_irregular=True swaps the two sign labels, an
    alternative labeling kept for comparison only.
    """
    _check_state_args(x, 0.0, alpha)
    if dd.is_regular:
        dc = dd.dc
        present = (1.0 - alpha) ** (dc - 1)
        s = (1.0 - 2.0 * x) ** (dc - 1)
        p0 = 1.0 - present
        p_plus = present * (1.0 + s) / 2.0
        p_minus = present * (1.0 - s) / 2.0
    else:
        present = _poly_edge(dd.rho_coeffs, 1.0 - alpha)
        s = _poly_edge(dd.rho_coeffs, 1.0 - 2.0 * x)
        p0 = 1.0 - present
        if literal_irregular:
            p_plus = present * (1.0 - s) / 2.0
            p_minus = present * (1.0 + s) / 2.0
        else:
            p_plus = present * (1.0 + s) / 2.0
            p_minus = present * (1.0 - s) / 2.0
    return p0, p_plus, p_minus


def _connected_pmf(d_out: int, alpha: float) -> list[float]:
    """Binomial(d_out, 1-alpha) mass for the number of connected check wires."""
    beta = 1.0 - alpha
    return [
        math.comb(d_out, v) * beta**v * alpha ** (d_out - v) for v in range(d_out + 1)
    ]


def gallager_a_step(
    x: float,
    epsilon: float,
    alpha: float,
    dd: DegreeDistribution,
    *,
    tie_break_keep_channel: bool = True,
    literal_irregular: bool = False,
) -> float:
    """One error-rate update of the unanimity-rule decoder.

    With the tie-break keeping the channel value, a lone opposing message
    (all other deliveries erased or missing) does not flip the bit; the
    correction terms p_minus*p0^(v-1) and p_plus*p0^(v-1) below count that
    lone-dissent event once, independent of which wire carried it.  The
    flip variant drops both terms.
    """
    _check_state_args(x, epsilon, alpha)
    p0, pp, pm = check_message_probs(x, alpha, dd, literal_irregular=literal_irregular)
    keep = tie_break_keep_channel
    total = 0.0
    for d, lam in dd.lambda_coeffs.items():
        pv = _connected_pmf(d - 1, alpha)
        acc = epsilon * pv[0]
        for v in range(1, d):
            first = (pm + p0) ** v - p0**v
            second = 1.0 - (pp + p0) ** v + p0**v
            if keep:
                first -= pm * p0 ** (v - 1)
                second += pp * p0 ** (v - 1)
            acc += pv[v] * ((1.0 - epsilon) * first + epsilon * second)
        total += lam * acc
    return total


def _binom_tail(n: int, p: float, k0: int) -> float:
    """Pr[Binomial(n, p) >= k0]."""
    if k0 <= 0:
        return 1.0
    if k0 > n:
        return 0.0
    q = 1.0 - p
    return sum(math.comb(n, k) * p**k * q ** (n - k) for k in range(k0, n + 1))


def gallager_b_step(
    x: float,
    epsilon: float,
    alpha: float,
    dd: DegreeDistribution,
    *,
    b: int | None = None,
    convention: GBMassConvention = GBMassConvention.TRUNCATED,
) -> float:
    """One error-rate update of the counting-rule decoder with threshold b.

    b defaults to floor((dv+1)/2) per variable degree; it is fixed across
    iterations and computed from designed degrees.  See the module docstring
    for the two mass conventions.
    """
    _check_state_args(x, epsilon, alpha)
    convention = GBMassConvention(convention)
    p0, pp, pm = check_message_probs(x, alpha, dd)
    beta = 1.0 - alpha
    total = 0.0
    for d, lam in dd.lambda_coeffs.items():
        bd = default_gb_threshold(d) if b is None else b
        if not 1 <= bd <= d - 1:
            raise ValueError(f"threshold b={bd} outside [1, {d - 1}] for degree {d}")
        if convention is GBMassConvention.TRUNCATED:
            pv = _connected_pmf(d - 1, alpha)
            acc = 0.0
            for v in range(bd, d):
                acc += pv[v] * (
                    (1.0 - epsilon) * pm**v * (1.0 - pm) ** (d - 1 - v)
                    + epsilon * (1.0 - pp**v * (1.0 - pp) ** (d - 1 - v))
                )
        else:
            # exact law of the counting rule: a designed wire delivers an
            # opposing (supporting) sign with prob (1-alpha)*p_minus (p_plus)
            acc = (1.0 - epsilon) * _binom_tail(d - 1, beta * pm, bd) + epsilon * (
                1.0 - _binom_tail(d - 1, beta * pp, bd)
            )
        total += lam * acc
    return total


def de_step(x: float, epsilon: float, spec: DecoderSpec, dd: DegreeDistribution) -> float:
    """Dispatch one DE update for the given decoder spec."""
    if spec.kind is DecoderKind.PEELING:
        return peeling_step(x, epsilon, spec.alpha, dd)
    if spec.kind is DecoderKind.GALLAGER_A:
        return gallager_a_step(
            x, epsilon, spec.alpha, dd, tie_break_keep_channel=spec.tie_break_keep_channel
        )
    return gallager_b_step(
        x, epsilon, spec.alpha, dd, b=spec.gb_threshold_b, convention=spec.gb_mass_convention
    )


def iterate_to_fixpoint(params: DEParams) -> DETrajectory:
    """Iterate the DE map from x0 = epsilon until the update falls below
    fixpoint_tol or max_iters is reached.

    States are clamped to [0, 1]; a clamp larger than 1e-9 is logged as a
    warning.  A non-finite state raises instead of being repaired.
    """
    spec, dd, eps = params.spec, params.dd, params.epsilon
    xs = [eps]
    x = eps
    converged = False
    for _ in range(params.max_iters):
        x_new = de_step(x, eps, spec, dd)
        if not math.isfinite(x_new):
            raise FloatingPointError(
                f"density evolution produced a non-finite state at iteration {len(xs)}"
            )
        if x_new < 0.0 or x_new > 1.0:
            clamped = min(1.0, max(0.0, x_new))
            if abs(x_new - clamped) > _CLAMP_WARN:
                logger.warning(
                    "DE state %.17g clamped to %.1f at iteration %d", x_new, clamped, len(xs)
                )
            x_new = clamped
        xs.append(x_new)
        if abs(x_new - x) < params.fixpoint_tol:
            converged = True
            x = x_new
            break
        x = x_new
    return DETrajectory(xs=xs, converged=converged)
