"""Edge-perspective degree distributions for bipartite code ensembles.

A distribution pair (lambda, rho) lists, for each degree d, the fraction of
edges attached to a variable (resp. check) node of degree d.  Polynomials are
evaluated in the usual edge-perspective convention:

    lambda(x) = sum_d lambda_d x^(d-1),   rho(x) = sum_d rho_d x^(d-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

MAX_DEGREE = 64

# coefficients must sum to 1 within this after normalization
_SUM_TOL = 1e-12
# raw inputs may deviate by at most this before being rejected outright
_RENORM_TOL = 1e-9


def _clean(coeffs: Mapping[int, float], name: str) -> dict[int, float]:
    if not coeffs:
        raise ValueError(f"{name}: empty degree distribution")
    out: dict[int, float] = {}
    for d, c in coeffs.items():
        if not isinstance(d, int) or isinstance(d, bool):
            raise ValueError(f"{name}: degree {d!r} is not an integer")
        if d < 2 or d > MAX_DEGREE:
            raise ValueError(f"{name}: degree {d} outside [2, {MAX_DEGREE}]")
        c = float(c)
        if not c >= 0.0:
            raise ValueError(f"{name}: coefficient for degree {d} is negative or NaN")
        if c > 0.0:
            out[d] = c
    if not out:
        raise ValueError(f"{name}: all coefficients are zero")
    total = sum(out.values())
    if abs(total - 1.0) > _RENORM_TOL:
        raise ValueError(
            f"{name}: coefficients sum to {total!r}, deviation exceeds {_RENORM_TOL}"
        )
    if total != 1.0:
        out = {d: c / total for d, c in out.items()}
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class DegreeDistribution:
    """Validated, normalized (lambda, rho) pair.

    Inputs whose coefficients sum to 1 within 1e-9 are renormalized; anything
    further off is rejected.  Instances are immutable.
    """

    lambda_coeffs: Mapping[int, float]
    rho_coeffs: Mapping[int, float]

    def __post_init__(self) -> None:
        lam = _clean(self.lambda_coeffs, "lambda")
        rho = _clean(self.rho_coeffs, "rho")
        object.__setattr__(self, "lambda_coeffs", MappingProxyType(lam))
        object.__setattr__(self, "rho_coeffs", MappingProxyType(rho))

    # Mapping proxies do not pickle; rebuild from plain dicts instead so
    # distributions can cross process boundaries (parallel grid scans).
    def __getstate__(self) -> dict:
        return {
            "lambda_coeffs": dict(self.lambda_coeffs),
            "rho_coeffs": dict(self.rho_coeffs),
        }

    def __setstate__(self, state: dict) -> None:
        self.__init__(**state)

    @classmethod
    def from_regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        """Point masses at dv and dc."""
        if not isinstance(dv, int) or not isinstance(dc, int):
            raise ValueError("dv and dc must be integers")
        if dv < 2 or dc < 2:
            raise ValueError(f"regular degrees must be >= 2, got dv={dv}, dc={dc}")
        return cls({dv: 1.0}, {dc: 1.0})

    @property
    def is_regular(self) -> bool:
        return len(self.lambda_coeffs) == 1 and len(self.rho_coeffs) == 1

    @property
    def dv(self) -> int:
        """Variable degree of a regular pair; error otherwise."""
        if len(self.lambda_coeffs) != 1:
            raise ValueError("dv is only defined for a regular distribution")
        return next(iter(self.lambda_coeffs))

    @property
    def dc(self) -> int:
        """Check degree of a regular pair; error otherwise."""
        if len(self.rho_coeffs) != 1:
            raise ValueError("dc is only defined for a regular distribution")
        return next(iter(self.rho_coeffs))

    def eval_lambda(self, x: float) -> float:
        """lambda(x) for x in [0, 1]."""
        _check_unit(x)
        return sum(c * x ** (d - 1) for d, c in self.lambda_coeffs.items())

    def eval_rho(self, x: float) -> float:
        """rho(x) for x in [0, 1]."""
        _check_unit(x)
        return sum(c * x ** (d - 1) for d, c in self.rho_coeffs.items())

    def design_rate(self) -> float:
        """1 - (sum rho_d / d) / (sum lambda_d / d); may be negative."""
        num = sum(c / d for d, c in self.rho_coeffs.items())
        den = sum(c / d for d, c in self.lambda_coeffs.items())
        return 1.0 - num / den


def _check_unit(x: float) -> None:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"polynomial argument {x!r} outside [0, 1]")
