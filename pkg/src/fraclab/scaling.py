"""Scaling factors for the fractional double-well functionals near ``s = 1/2``.

Every branch is written in the variable ``x = (2s - 1)|log eps|`` through
``expm1(x)/x``, which keeps the formulas accurate when ``x`` is tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ._numerics import expm1_over
from .errors import DomainError

# |2s - 1| below this is treated as the critical exponent
HALF_TOL = 1e-12
DEFAULT_THRESHOLDS = (0.1, 10.0)


@dataclass(frozen=True)
class FracParams:
    s: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")

    @property
    def log_eps(self) -> float:
        """``|log eps|``."""
        return -math.log(self.eps)

    @property
    def x(self) -> float:
        """``(2s - 1)|log eps|``."""
        return (2.0 * self.s - 1.0) * self.log_eps

    @property
    def is_half(self) -> bool:
        return abs(2.0 * self.s - 1.0) < HALF_TOL


class Regime(str, Enum):
    SUB_LOGARITHMIC = "SubLogarithmic"
    ORDER1 = "Order1"
    SUPER_LOGARITHMIC = "SuperLogarithmic"


@dataclass(frozen=True)
class RegimeReport:
    value: float
    classification: Regime
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS


def lambda_plus(p: FracParams) -> float:
    """``(1 - 2s) / (eps^{2s-1} - 1)`` for ``s > 1/2``."""
    if not p.s > 0.5:
        raise DomainError(f"lambda_plus needs s > 1/2, got {p.s}")
    return 1.0 / (p.log_eps * expm1_over(-p.x))


def lambda_minus(p: FracParams) -> float:
    """``(2s - 1) / (eps^{(1-2s)/(2s)} - 1)`` for ``s < 1/2``."""
    if not p.s < 0.5:
        raise DomainError(f"lambda_minus needs s < 1/2, got {p.s}")
    y = (1.0 - 2.0 * p.s) / (2.0 * p.s) * p.log_eps
    return 2.0 * p.s / (p.log_eps * expm1_over(-y))


def lambda_continuous(p: FracParams) -> float:
    """Scaling factor continuous across ``s = 1/2``, where it is ``1/|log eps|``."""
    if p.is_half:
        return 1.0 / p.log_eps
    return lambda_plus(p) if p.s > 0.5 else lambda_minus(p)


def scaled_coefficients(p: FracParams) -> tuple[float, float]:
    """Coefficients ``(lambda/eps, lambda eps^{(2s-1)^+})`` of ``int W`` and ``[u]_s^2``."""
    lam = lambda_continuous(p)
    if p.is_half or p.s < 0.5:
        return lam / p.eps, lam
    # lambda_+ eps^{2s-1} = (1/|log eps|) x / (e^x - 1)
    return lam / p.eps, 1.0 / (p.log_eps * expm1_over(p.x))


def regime(p: FracParams, thresholds: tuple[float, float] = DEFAULT_THRESHOLDS) -> RegimeReport:
    """Classify ``(2s - 1)|log eps|`` against ``(low, high)`` thresholds."""
    low, high = thresholds
    if not 0 <= low < high:
        raise DomainError(f"thresholds must satisfy 0 <= low < high, got {thresholds}")
    value = 0.0 if p.is_half else p.x
    if abs(value) < low:
        cls = Regime.SUB_LOGARITHMIC
    elif abs(value) > high:
        cls = Regime.SUPER_LOGARITHMIC
    else:
        cls = Regime.ORDER1
    return RegimeReport(value, cls, (float(low), float(high)))
