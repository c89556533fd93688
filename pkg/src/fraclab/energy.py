"""Scaled double-well functionals and the interval lower bound.

For ``u`` on ``(a, b)`` the functional is

    lambda/eps * int W(u) + lambda eps^{(2s-1)^+} [u]_s^2,

with the coefficients of :func:`fraclab.scaling.scaled_coefficients`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._numerics import expm1_over
from .errors import DomainError, UnsupportedOperation
from .gagliardo import DEFAULT_ORDER, assemble_form, cell_mask, gauss01
from .gridfn import GridFunction, _check_interval, measure_condition
from .potentials import DoubleWell, c_eta
from .scaling import FracParams, lambda_minus, lambda_plus, scaled_coefficients

POTENTIAL_ORDER = 8


@dataclass(frozen=True)
class EnergyBreakdown:
    potentialTerm: float
    seminormTerm: float
    potentialCoeff: float
    seminormCoeff: float
    total: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def potential_integral(u: GridFunction, w: DoubleWell, cells=None, order: int = POTENTIAL_ORDER) -> float:
    """``int W(u)`` by Gauss-Legendre per cell (exact for the quartic)."""
    t, wt = gauss01(order)
    v = u.values
    z = v[:-1, None] * (1.0 - t) + v[1:, None] * t
    per_cell = w(z) @ wt
    if cells is not None:
        per_cell = per_cell[np.asarray(cells, dtype=bool)]
    return float(u.h * per_cell.sum())


def potential_gradient(u: GridFunction, w: DoubleWell, order: int = POTENTIAL_ORDER) -> np.ndarray:
    """Gradient of :func:`potential_integral` with respect to the nodal values."""
    t, wt = gauss01(order)
    v = u.values
    z = v[:-1, None] * (1.0 - t) + v[1:, None] * t
    dW = w.derivative(z) * wt
    g = np.zeros_like(v)
    g[:-1] += u.h * (dW @ (1.0 - t))
    g[1:] += u.h * (dW @ t)
    return g


def potential_hessp(u: GridFunction, w: DoubleWell, p, order: int = POTENTIAL_ORDER) -> np.ndarray:
    """Hessian of :func:`potential_integral` at ``u`` applied to the nodal vector ``p``."""
    t, wt = gauss01(order)
    v = u.values
    z = v[:-1, None] * (1.0 - t) + v[1:, None] * t
    pz = p[:-1, None] * (1.0 - t) + p[1:, None] * t
    c = w.second_derivative(z) * pz * wt
    out = np.zeros_like(v)
    out[:-1] += u.h * (c @ (1.0 - t))
    out[1:] += u.h * (c @ t)
    return out


def _breakdown(pot: float, semi: float, p: FracParams) -> EnergyBreakdown:
    cp, cs = scaled_coefficients(p)
    return EnergyBreakdown(pot, semi, cp, cs, cp * pot + cs * semi)


def functional(u: GridFunction, p: FracParams, w: DoubleWell,
               order: int = DEFAULT_ORDER) -> EnergyBreakdown:
    """Scaled functional of ``u`` over its whole interval."""
    form = assemble_form(u.grid, p.s, order)
    return _breakdown(potential_integral(u, w), form.evaluate(u), p)


def functional_local(u: GridFunction, E, p: FracParams, w: DoubleWell,
                     order: int = DEFAULT_ORDER) -> EnergyBreakdown:
    """Functional restricted to the cell-aligned union of intervals ``E``."""
    mask = cell_mask(u.grid, E)
    form = assemble_form(u.grid, p.s, order)
    return _breakdown(potential_integral(u, w, mask), form.evaluate(u, mask), p)


# ---------------------------------------------------------------------------
# interval lower bound


class Branch(str, Enum):
    SUPER_HALF = "SuperHalf"
    SUB_HALF = "SubHalf"


@dataclass(frozen=True)
class KeyLemmaBound:
    eta: float
    theta: float
    Z: float
    branch: Branch
    bound: float
    interval: tuple[float, float]
    s: float


def _one_minus_pow_ratio(x: float, s: float) -> float:
    """``(x^{1-2s} - 1) / (2s - 1)`` without cancellation near ``s = 1/2``."""
    lx = math.log(x)
    return -lx * float(expm1_over((1.0 - 2.0 * s) * lx))


def key_lemma_bound(I, p: FracParams, eta: float, theta: float, w: DoubleWell,
                    alt_interval_exponent: bool = False) -> KeyLemmaBound:
    """Lower bound for the functional restricted to ``I`` under the measure condition.

    With ``C = C_eta`` and ``K = 8 (1-eta)^2 |I|^{1-2s} / (2s)`` the bound is the
    minimum over ``sigma`` of ``lambda [C |I| sigma / eps + c_s K (phi(sigma) - 2(1-theta)/theta)]``
    where ``phi(x) = (x^{1-2s}-1)/(2s-1)`` and ``c_s = eps^{(2s-1)^+}``. The
    minimizer is ``sigma = Z eps`` above ``1/2`` and ``Z eps^{1/(2s)}`` below.

    ``alt_interval_exponent=True`` uses ``|I|^{2s-1}`` in place of
    ``|I|^{1-2s}`` in ``K``; the two agree when ``|I| = 1``.
    """
    if p.is_half:
        raise UnsupportedOperation("the interval bound excludes s = 1/2")
    if not 0.0 < eta < 0.25:
        raise DomainError(f"eta must lie in (0, 1/4), got {eta}")
    if not 0.0 < theta < 0.5:
        raise DomainError(f"theta must lie in (0, 1/2), got {theta}")
    lo, hi = map(float, I)
    length = hi - lo
    if not length > 0:
        raise DomainError("interval must be nonempty")
    s, eps = p.s, p.eps
    C = c_eta(w, eta)
    jump = 8.0 * (1.0 - eta) ** 2
    Z = (jump * length ** (-2.0 * s) / (2.0 * s * C)) ** (1.0 / (2.0 * s))
    power = (2.0 * s - 1.0) if alt_interval_exponent else (1.0 - 2.0 * s)
    K = jump * length**power / (2.0 * s)
    penalty = 2.0 * (1.0 - theta) / theta
    if s > 0.5:
        sigma = Z * eps
        inner = C * length * Z + K * eps ** (2.0 * s - 1.0) * (_one_minus_pow_ratio(sigma, s) - penalty)
        bound = lambda_plus(p) * inner
        branch = Branch.SUPER_HALF
    else:
        sigma = Z * eps ** (1.0 / (2.0 * s))
        inner = C * length * eps ** (1.0 / (2.0 * s) - 1.0) * Z + K * (_one_minus_pow_ratio(sigma, s) - penalty)
        bound = lambda_minus(p) * inner
        branch = Branch.SUB_HALF
    return KeyLemmaBound(float(eta), float(theta), float(Z), branch, float(bound), (lo, hi), s)


@dataclass(frozen=True)
class KeyLemmaCheck:
    lhs: float
    rhs: float
    holds: bool
    admissible: bool = True

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def verify_key_lemma(u: GridFunction, I, p: FracParams, eta: float, theta: float, w: DoubleWell,
                     alt_interval_exponent: bool = False) -> KeyLemmaCheck:
    """Compare the restricted functional on ``I`` with :func:`key_lemma_bound`.

    A ``u`` failing the measure condition is reported with ``admissible=False``
    and ``holds=False``; that is a precondition failure, not a violation.
    """
    I = _check_interval(u, I)
    rhs = key_lemma_bound(I, p, eta, theta, w, alt_interval_exponent).bound
    if not measure_condition(u, I, eta, theta):
        return KeyLemmaCheck(float("nan"), rhs, False, admissible=False)
    lhs = functional_local(u, [I], p, w).total
    tol = 1e-8 * (1.0 + abs(rhs))
    return KeyLemmaCheck(lhs, rhs, bool(lhs >= rhs - tol))
