"""Double-well potentials with two wells ``alpha < beta``."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator, interp1d
from scipy.optimize import minimize_scalar

from .errors import DomainError, RangeError, UnsupportedOperation


class WellForm(str, Enum):
    QUARTIC = "quartic"
    USER_TABLE = "user_table"


@dataclass(frozen=True, eq=False)
class DoubleWell:
    """A continuous potential vanishing exactly at ``wells``.

    ``QUARTIC`` is ``(1 - zeta^2)^2`` in the affine variable
    ``zeta = (2z - alpha - beta) / (beta - alpha)`` that sends the wells to
    ``-1`` and ``1``. ``USER_TABLE`` interpolates sampled ``(z, W(z))`` pairs,
    monotone piecewise-cubic by default (``interpolation="pchip"``) or
    piecewise-linear (``"linear"``, no derivative).
    """

    wells: tuple[float, float] = (-1.0, 1.0)
    form: WellForm = WellForm.QUARTIC
    table: tuple[np.ndarray, np.ndarray] | None = None
    interpolation: str = "pchip"
    scale: float = 1.0

    def __post_init__(self):
        alpha, beta = map(float, self.wells)
        if not alpha < beta:
            raise DomainError(f"wells must satisfy alpha < beta, got {self.wells}")
        object.__setattr__(self, "wells", (alpha, beta))
        object.__setattr__(self, "form", WellForm(self.form))
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        if self.form is WellForm.USER_TABLE:
            if self.table is None:
                raise DomainError("USER_TABLE needs a (z, W) table")
            z, W = (np.asarray(c, dtype=float) for c in self.table)
            order = np.argsort(z)
            z, W = z[order], W[order]
            _check_table(z, W, alpha, beta)
            object.__setattr__(self, "table", (z, W))
            if self.interpolation == "pchip":
                interp = PchipInterpolator(z, W, extrapolate=False)
            elif self.interpolation == "linear":
                interp = interp1d(z, W, bounds_error=False, fill_value=np.nan)
            else:
                raise DomainError(f"unknown interpolation {self.interpolation!r}")
            object.__setattr__(self, "_interp", interp)

    @classmethod
    def quartic(cls, alpha: float = -1.0, beta: float = 1.0) -> "DoubleWell":
        return cls((alpha, beta))

    @classmethod
    def from_csv(cls, path, interpolation: str = "pchip") -> "DoubleWell":
        """Read a two-column ``z, W`` table with a one-line header."""
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        z, W = np.array(rows).T
        zeros = z[W == 0.0]
        if zeros.size != 2:
            raise DomainError(f"{path}: table must vanish at exactly two samples, found {zeros.size}")
        return cls(tuple(zeros), WellForm.USER_TABLE, (z, W), interpolation)

    @property
    def alpha(self) -> float:
        return self.wells[0]

    @property
    def beta(self) -> float:
        return self.wells[1]

    @property
    def gap(self) -> float:
        return self.beta - self.alpha

    def zeta(self, z):
        return (2.0 * np.asarray(z, dtype=float) - self.alpha - self.beta) / self.gap

    def from_zeta(self, zeta):
        return self.alpha + 0.5 * self.gap * (np.asarray(zeta, dtype=float) + 1.0)

    def __call__(self, z):
        if self.form is WellForm.QUARTIC:
            q = 1.0 - self.zeta(z) ** 2
            return self.scale * q * q
        z = np.asarray(z, dtype=float)
        lo, hi = self.table[0][0], self.table[0][-1]
        if np.any((z < lo) | (z > hi)):
            raise RangeError(f"W evaluated outside the sampled range [{lo}, {hi}]")
        out = self.scale * self._interp(z)
        return out if np.ndim(out) else float(out)

    def derivative(self, z):
        if self.form is WellForm.QUARTIC:
            zeta = self.zeta(z)
            return self.scale * (-4.0 * zeta * (1.0 - zeta**2)) * (2.0 / self.gap)
        if self.interpolation != "pchip":
            raise UnsupportedOperation("piecewise-linear table potential has no derivative")
        z = np.asarray(z, dtype=float)
        lo, hi = self.table[0][0], self.table[0][-1]
        if np.any((z < lo) | (z > hi)):
            raise RangeError(f"W' evaluated outside the sampled range [{lo}, {hi}]")
        out = self.scale * self._interp.derivative()(z)
        return out if np.ndim(out) else float(out)

    def second_derivative(self, z):
        if self.form is WellForm.QUARTIC:
            zeta = self.zeta(z)
            return self.scale * (12.0 * zeta**2 - 4.0) * (2.0 / self.gap) ** 2
        if self.interpolation != "pchip":
            raise UnsupportedOperation("piecewise-linear table potential has no second derivative")
        z = np.asarray(z, dtype=float)
        lo, hi = self.table[0][0], self.table[0][-1]
        if np.any((z < lo) | (z > hi)):
            raise RangeError(f"W'' evaluated outside the sampled range [{lo}, {hi}]")
        out = self.scale * self._interp.derivative(2)(z)
        return out if np.ndim(out) else float(out)

    def scaled(self, factor: float) -> "DoubleWell":
        return DoubleWell(self.wells, self.form, self.table, self.interpolation, self.scale * factor)

    def ramp_integral(self) -> float:
        """``int_{-1}^{1} W`` along the affine ramp from ``alpha`` to ``beta``."""
        if self.form is WellForm.QUARTIC:
            return self.scale * 16.0 / 15.0
        from scipy.integrate import quad

        return float(quad(lambda t: self(self.from_zeta(t)), -1.0, 1.0, epsabs=1e-13, limit=200)[0])


def _check_table(z, W, alpha, beta):
    if z.size < 4 or np.any(np.diff(z) <= 0):
        raise DomainError("table needs at least 4 distinct abscissae")
    if not np.all(np.isfinite(W)):
        raise DomainError("table values must be finite")
    for well in (alpha, beta):
        hit = np.isclose(z, well, rtol=0, atol=1e-12)
        if not np.any(hit) or np.any(W[hit] != 0.0):
            raise DomainError(f"table must contain W({well}) = 0")
    off = ~(np.isclose(z, alpha, rtol=0, atol=1e-12) | np.isclose(z, beta, rtol=0, atol=1e-12))
    if np.any(W[off] <= 0):
        raise DomainError("W must be positive away from the wells")
    if not (z[0] < alpha and z[-1] > beta):
        raise DomainError("table must extend beyond both wells")


def eval_W(w: DoubleWell, z):
    return w(z)


def eval_W_prime(w: DoubleWell, z):
    return w.derivative(z)


def c_eta(w: DoubleWell, eta: float) -> float:
    """Minimum of ``W`` over the wells' interval shrunk by the fraction ``eta``.

    For the standard wells this is ``min_{|z| <= 1 - eta} W(z)``.
    """
    eta = float(eta)
    if not 0.0 < eta <= 0.25:
        raise DomainError(f"eta must lie in (0, 1/4], got {eta}")
    if w.form is WellForm.QUARTIC:
        return w.scale * (2.0 * eta - eta * eta) ** 2
    lo, hi = w.from_zeta(-(1.0 - eta)), w.from_zeta(1.0 - eta)
    z = np.linspace(lo, hi, 100_001)
    vals = w(z)
    i = int(np.argmin(vals))
    best = float(vals[i])
    a, b = z[max(i - 1, 0)], z[min(i + 1, z.size - 1)]
    if b > a:
        res = minimize_scalar(w, bounds=(a, b), method="bounded", options={"xatol": 1e-14})
        best = min(best, float(res.fun))
    return best
