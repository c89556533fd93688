"""Optimal-profile problems on ``(-T, T)`` and their extrapolation in ``T``.

The truncated problem minimizes

    E_T(v) = int_{-T}^{T} W(v) + iint_{(-T,T)^2} |v(x)-v(y)|^2 |x-y|^{-1-2s}

over piecewise-linear ``v`` pinned to the wells at ``-T`` and ``T``. For
``s > 1/2`` its value increases to the surface tension ``m_s``; at ``s = 1/2``
it grows like ``log(2T)`` and ``E_T / log(2T)`` tends to ``m_{1/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import LinearOperator, cg

from ._numerics import HALF_BAND, expm1_over
from .energy import potential_gradient, potential_hessp, potential_integral
from .errors import DomainError, OptimizationFailure
from .gagliardo import DEFAULT_ORDER, assemble_form, kernel_mass, ramp_seminorm_sq
from .gridfn import GridFunction
from .potentials import DoubleWell, c_eta

MAX_CELL_WIDTH = 0.02


def cells_for(T: float, max_width: float = MAX_CELL_WIDTH) -> int:
    """Cell count on ``(-T, T)`` giving width at most ``max_width``."""
    return int(math.ceil(2.0 * T / max_width - 1e-9))


def _is_half(s: float) -> bool:
    return abs(2.0 * s - 1.0) < HALF_BAND


@dataclass(frozen=True)
class ProfileProblem:
    s: float
    T: float
    N: int | None = None
    potential: DoubleWell = field(default_factory=DoubleWell)

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not self.T > 0:
            raise DomainError("T must be positive")
        object.__setattr__(self, "N", cells_for(self.T) if self.N is None else int(self.N))
        if self.N < 4:
            raise DomainError("need at least 4 cells")

    @property
    def grid(self) -> tuple[float, float, int]:
        return (-float(self.T), float(self.T), self.N)

    @property
    def normalization(self) -> float:
        """Divisor applied to the energy: ``log(2T)`` at ``s = 1/2``, else 1."""
        return math.log(2.0 * self.T) if _is_half(self.s) else 1.0

    def ramp_init(self) -> GridFunction:
        """Clamped-linear ramp joining the wells over ``(-1, 1)``."""
        w = self.potential
        a, b, N = self.grid
        x = np.linspace(a, b, N + 1)
        return GridFunction(a, b, w.from_zeta(np.clip(x, -1.0, 1.0)))


@dataclass(frozen=True)
class ProfileOptions:
    gtol: float = 1e-8
    maxiter: int = 5000
    maxcor: int = 20
    restarts: int = 3
    order: int = DEFAULT_ORDER
    raise_on_failure: bool = False


@dataclass(frozen=True)
class ProfileResult:
    value: float
    energy: float
    minimizer: GridFunction
    iterations: int
    gradientNorm: float
    converged: bool
    max_iter_reached: bool
    initial_energy: float
    message: str = ""
    extrapolated: float | None = None


def profile_objective(prob: ProfileProblem, order: int = DEFAULT_ORDER):
    """Return ``f(v_interior) -> (E, grad)`` for the discrete truncated energy."""
    form = assemble_form(prob.grid, prob.s, order)
    w = prob.potential
    a, b, N = prob.grid
    full = np.empty(N + 1)
    full[0], full[-1] = w.alpha, w.beta

    def f(y):
        full[1:-1] = y
        u = GridFunction(a, b, full.copy())
        Qv = form.apply(u.values)
        E = potential_integral(u, w) + float(u.values @ Qv)
        g = potential_gradient(u, w) + 2.0 * Qv
        return E, g[1:-1]

    return f


def profile_hessp(prob: ProfileProblem, order: int = DEFAULT_ORDER):
    """Return ``H(v_interior, p) -> Hessian-vector product`` of the discrete truncated energy."""
    form = assemble_form(prob.grid, prob.s, order)
    w = prob.potential
    a, b, N = prob.grid
    full = np.empty(N + 1)
    full[0], full[-1] = w.alpha, w.beta

    def hessp(y, p):
        full[1:-1] = y
        u = GridFunction(a, b, full.copy())
        q = np.zeros(N + 1)
        q[1:-1] = p
        return (potential_hessp(u, w, q) + 2.0 * form.apply(q))[1:-1]

    return hessp


def _newton_polish(f, hessp, x, tol, max_steps: int = 20):
    """Inexact Newton iterations accepted on decrease of the largest gradient entry.

    Near a minimizer energy differences drop below rounding before the
    gradient does, so steps are judged on the gradient alone.
    """
    E, g = f(x)
    gmax = float(np.max(np.abs(g)))
    for k in range(max_steps):
        if gmax <= tol:
            return x, k, "newton polish converged"
        H = LinearOperator((x.size, x.size), matvec=lambda p: hessp(x, p), dtype=float)
        d, _ = cg(H, -g, rtol=1e-6, maxiter=500)
        for step in (1.0, 0.5, 0.25):
            xn = x + step * d
            En, gn = f(xn)
            gn_max = float(np.max(np.abs(gn)))
            if gn_max < gmax and En <= E + 1e-12 * (1.0 + abs(E)):
                x, E, g, gmax = xn, En, gn, gn_max
                break
        else:
            return x, k, "newton polish stalled"
    return x, max_steps, "" if gmax <= tol else "newton polish stalled"


def minimize_profile(prob: ProfileProblem, init: GridFunction | None = None,
                     opts: ProfileOptions = ProfileOptions()) -> ProfileResult:
    """Limited-memory quasi-Newton minimization of the truncated energy.

    The interior nodal values are free; the end nodes stay on the wells.
    Convergence means the largest interior gradient entry is below
    ``gtol (1 + |E_0|)`` with ``E_0`` the energy of ``init``.
    """
    w = prob.potential
    init = prob.ramp_init() if init is None else init
    if init.N != prob.N or not np.allclose([init.a, init.b], prob.grid[:2]):
        raise DomainError("initial profile lives on a different grid")
    if not np.allclose(init.values[[0, -1]], [w.alpha, w.beta], rtol=0, atol=1e-12):
        raise DomainError("initial profile must be pinned to the wells at the ends")
    f = profile_objective(prob, opts.order)
    E0, g0 = f(init.values[1:-1])
    tol = opts.gtol * (1.0 + abs(E0))
    x, nit, res = init.values[1:-1], 0, None
    # a stalled line search usually sits at the rounding floor; a fresh
    # quasi-Newton memory often gets the last digits
    for _ in range(1 + opts.restarts):
        res = minimize(f, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.maxiter - nit, "maxcor": opts.maxcor, "gtol": tol,
                                "ftol": 0.0, "maxfun": 4 * opts.maxiter, "maxls": 40})
        x, nit = res.x, nit + res.nit
        if res.success or nit >= opts.maxiter:
            break
    E, g = f(x)
    if g.size and np.max(np.abs(g)) > tol and nit < opts.maxiter:
        # slow long-wavelength modes: finish with Newton steps on the gradient
        x, steps, note = _newton_polish(f, profile_hessp(prob, opts.order), x, tol)
        nit += steps
        E, g = f(x)
        if note:
            res.message = f"{res.message}; {note}"
    if E > E0:
        E, g, x = E0, g0, init.values[1:-1]
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    converged = gnorm <= tol
    values = np.concatenate([[w.alpha], x, [w.beta]])
    out = ProfileResult(E / prob.normalization, E, GridFunction(prob.grid[0], prob.grid[1], values),
                        nit, gnorm, bool(converged), nit >= opts.maxiter, E0,
                        str(res.message))
    if not converged and not out.max_iter_reached and opts.raise_on_failure:
        raise OptimizationFailure(f"line search stalled at |g| = {gnorm:.3e}: {res.message}", out)
    return out


# ---------------------------------------------------------------------------
# extrapolation in T


@dataclass(frozen=True)
class Extrapolation:
    m: float
    coef: tuple[float, ...]
    model: str
    Ts: tuple[float, ...]
    values: tuple[float, ...]
    residual: float
    reliable: bool
    results: tuple[ProfileResult, ...] = field(repr=False, default=())

    @property
    def c(self) -> float:
        return self.coef[1]

    def __float__(self) -> float:
        return self.m


def s_log(T, s: float):
    """``(T^{1-2s} - 1) / (1 - 2s)``, equal to ``log T`` at ``s = 1/2``."""
    lt = np.log(np.asarray(T, dtype=float))
    return lt * expm1_over((1.0 - 2.0 * s) * lt)


def tail_basis(s: float, model: str):
    """Columns (after the constant) of the fitted model of the truncated value.

    For ``s > 1/2`` the value is ``m + c T^{1-2s}`` (``"power"``), optionally
    plus ``d T^{-2s} s_log(T)`` (``"power+remainder"``). At ``s = 1/2`` the
    scaled value is ``m + c / log(2T)`` (``"log"``), optionally plus
    ``d log(T) / (T log(2T))`` (``"log+remainder"``); the remainder terms are
    the same correction written in both normalizations.
    """
    if _is_half(s):
        cols = {"log": lambda T: [1.0 / np.log(2 * T)],
                "log+remainder": lambda T: [1.0 / np.log(2 * T), np.log(T) / (T * np.log(2 * T))]}
    else:
        cols = {"power": lambda T: [T ** (1.0 - 2.0 * s)],
                "power+remainder": lambda T: [T ** (1.0 - 2.0 * s), T ** (-2.0 * s) * s_log(T, s)]}
    if model not in cols:
        raise DomainError(f"unknown extrapolation model {model!r} for s={s}; choose from {sorted(cols)}")
    return cols[model]


def fit_tail(s: float, Ts, values, model: str, residual_tol: float = 1e-3):
    """Least-squares fit of ``values(Ts)``; returns ``(coef, relative residual, reliable)``."""
    T = np.asarray(Ts, dtype=float)
    X = np.column_stack([np.ones(T.size)] + tail_basis(s, model)(T))
    if T.size < X.shape[1] + 1:
        raise DomainError(f"model {model!r} needs at least {X.shape[1] + 1} values of T")
    y = np.asarray(values, dtype=float)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rel = float(np.max(np.abs(y - X @ coef)) / max(abs(coef[0]), 1e-300))
    return tuple(float(c) for c in coef), rel, rel <= residual_tol


def _sweep(s, Ts, N_per_T, potential, opts):
    Ts = tuple(float(T) for T in Ts)
    if len(Ts) < 3 or any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise DomainError("Ts must be increasing with at least 3 entries")
    results = []
    for T in Ts:
        N = None if N_per_T is None else int(round(N_per_T * T))
        results.append(minimize_profile(ProfileProblem(s, T, N, potential), None, opts))
    return Ts, results


def m_s_extrapolate(s: float, Ts, N_per_T: float | None = None, opts: ProfileOptions = ProfileOptions(),
                    potential: DoubleWell | None = None, model: str = "power+remainder",
                    residual_tol: float = 1e-3) -> Extrapolation:
    """Minimize over each ``T`` in ``Ts``, fit :func:`tail_basis` and return the intercept ``m``.

    ``N_per_T`` cells per unit of ``T`` (default: width ``MAX_CELL_WIDTH``).
    The fit is flagged unreliable when its largest relative residual exceeds
    ``residual_tol``.
    """
    if not s > 0.5 or _is_half(s):
        raise DomainError("m_s extrapolation needs s > 1/2")
    potential = DoubleWell() if potential is None else potential
    tail_basis(s, model)
    Ts, results = _sweep(s, Ts, N_per_T, potential, opts)
    values = tuple(r.value for r in results)
    coef, rel, ok = fit_tail(s, Ts, values, model, residual_tol)
    return Extrapolation(coef[0], coef, model, Ts, values, rel, ok, tuple(results))


def m_half_truncated(T: float, N: int | None = None, opts: ProfileOptions = ProfileOptions(),
                     potential: DoubleWell | None = None) -> ProfileResult:
    """Minimized ``s = 1/2`` truncated energy divided by ``log(2T)``."""
    if T < 2:
        raise DomainError("T must be at least 2")
    potential = DoubleWell() if potential is None else potential
    return minimize_profile(ProfileProblem(0.5, T, N, potential), None, opts)


def m_half_extrapolate(Ts, N_per_T: float | None = None, opts: ProfileOptions = ProfileOptions(),
                       potential: DoubleWell | None = None, model: str = "log+remainder",
                       residual_tol: float = 1e-2) -> Extrapolation:
    """Extrapolate :func:`m_half_truncated` over ``Ts`` to ``T = inf``."""
    potential = DoubleWell() if potential is None else potential
    if min(Ts) < 2:
        raise DomainError("T must be at least 2")
    tail_basis(0.5, model)
    Ts, results = _sweep(0.5, Ts, N_per_T, potential, opts)
    values = tuple(r.value for r in results)
    coef, rel, ok = fit_tail(0.5, Ts, values, model, residual_tol)
    return Extrapolation(coef[0], coef, model, Ts, values, rel, ok, tuple(results))


# ---------------------------------------------------------------------------
# analytic bounds


def ramp_energy(s: float, T: float | None = None, potential: DoubleWell | None = None) -> float:
    """Energy of the clamped ramp on ``(-T, T)`` (the whole line if ``T`` is None).

    The seminorm part is exact; for non-quartic wells the potential integral
    is by adaptive quadrature.
    """
    potential = DoubleWell() if potential is None else potential
    if T is None:
        if not s > 0.5 or _is_half(s):
            raise DomainError("the full-line ramp energy diverges for s <= 1/2")
        lo, hi = -np.inf, np.inf
    else:
        if T < 1:
            raise DomainError("the ramp needs T >= 1")
        lo, hi = -float(T), float(T)
    jump = 0.5 * potential.gap
    return potential.ramp_integral() + jump**2 * ramp_seminorm_sq(lo, hi, 0.0, 1.0, s)


def tail_term(s: float) -> float:
    """``8 iint_{(1,inf)^2} (x + y)^{-1-2s} = 8 * 2^{1-2s} / (2s (2s - 1))``."""
    if not s > 0.5:
        raise DomainError("tail term diverges for s <= 1/2")
    return 8.0 * kernel_mass((-np.inf, -1.0), (1.0, np.inf), s)


def analytic_upper_bound(s: float) -> float:
    """Full-line energy of the clamped ramp for the standard quartic, in closed form."""
    return ramp_energy(s)


def analytic_lower_bound(s: float, eta: float, w: DoubleWell | None = None) -> float:
    """``min_delta C_eta delta + 8(1-eta)^2 delta^{1-2s} / (2s(2s-1))``, in closed form."""
    w = DoubleWell() if w is None else w
    if not s > 0.5 or _is_half(s) or not s < 1:
        raise DomainError("the lower bound needs 1/2 < s < 1")
    if not 0.0 < eta < 0.25:
        raise DomainError("eta must lie in (0, 1/4)")
    C = c_eta(w, eta)
    A = 8.0 * (1.0 - eta) ** 2
    base = A / (2.0 * s * C)
    delta = base ** (1.0 / (2.0 * s))
    return C * delta + base ** ((1.0 - 2.0 * s) / (2.0 * s)) * A / (2.0 * s * (2.0 * s - 1.0))


def optimal_delta(s: float, eta: float, w: DoubleWell | None = None) -> float:
    w = DoubleWell() if w is None else w
    return (8.0 * (1.0 - eta) ** 2 / (2.0 * s * c_eta(w, eta))) ** (1.0 / (2.0 * s))


# ---------------------------------------------------------------------------
# the s -> 1/2 limit


def limit_intercept(ss, scaled, degree: int = 2) -> tuple[float, np.ndarray]:
    """Value at ``s = 1/2`` of a least-squares polynomial in ``s - 1/2`` through ``(s, (2s-1) m_s)``.

    The curves are visibly curved over ``s - 1/2 <= 0.15``: the same fit
    applied to the ramp energy, whose limit is exactly 8, returns 7.64 at
    degree 1 and 8.03 at degree 2 on ``s = 0.55, 0.575, 0.6, 0.65``.
    Returns the intercept and the coefficients, lowest order first.
    """
    x = np.asarray(ss, dtype=float) - 0.5
    y = np.asarray(scaled, dtype=float)
    if x.size <= degree:
        raise DomainError(f"degree-{degree} fit needs more than {degree} points")
    coef = np.polynomial.polynomial.polyfit(x, y, degree)
    return float(coef[0]), coef
