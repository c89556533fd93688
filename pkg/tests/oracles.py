"""Independent reference computations used by the tests.

Nothing here calls the closed forms or the assembled forms under test.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy.integrate import dblquad, quad


def kernel_mass_brute(I1, I2, s, epsrel=1e-12):
    """Adaptive 2-D quadrature of ``|x-y|^{-1-2s}`` over ``I1 x I2``."""
    (a, b), (c, d) = sorted([tuple(I1), tuple(I2)])
    f = lambda y, x: (y - x) ** (-1.0 - 2.0 * s)
    val, _ = dblquad(f, a, b, lambda x: c, lambda x: d, epsabs=0.0, epsrel=epsrel)
    return val


def kernel_mass_mp(I1, I2, s, dps=30):
    """Double antiderivative ``H(r) = r^{1-2s} / (2s(1-2s))`` (``log r`` at ``s = 1/2``) in high precision."""
    with mp.workdps(dps):
        (a, b), (c, d) = sorted([tuple(map(mp.mpf, I1)), tuple(map(mp.mpf, I2))])
        s = mp.mpf(s)
        if s == mp.mpf(1) / 2:
            H = lambda r: mp.log(r)
        else:
            H = lambda r: r ** (1 - 2 * s) / (2 * s * (1 - 2 * s)) if r > 0 else mp.mpf(0)
        return float(H(c - a) - H(c - b) - H(d - a) + H(d - b))


def brute_seminorm_sq(x, v, s, lo=None, hi=None):
    """``[u]_s^2`` over ``(lo, hi)^2`` of the piecewise-linear interpolant by nested quadrature.

    The inner integral over ``r = y - x > 0`` uses the algebraic weight
    ``r^{1-2s}`` on the first kink-free segment and ``((u(x) - u(x+r))/r)^2``
    there, which is smooth. Accurate to about 1e-10 for ``s <= 0.7``.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    lo = x[0] if lo is None else lo
    hi = x[-1] if hi is None else hi
    u = lambda t: float(np.interp(t, x, v))
    slopes = np.diff(v) / np.diff(x)

    def slope_at(t):
        i = min(max(np.searchsorted(x, t, side="right") - 1, 0), len(slopes) - 1)
        return slopes[i]

    def inner(t):
        kinks = sorted({k - t for k in x if t < k < hi} | {hi - t})
        kinks = [k for k in kinks if k > 0]
        ut = u(t)
        q = lambda r: ((ut - u(t + r)) / r) ** 2 if r > 0 else slope_at(t) ** 2
        total, a = 0.0, 0.0
        for i, b in enumerate(kinks):
            if i == 0:
                total += quad(q, a, b, weight="alg", wvar=(1 - 2 * s, 0), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
            else:
                total += quad(lambda r: q(r) * r ** (1 - 2 * s), a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
            a = b
        return total

    nodes = [lo] + [k for k in x if lo < k < hi] + [hi]
    out = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        out += quad(inner, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return 2 * out


def hat_seminorm_sq_mp(s, dps=25):
    """``[u]_s^2`` on ``(0, 2)`` of the hat with peak 1 at ``x = 1``, in high precision."""
    with mp.workdps(dps):
        s = mp.mpf(s)
        g = 1 + 2 * s
        same = 2 * 2 / ((2 - 2 * s) * (3 - 2 * s))
        # cross pair in corner coordinates a = 1 - x, b = y - 1: (b - a)^2 (a + b)^{-g}
        low = 1 / (3 * (3 - 2 * s))
        up = mp.quad(lambda a: mp.quad(lambda b: (b - a) ** 2 / (a + b) ** g, [1 - a, 1]), [0, 1])
        return float(same + 2 * (low + up))


def ramp_energy_quad(s, T, lo=-1.0, hi=1.0):
    """Truncated energy on ``(-T, T)`` of the ramp ``clip(x, -1, 1)`` by nested quadrature."""
    x = np.array([-T, lo, hi, T], float)
    v = np.array([-1.0, -1.0, 1.0, 1.0])
    return brute_seminorm_sq(x, v, s) + 16.0 / 15.0


def lambda_mp(s, eps, dps=40):
    """Scaling factor straight from its defining quotients, in high precision."""
    with mp.workdps(dps):
        s, eps = mp.mpf(s), mp.mpf(eps)
        if s > 0.5:
            return float((1 - 2 * s) / (eps ** (2 * s - 1) - 1))
        if s < 0.5:
            return float((2 * s - 1) / (eps ** ((1 - 2 * s) / (2 * s)) - 1))
        return float(1 / abs(mp.log(eps)))


def delta_scan(s, eta, C, lo=-10.0, hi=20.0, n=20001):
    """Brute-force minimum over ``log delta`` on a grid, refined by golden section."""
    A = 8.0 * (1.0 - eta) ** 2
    f = lambda t: C * math.exp(t) + A * math.exp((1.0 - 2.0 * s) * t) / (2.0 * s * (2.0 * s - 1.0))
    ts = np.linspace(lo, hi, n)
    vals = np.array([f(t) for t in ts])
    i = int(np.argmin(vals))
    a, b = ts[max(i - 1, 0)], ts[min(i + 1, n - 1)]
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        c1, c2 = b - phi * (b - a), a + phi * (b - a)
        if f(c1) < f(c2):
            b = c2
        else:
            a = c1
    return f(0.5 * (a + b))
