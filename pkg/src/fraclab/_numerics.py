"""Cancellation-free kernels shared by the closed-form integrals."""

from __future__ import annotations

import numpy as np

# |2s - 1| below this selects the logarithmic antiderivatives.
HALF_BAND = 1e-9


def expm1_over(x):
    """Return ``expm1(x) / x`` with the removable singularity filled."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    out = np.where(x == 0.0, 1.0, np.expm1(safe) / safe)
    return out if out.ndim else float(out)


def rise(x, ell, g):
    """Return ``((x + ell)**g - x**g) / g`` for ``x >= 0``, ``ell > 0``.

    At ``g == 0`` this is ``log1p(ell / x)``. ``x == 0`` is allowed for
    ``g > 0`` and yields ``ell**g / g``; for ``g <= 0`` it is ``inf``.
    """
    x = float(x)
    ell = float(ell)
    if x == 0.0:
        return ell**g / g if g > 0.0 else np.inf
    if np.isinf(ell):
        return np.inf if g >= 0.0 else -(x**g) / g
    lg = np.log1p(ell / x)
    if g == 0.0:
        return lg
    return x**g * lg * expm1_over(g * lg)


def effective_exponent(s: float) -> float:
    """Return ``1 - 2s``, snapped to zero inside the critical band."""
    g = 1.0 - 2.0 * s
    return 0.0 if abs(g) < HALF_BAND else g
