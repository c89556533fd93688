"""Piecewise-linear grid functions, step functions and recovery profiles."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DomainError, GeometryError, ResolutionError

MAX_RECOVERY_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Continuous piecewise-linear interpolant of nodal values on ``[a, b]``.

    ``values`` holds the ``N + 1`` nodal values of the uniform grid with
    ``N`` cells.
    """

    a: float
    b: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.b > self.a:
            raise DomainError(f"need b > a, got a={self.a}, b={self.b}")
        if vals.ndim != 1 or vals.size < 3:
            raise DomainError("need at least 2 cells (3 nodal values)")
        if not np.all(np.isfinite(vals)):
            raise DomainError("nodal values must be finite")

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def grid(self) -> tuple[float, float, int]:
        return (self.a, self.b, self.N)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.N + 1)

    def __call__(self, t):
        return np.interp(t, self.x, self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.a, self.b, values)

    @classmethod
    def from_callable(cls, f, a: float, b: float, N: int) -> "GridFunction":
        x = np.linspace(a, b, N + 1)
        return cls(a, b, np.asarray(f(x), dtype=float))

    def to_csv(self, path) -> None:
        """Write ``(x, u)`` columns to ``path`` and the grid to ``path.json``."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "u"])
            for xi, ui in zip(self.x, self.values):
                writer.writerow([repr(float(xi)), repr(float(ui))])
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps({"a": self.a, "b": self.b, "N": self.N}))

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        values = np.array([float(r["u"]) for r in rows])
        if values.size != int(meta["N"]) + 1:
            raise DomainError(f"{path}: expected {int(meta['N']) + 1} rows, found {values.size}")
        return cls(meta["a"], meta["b"], values)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """A ``{-1, 1}``-valued function on ``(a, b)`` with finitely many jumps."""

    jumps: np.ndarray = field(default_factory=lambda: np.empty(0))
    left_value: int = -1
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        jumps = np.array(self.jumps, dtype=float).reshape(-1)
        jumps.setflags(write=False)
        object.__setattr__(self, "jumps", jumps)
        if self.left_value not in (-1, 1):
            raise DomainError("left_value must be -1 or 1")
        if jumps.size and (np.any(np.diff(jumps) <= 0) or jumps[0] <= self.a or jumps[-1] >= self.b):
            raise GeometryError("jumps must be strictly increasing and interior")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        count = np.searchsorted(self.jumps, t, side="right")
        return np.where(count % 2 == 0, self.left_value, -self.left_value)

    def right_value(self, i: int) -> int:
        """Value just to the right of jump ``i``."""
        return -self.left_value if i % 2 == 0 else self.left_value


def jump_count(u0: StepFunction) -> int:
    return int(u0.jumps.size)


def truncate(u: GridFunction, k: float) -> GridFunction:
    """Clamp nodal values to ``[-k, k]``."""
    if not k > 0:
        raise DomainError(f"truncation height must be positive, got {k}")
    return u.with_values(np.clip(u.values, -k, k))


def _as_fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**9)


def commensurate_cells(u0: StepFunction, eps: float, min_cells_per_layer: int = 8) -> int:
    """Smallest cell count putting every ``t_i`` and ``t_i +- eps`` on nodes."""
    length = u0.b - u0.a
    ratios = [_as_fraction((t - u0.a) / length) for t in u0.jumps]
    ratios.append(_as_fraction(eps / length))
    base = 1
    for r in ratios:
        base = math.lcm(base, r.denominator)
    # 2 eps N / length >= min cells per layer
    need = min_cells_per_layer * length / (2.0 * eps)
    k = max(1, math.ceil(need / base - 1e-9), math.ceil(2 / base))
    n = base * k
    if n > MAX_RECOVERY_CELLS:
        raise ResolutionError(f"commensurate grid needs {n} cells (cap {MAX_RECOVERY_CELLS})")
    return n


def recovery_sequence(u0: StepFunction, eps: float, N: int | None = None,
                      min_cells_per_layer: int = 8) -> GridFunction:
    """Piecewise-affine recovery profile with ramps of half-width ``eps``.

    Inside ``(t_i - eps, t_i + eps)`` the profile is the clamped ramp
    ``T1((x - t_i) / eps) * u0(t_i+)``, elsewhere it equals ``u0``. The grid
    is commensurate with the layers so the profile is represented exactly.
    When ``N`` is omitted the smallest admissible cell count is used.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if u0.jumps.size:
        inner = np.diff(u0.jumps)
        ends = (u0.jumps[0] - u0.a, u0.b - u0.jumps[-1])
        if (inner.size and not 2.0 * eps < inner.min()) or not eps < min(ends):
            raise GeometryError(f"eps={eps} makes transition layers overlap or leave the domain")
    if N is None:
        N = commensurate_cells(u0, eps, min_cells_per_layer)
    length = u0.b - u0.a
    m_float = eps * N / length
    m = round(m_float)
    if abs(m_float - m) > 1e-6:
        raise GeometryError(f"N={N} does not put t_i +- eps on grid nodes")
    if u0.jumps.size and 2 * m < min_cells_per_layer:
        raise ResolutionError(f"only {2 * m} cells per layer, need {min_cells_per_layer}")
    centers = []
    for t in u0.jumps:
        c_float = (t - u0.a) * N / length
        c = round(c_float)
        if abs(c_float - c) > 1e-6:
            raise GeometryError(f"N={N} does not put jump {t} on a grid node")
        centers.append(c)
    j = np.arange(N + 1)
    x = u0.a + j * (length / N)
    values = u0(x).astype(float)
    for i, c in enumerate(centers):
        inside = np.abs(j - c) <= m
        values[inside] = np.clip((j[inside] - c) / m, -1.0, 1.0) * u0.right_value(i)
    return GridFunction(u0.a, u0.b, values)


def superlevel_measure(u: GridFunction, interval, level: float, above: bool = True) -> float:
    """Exact measure of ``{u >= level}`` (or ``{u <= level}``) inside ``interval``."""
    lo, hi = _check_interval(u, interval)
    x = u.x
    # cells meeting [lo, hi], clipped to it
    left = np.maximum(x[:-1], lo)
    right = np.minimum(x[1:], hi)
    keep = right > left
    if not np.any(keep):
        return 0.0
    left, right = left[keep], right[keep]
    f0, f1 = u(left), u(right)
    if not above:
        f0, f1, level = -f0, -f1, -level
    fmax = np.maximum(f0, f1)
    fmin = np.minimum(f0, f1)
    span = fmax - fmin
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(span > 0, (fmax - level) / span, (fmin >= level).astype(float))
    frac = np.clip(frac, 0.0, 1.0)
    return float(np.sum(frac * (right - left)))


def _check_interval(u: GridFunction, interval) -> tuple[float, float]:
    lo, hi = map(float, interval)
    tol = 1e-12 * (u.b - u.a)
    if not hi > lo or lo < u.a - tol or hi > u.b + tol:
        raise DomainError(f"interval {interval} is not a nonempty subset of [{u.a}, {u.b}]")
    return max(lo, u.a), min(hi, u.b)


def measure_condition(u: GridFunction, interval, eta: float, theta: float) -> bool:
    """Both phases occupy at least ``theta |I|`` of ``I`` with margin ``eta``."""
    if not 0 < eta < 0.25:
        raise DomainError("eta must lie in (0, 1/4)")
    if not 0 < theta < 0.5:
        raise DomainError("theta must lie in (0, 1/2)")
    lo, hi = _check_interval(u, interval)
    need = theta * (hi - lo)
    plus = superlevel_measure(u, (lo, hi), 1.0 - eta, above=True)
    minus = superlevel_measure(u, (lo, hi), eta - 1.0, above=False)
    return bool(plus >= need and minus >= need)
