"""Gagliardo seminorms of piecewise-linear functions on uniform 1-D grids.

The squared seminorm ``[u]_s^2 = \\iint |u(x)-u(y)|^2 |x-y|^{-1-2s}`` of a
piecewise-linear ``u`` is a quadratic form in its nodal values. On a uniform
grid the contribution of a cell pair depends only on the cell offset ``d``, so
the form is stored as one 4x4 block per offset (scaled by ``h^{1-2s}``) and
applied with FFT convolutions in ``O(N log N)``.

Same-cell and adjacent-cell blocks are integrated after rewriting the
integrand as ``(difference quotient)^2 |x-y|^{1-2s}``: the part of the unit
square touching the singular corner is done exactly in Duffy coordinates, the
remaining triangle with Gauss-Legendre. Offsets ``d >= 2`` have a smooth
kernel on the cell pair and their moments are integrated with tensor
Gauss-Legendre rules fine enough to be exact to rounding.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from ._numerics import HALF_BAND, effective_exponent, rise
from .errors import AlignmentError, DomainError
from .gridfn import GridFunction

DEFAULT_ORDER = 8
MAX_DENSE = 4096
CACHE_MAGIC = b"FRACLAB-FORM\n"
CACHE_VERSION = 1

# (offset bound, tensor Gauss points) for the smooth far field
_FAR_RULES = ((8, 16), (64, 8), (None, 4))
_CHUNK = 1 << 14


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    return s


@lru_cache(maxsize=None)
def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# closed forms


def kernel_mass(I1, I2, s: float) -> float:
    """``\\iint_{I1 x I2} |x-y|^{-1-2s} dx dy`` for intervals meeting at most at an endpoint.

    Touching intervals give ``inf`` for ``s >= 1/2``.
    """
    s = _check_s(s)
    (a, b), (c, d) = sorted([tuple(map(float, I1)), tuple(map(float, I2))])
    if not (b > a and d > c):
        raise DomainError("intervals must be nonempty")
    gap = c - b
    if gap < -1e-14 * max(1.0, abs(b)):
        raise DomainError(f"intervals {I1} and {I2} overlap")
    gap = max(gap, 0.0)
    l1, l2 = b - a, d - c
    if np.isfinite(l1) and np.isfinite(l2) and gap > 50.0 * max(l1, l2):
        # far pair: the kernel is smooth and the closed form would cancel
        x, w = gauss01(8)
        dist = gap + l2 * x[None, :] + l1 * (1.0 - x[:, None])
        return float(l1 * l2 * np.einsum("i,j,ij->", w, w, dist ** (-1.0 - 2.0 * s)))
    g = effective_exponent(s)
    if gap == 0.0 and g <= 0.0:
        return float("inf")
    near = rise(gap, l1, g)
    far = rise(gap + l2, l1, g) if np.isfinite(l2) else 0.0
    return float((near - far) / (2.0 * s))


def linear_seminorm_sq(length: float, s: float) -> float:
    """Squared seminorm of ``x`` (slope one) on an interval of the given length."""
    s = _check_s(s)
    return 2.0 * length ** (3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))


def _quad_shift(c: float, L: float, s: float) -> float:
    """``\\int_0^L r^2 (r + c)^{-2s} dr`` for ``c >= 0``."""
    if c == 0.0:
        return L ** (3.0 - 2.0 * s) / (3.0 - 2.0 * s)
    if np.isinf(c):
        return 0.0
    z = L / c
    if z <= 0.25:
        # binomial series of (1 + r/c)^{-2s}
        total, coef, k = 0.0, 1.0, 0
        while True:
            term = coef * z**k / (3 + k)
            total += term
            if abs(term) < 1e-18 * abs(total) or k > 200:
                break
            coef *= (-2.0 * s - k) / (k + 1)
            k += 1
        return c ** (-2.0 * s) * L**3 * total
    hi = c + L
    g = effective_exponent(s)
    part3 = (hi ** (3.0 - 2.0 * s) - c ** (3.0 - 2.0 * s)) / (3.0 - 2.0 * s)
    part2 = (hi ** (2.0 - 2.0 * s) - c ** (2.0 - 2.0 * s)) / (2.0 - 2.0 * s)
    return part3 - 2.0 * c * part2 + c * c * rise(c, L, g)


def ramp_seminorm_sq(a: float, b: float, center: float, half_width: float, s: float) -> float:
    """Closed-form ``[u]_s^2`` on ``(a, b)`` of the clamped ramp ``T1((x - center)/half_width)``.

    The ramp must fit inside ``[a, b]``; ``a`` and ``b`` may be infinite.
    """
    s = _check_s(s)
    w = float(half_width)
    left = center - w - a
    right = b - center - w
    if w <= 0 or left < 0 or right < 0:
        raise DomainError("ramp must lie inside the interval")
    core = linear_seminorm_sq(2.0 * w, s) / w**2

    def side(ell):
        if ell == 0.0:
            return 0.0
        return ((2 * w) ** (3.0 - 2.0 * s) / (3.0 - 2.0 * s) - _quad_shift(ell, 2 * w, s)) / (2.0 * s * w * w)

    total = core + 2.0 * side(left) + 2.0 * side(right)
    if left > 0 and right > 0:
        total += 8.0 * kernel_mass((a, center - w), (center + w, b), s)
    return float(total)


# ---------------------------------------------------------------------------
# cell-pair blocks on the unit grid


@lru_cache(maxsize=8)
def _unit_blocks(N: int, s: float, order: int):
    """Per-offset blocks of the form on the unit-spacing grid with ``N`` cells.

    Returns ``(c0, P, R, S)``: the same-cell coefficient and, for offsets
    ``d = 1..N-1``, the 2x2 blocks of the 4x4 pair matrix in the variables
    ``(v_p, v_{p+1}, v_q, v_{q+1})`` with ``q = p + d``. Row ``0`` is zero.
    """
    gamma = 1.0 + 2.0 * s
    c0 = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    P = np.zeros((N, 2, 2))
    R = np.zeros((N, 2, 2))
    S = np.zeros((N, 2, 2))
    if N < 2:
        return c0, P, R, S

    # adjacent cells, slopes (alpha, beta): (alpha xi + beta tau)^2 (xi + tau)^{-gamma}
    lower = 1.0 / (3.0 - 2.0 * s)
    A = lower / 3.0
    B = lower / 6.0
    x, w = gauss01(order)
    rho, ww = x[:, None], x[None, :]
    wt = w[:, None] * w[None, :] * rho * (2.0 - rho) ** (-gamma)
    xi = 1.0 - rho * ww
    tau = 1.0 - rho * (1.0 - ww)
    A += float(np.sum(wt * xi * xi))
    B += float(np.sum(wt * xi * tau))
    L = np.array([[-1.0, 1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 1.0]])
    M1 = L.T @ np.array([[A, B], [B, A]]) @ L
    P[1], R[1], S[1] = M1[:2, :2], M1[:2, 2:], M1[2:, 2:]

    start = 2
    for bound, n in _FAR_RULES:
        stop = N if bound is None else min(bound, N)
        if stop <= start:
            continue
        t, wg = gauss01(n)
        U = np.stack([1.0 - t, t])
        diff = t[None, :] - t[:, None]  # tau_l - t_k
        ww2 = wg[:, None] * wg[None, :]
        for lo in range(start, stop, _CHUNK):
            d = np.arange(lo, min(stop, lo + _CHUNK), dtype=float)
            K = ww2 * (d[:, None, None] + diff) ** (-gamma)
            P[lo:lo + d.size] = np.einsum("dkl,ik,jk->dij", K, U, U)
            R[lo:lo + d.size] = -np.einsum("dkl,ik,jl->dij", K, U, U)
            S[lo:lo + d.size] = np.einsum("dkl,il,jl->dij", K, U, U)
        start = stop
    for arr in (P, R, S):
        arr.setflags(write=False)
    return c0, P, R, S


# ---------------------------------------------------------------------------
# the assembled form


def _corr_sum(seq: np.ndarray, mask: np.ndarray, forward: bool) -> np.ndarray:
    """``out[p] = sum_{d>=1} seq[d] mask[p+d]`` (forward) or ``mask[p-d]``."""
    n = mask.size
    size = sfft.next_fast_len(2 * n)
    m = mask[::-1] if forward else mask
    out = sfft.irfft(sfft.rfft(seq, size, axis=0) * sfft.rfft(m, size)[(...,) + (None,) * (seq.ndim - 1)],
                     size, axis=0)[:n]
    return out[::-1] if forward else out


@dataclass(frozen=True, eq=False)
class SeminormForm:
    """Quadratic form ``v -> v^T Q v`` giving ``[u]_s^2`` for nodal vectors ``v``."""

    s: float
    a: float
    b: float
    N: int
    order: int
    c0: float
    P: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)

    @property
    def grid(self) -> tuple[float, float, int]:
        return (self.a, self.b, self.N)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @cached_property
    def _fft_size(self) -> int:
        return sfft.next_fast_len(2 * self.N)

    @cached_property
    def _rhat(self) -> np.ndarray:
        return sfft.rfft(self.R, self._fft_size, axis=0)

    @cached_property
    def _full_diag(self) -> np.ndarray:
        cp = np.cumsum(self.P, axis=0)
        cs = np.cumsum(self.S, axis=0)
        D = 2.0 * (cp[::-1] + cs)
        D += self.c0 * np.array([[1.0, -1.0], [-1.0, 1.0]])
        return D

    def _diag(self, mask):
        if mask is None:
            return self._full_diag
        m = mask.astype(float)
        D = 2.0 * (_corr_sum(self.P, m, True) + _corr_sum(self.S, m, False))
        D += self.c0 * np.array([[1.0, -1.0], [-1.0, 1.0]])
        return D * m[:, None, None]

    def apply(self, v, cells=None) -> np.ndarray:
        """Return ``Q v``; ``cells`` restricts both variables to a union of cells."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.N + 1:
            raise DomainError(f"expected {self.N + 1} nodal values, got {v.shape[0]}")
        N, size = self.N, self._fft_size
        mask = None if cells is None else np.asarray(cells, dtype=bool)
        D = self._diag(mask)
        y0, y1 = v[:-1], v[1:]
        ext = (slice(None),) + (None,) * (v.ndim - 1)
        h0 = D[:, 0, 0][ext] * y0 + D[:, 0, 1][ext] * y1
        h1 = D[:, 1, 0][ext] * y0 + D[:, 1, 1][ext] * y1
        if mask is not None:
            m = mask.astype(float)[ext]
            y0, y1 = y0 * m, y1 * m
        f0, f1 = sfft.rfft(y0, size, axis=0), sfft.rfft(y1, size, axis=0)
        b0, b1 = sfft.rfft(y0[::-1], size, axis=0), sfft.rfft(y1[::-1], size, axis=0)
        r = self._rhat
        r00, r01, r10, r11 = (r[:, i, j][ext] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))

        def back(spectrum):
            return sfft.irfft(spectrum, size, axis=0)[:N]

        c0 = back(r00 * b0 + r01 * b1)[::-1] + back(r00 * f0 + r10 * f1)
        c1 = back(r10 * b0 + r11 * b1)[::-1] + back(r01 * f0 + r11 * f1)
        if mask is not None:
            c0, c1 = c0 * m, c1 * m
        h0 = h0 + 2.0 * c0
        h1 = h1 + 2.0 * c1
        out = np.zeros_like(v)
        out[:-1] += h0
        out[1:] += h1
        return out

    def energy(self, v, cells=None) -> float:
        v = np.asarray(v, dtype=float)
        # constants are in the kernel; centering makes them evaluate to exactly 0
        v = v - v[0]
        return float(v @ self.apply(v, cells))

    def evaluate(self, u: GridFunction, cells=None) -> float:
        """``[u]_s^2`` (or its restriction to ``cells``), clipped at zero."""
        if u.grid != self.grid and (u.N != self.N or not np.allclose([u.a, u.b], [self.a, self.b])):
            raise DomainError("grid function and form live on different grids")
        return max(self.energy(u.values, cells), 0.0)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense symmetric matrix of the form (only for ``N <= MAX_DENSE``)."""
        if self.N > MAX_DENSE:
            raise DomainError(f"dense matrix capped at N={MAX_DENSE}")
        Q = self.apply(np.eye(self.N + 1))
        Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        return Q


def assemble_form(grid, s: float, near_diagonal_order: int = DEFAULT_ORDER) -> SeminormForm:
    """Assemble the seminorm form on the uniform grid ``(a, b, N)``."""
    a, b, N = float(grid[0]), float(grid[1]), int(grid[2])
    s = _check_s(s)
    if N < 2 or not b > a:
        raise DomainError("need N >= 2 and b > a")
    return _assemble(a, b, N, s, int(near_diagonal_order))


@lru_cache(maxsize=16)
def _assemble(a, b, N, s, order):
    c0, P, R, S = _unit_blocks(N, s, order)
    scale = ((b - a) / N) ** (1.0 - 2.0 * s)
    blocks = [np.array(x * scale) for x in (P, R, S)]
    for x in blocks:
        x.setflags(write=False)
    return SeminormForm(s, a, b, N, order, c0 * scale, *blocks)


def cell_mask(grid, E) -> np.ndarray:
    """Boolean cell mask of a finite union of cell-aligned intervals."""
    a, b, N = float(grid[0]), float(grid[1]), int(grid[2])
    h = (b - a) / N
    intervals = [E] if np.ndim(E) == 1 else list(E)
    mask = np.zeros(N, dtype=bool)
    for lo, hi in intervals:
        i0, i1 = (lo - a) / h, (hi - a) / h
        j0, j1 = round(i0), round(i1)
        if abs(i0 - j0) > 1e-8 or abs(i1 - j1) > 1e-8:
            raise AlignmentError(f"interval ({lo}, {hi}) is not aligned with cells of width {h}")
        if not (0 <= j0 < j1 <= N):
            raise DomainError(f"interval ({lo}, {hi}) is empty or leaves [{a}, {b}]")
        mask[j0:j1] = True
    return mask


def seminorm_sq(u: GridFunction, s: float, order: int = DEFAULT_ORDER) -> float:
    """``[u]_s^2`` over ``(a, b)^2`` for the piecewise-linear ``u``."""
    return assemble_form(u.grid, s, order).evaluate(u)


def seminorm_sq_local(u: GridFunction, E, s: float, order: int = DEFAULT_ORDER) -> float:
    """Localized seminorm: both variables restricted to ``E`` (cell-aligned)."""
    mask = cell_mask(u.grid, E)
    return assemble_form(u.grid, s, order).evaluate(u, mask)


# ---------------------------------------------------------------------------
# binary cache


def save_form(form: SeminormForm, path) -> None:
    """Write the form to ``path``; reloading is bit-exact."""
    key = {"a": form.a, "b": form.b, "N": form.N, "s": form.s, "order": form.order,
           "c0": form.c0.hex(), "version": CACHE_VERSION}
    header = json.dumps(key, sort_keys=True).encode()
    buf = io.BytesIO()
    np.save(buf, np.stack([form.P, form.R, form.S]), allow_pickle=False)
    with Path(path).open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(buf.getvalue())


def load_form(path) -> SeminormForm:
    with Path(path).open("rb") as fh:
        if fh.read(len(CACHE_MAGIC)) != CACHE_MAGIC:
            raise ValueError(f"{path}: not a seminorm form cache")
        (n,) = struct.unpack("<I", fh.read(4))
        key = json.loads(fh.read(n))
        if key.get("version") != CACHE_VERSION:
            raise ValueError(f"{path}: cache version {key.get('version')} != {CACHE_VERSION}")
        blocks = np.load(io.BytesIO(fh.read()), allow_pickle=False)
    P, R, S = (np.array(x) for x in blocks)
    return SeminormForm(float(key["s"]), float(key["a"]), float(key["b"]), int(key["N"]),
                        int(key["order"]), float.fromhex(key["c0"]), P, R, S)


__all__ = [
    "HALF_BAND", "SeminormForm", "assemble_form", "cell_mask", "gauss01", "kernel_mass",
    "linear_seminorm_sq", "load_form", "ramp_seminorm_sq", "save_form", "seminorm_sq",
    "seminorm_sq_local",
]
