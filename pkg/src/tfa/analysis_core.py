"""Sampled functions on a periodic grid and the local analysis toolkit.

The grid is N equispaced points (N a power of two) on [-L/2, L/2) with
spacing L/N; the frequency grid is the integers over L up to Nyquist.
The transform pair approximates the continuous Fourier transform with
kernel exp(2*pi*i*x*xi) and is unitary for the weighted norms
(h * sum |f|^2 = (1/L) * sum |fhat|^2).

Wave packets are built on the frequency side from one fixed C-infinity
template bump, so their discrete Fourier coefficients vanish exactly
outside the (11/10)-dilate of the prescribed frequency interval.
"""

from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass

import numpy as np

from .geometry import Interval, TriTile, as_interval


class GridMismatchError(ValueError):
    pass


class NyquistError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: num_points samples on [-period/2, period/2)."""

    num_points: int
    period: float

    def __post_init__(self) -> None:
        n = self.num_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError(f"num_points must be a power of two >= 2, got {n}")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def spacing(self) -> float:
        return self.period / self.num_points

    @property
    def nyquist(self) -> float:
        return self.num_points / (2.0 * self.period)

    @property
    def points(self) -> np.ndarray:
        return _plan(self).x

    @property
    def freqs(self) -> np.ndarray:
        """Frequency samples k/L for k = -N/2 .. N/2-1, ascending."""
        return _plan(self).xi

    def freq_range(self) -> tuple[float, float]:
        """Admissible band support [-Nyquist, +Nyquist]; the sampled
        frequencies are -N/(2L) .. (N/2-1)/L."""
        return (-self.nyquist, self.nyquist)


class _GridPlan:
    """Per-grid cached arrays (sample points, frequencies, sign factors)."""

    __slots__ = ("x", "xi", "signs")

    def __init__(self, grid: Grid):
        n, L = grid.num_points, grid.period
        m = np.arange(n)
        self.x = -L / 2 + m * (L / n)
        k = np.arange(-(n // 2), n // 2)
        self.xi = k / L
        signs = np.ones(n)
        signs[1::2] = -1.0  # (-1)**k for k = -N/2 .. N/2-1 starts at (-1)**(N/2)
        if (n // 2) % 2 == 1:
            signs = -signs
        self.signs = signs


_plan_cache: dict[tuple[int, float], _GridPlan] = {}
_plan_lock = threading.Lock()


def _plan(grid: Grid) -> _GridPlan:
    key = (grid.num_points, grid.period)
    plan = _plan_cache.get(key)
    if plan is None:
        with _plan_lock:
            plan = _plan_cache.get(key)
            if plan is None:
                plan = _GridPlan(grid)
                _plan_cache[key] = plan
    return plan


class SampledFunction:
    """Complex values on a Grid; immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (grid.num_points,):
            raise ValueError(f"expected {grid.num_points} samples, got {values.shape}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, *a):
        raise AttributeError("SampledFunction is immutable")

    # -- norms ---------------------------------------------------------
    def l2_norm(self) -> float:
        return math.sqrt(self.grid.spacing * float(np.sum(np.abs(self.values) ** 2)))

    def lp_norm(self, p: float) -> float:
        a = np.abs(self.values)
        if math.isinf(p):
            return float(a.max(initial=0.0))
        return float((self.grid.spacing * np.sum(a**p)) ** (1.0 / p))

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        require_same_grid(self, other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        require_same_grid(self, other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "SampledFunction":
        return SampledFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    # -- serialization: header (N, L) then N interleaved complex doubles
    def to_bytes(self) -> bytes:
        head = struct.pack("<qd", self.grid.num_points, self.grid.period)
        return head + self.values.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SampledFunction":
        n, L = struct.unpack_from("<qd", blob, 0)
        values = np.frombuffer(blob, dtype="<c16", offset=16, count=n)
        return cls(Grid(int(n), float(L)), values.astype(np.complex128))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "SampledFunction":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def __repr__(self) -> str:
        return f"SampledFunction(N={self.grid.num_points}, L={self.grid.period})"


def require_same_grid(*fs: SampledFunction) -> Grid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grids differ: {f.grid} vs {grid}")
    return grid


def spectrum(f: SampledFunction) -> np.ndarray:
    """Fourier coefficients on grid.freqs (ascending order).

    F(k/L) = h * sum_m f(x_m) exp(-2 pi i x_m k / L); with x_m starting
    at -L/2 this is h * (-1)**k * FFT(f)[k mod N].
    """
    plan = _plan(f.grid)
    raw = np.fft.fft(f.values)
    return f.grid.spacing * plan.signs * np.fft.fftshift(raw)


def from_spectrum(grid: Grid, coeffs: np.ndarray) -> SampledFunction:
    """Inverse of `spectrum`: f(x_m) = (1/L) sum_k F_k exp(2 pi i x_m k/L)."""
    plan = _plan(grid)
    g = np.fft.ifftshift(np.asarray(coeffs, dtype=np.complex128) * plan.signs)
    values = np.fft.ifft(g) * (grid.num_points / grid.period)
    return SampledFunction(grid, values)


def inner_product(f: SampledFunction, g: SampledFunction) -> complex:
    """<f, g> = h * sum f * conj(g); matches the frequency-side sum by
    the unitary normalization."""
    require_same_grid(f, g)
    return complex(f.grid.spacing * np.vdot(g.values, f.values))


# ---------------------------------------------------------------------------
# chi_tilde weight
# ---------------------------------------------------------------------------


def chi_tilde(interval, x, exponent: int = 10):
    """(1 + dist(x, I)/|I|) ** -exponent; equals 1 on I.

    The base weight of the estimates carries exponent 10; powers of it
    are expressed by scaling `exponent` (e.g. the squared weight is
    exponent 20).
    """
    iv = as_interval(interval)
    if not iv.length > 0:
        raise ValueError("interval must have positive length")
    xs = np.asarray(x, dtype=float)
    dist = np.maximum(np.maximum(iv.left - xs, xs - iv.right), 0.0)
    out = (1.0 + dist / iv.length) ** (-float(exponent))
    if np.isscalar(x) or xs.ndim == 0:
        return float(out)
    return out


def chi_tilde_function(grid: Grid, interval, exponent: int = 10) -> SampledFunction:
    return SampledFunction(grid, chi_tilde(interval, grid.points, exponent))


# ---------------------------------------------------------------------------
# Wave packets
# ---------------------------------------------------------------------------

# Frequency-side template: b(u) = exp(-1/(1-u^2)) on |u|<1, zero outside.
# Dilated so its support is exactly the (11/10)-dilate of the target
# interval.


def bump_profile(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    with np.errstate(over="ignore", under="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def band_profile(xi: np.ndarray, interval: Interval) -> np.ndarray:
    """Template bump dilated to `interval`: supported exactly inside the
    open (11/10)-dilate of the interval."""
    half = 0.55 * interval.length
    return bump_profile((xi - interval.center) / half)


def dilated_support(interval) -> Interval:
    iv = as_interval(interval)
    half = 0.55 * iv.length
    return Interval(iv.center - half, iv.center + half)


class WavePacket:
    """An L2-normalized bump on a tile: spatially concentrated on I_s,
    Fourier supported in (11/10) omega_{s_j}.

    `coeffs` is the defining frequency-side array (on grid.freqs); it is
    exactly zero outside `support` by construction.
    """

    __slots__ = ("sampled", "tile", "component", "support", "coeffs")

    def __init__(
        self,
        sampled: SampledFunction,
        tile: TriTile,
        component: int,
        support: Interval,
        coeffs: np.ndarray,
    ):
        coeffs = np.asarray(coeffs, dtype=np.complex128).copy()
        coeffs.setflags(write=False)
        object.__setattr__(self, "sampled", sampled)
        object.__setattr__(self, "tile", tile)
        object.__setattr__(self, "component", component)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *a):
        raise AttributeError("WavePacket is immutable")

    @property
    def grid(self) -> Grid:
        return self.sampled.grid

    @property
    def values(self) -> np.ndarray:
        return self.sampled.values


def make_wave_packet(grid: Grid, tile: TriTile, j: int) -> WavePacket:
    """Wave packet for the j-th component of a tri-tile (j in {1,2,3}).

    Frequency-side construction: the template bump dilated to the
    component interval, modulated to the spatial center of I_s, then
    L2-normalized on the grid.
    """
    band = as_interval(tile.freq_component(j))
    support = dilated_support(band)
    lo, hi = grid.freq_range()
    if support.left < lo or support.right > hi:
        raise NyquistError(
            f"frequency support {support.left:.6g}..{support.right:.6g} of tile "
            f"({tile}) component {j} exceeds the grid range {lo:.6g}..{hi:.6g}"
        )
    if tile.spatial.length < 4.0 * grid.spacing:
        raise NyquistError(
            f"spatial interval {tile.spatial} is finer than 4 grid spacings "
            f"(spacing {grid.spacing:.6g})"
        )
    xi = grid.freqs
    coeffs = band_profile(xi, band).astype(np.complex128)
    coeffs *= np.exp(-2j * np.pi * tile.spatial.center * xi)
    f = from_spectrum(grid, coeffs)
    norm = f.l2_norm()
    if norm == 0.0:
        raise NyquistError(f"no frequency samples inside {band} on this grid")
    return WavePacket(f * (1.0 / norm), tile, j, support, coeffs / norm)


_packet_cache: dict[tuple, WavePacket] = {}
_packet_lock = threading.Lock()


def wave_packet(grid: Grid, tile: TriTile, j: int) -> WavePacket:
    """Cached wave packets (process-wide; values are immutable)."""
    key = (grid.num_points, grid.period, tile, j)
    pkt = _packet_cache.get(key)
    if pkt is None:
        pkt = make_wave_packet(grid, tile, j)
        with _packet_lock:
            _packet_cache.setdefault(key, pkt)
    return pkt


# ---------------------------------------------------------------------------
# Discrete Hardy-Littlewood maximal function
# ---------------------------------------------------------------------------


def maximal_function(f: SampledFunction) -> SampledFunction:
    """Uncentered maximal function over windows of dyadic length at every
    unit-cell translate (periodic).

    For every point this takes the maximum average of |f| over all
    windows of length 2**k cells containing it, for all k.  Any interval
    lies inside such a window of at most twice its length, so the result
    is within a factor 2 of the true uncentered maximal function, and it
    dominates |f| pointwise (k = 0 windows).
    """
    a = np.abs(f.values)
    n = a.size
    best = a.copy()
    csum = np.concatenate(([0.0], np.cumsum(np.concatenate((a, a)))))
    levels = int(math.log2(n))
    p = np.arange(n)
    for k in range(1, levels + 1):
        w = 1 << k
        means = (csum[p + w] - csum[p]) / w  # mean over [p, p+w), cyclic
        # Trailing sliding max over p in [i-w+1, i] via doubling.
        t = means
        span = 1
        while span < w:
            t = np.maximum(t, np.roll(t, span))
            span <<= 1
        best = np.maximum(best, t)
    return SampledFunction(f.grid, best)


def average_on(f_values: np.ndarray, grid: Grid, interval) -> float:
    """Mean of f over the grid points inside the interval (real part)."""
    iv = as_interval(interval)
    mask = (grid.points >= iv.left) & (grid.points < iv.right)
    count = int(mask.sum())
    if count == 0:
        return 0.0
    return float(np.real(f_values[mask]).sum() / count)


def integrate(values: np.ndarray, grid: Grid) -> float:
    return float(np.real(values).sum() * grid.spacing)


# ---------------------------------------------------------------------------
# Random test functions
# ---------------------------------------------------------------------------


def random_function(grid: Grid, rng: np.random.Generator, band_fraction: float = 0.5) -> SampledFunction:
    """Random band-limited function: complex gaussian spectrum under a
    smooth envelope occupying `band_fraction` of the Nyquist range."""
    xi = grid.freqs
    cut = band_fraction * grid.nyquist
    envelope = np.exp(-((xi / cut) ** 4))
    coeffs = (rng.standard_normal(xi.size) + 1j * rng.standard_normal(xi.size)) * envelope
    return from_spectrum(grid, coeffs)
