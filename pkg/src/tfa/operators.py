"""Bilinear square-function evaluators and the discretized model form.

Four evaluators share one convention: frequency projections are taken
against either the smooth tensor template bump (supported in the
(11/10)-dilate of the band) or the sharp indicator of the band, pieces
are multiplied pointwise in space, and the pieces are aggregated in
little-ell^r over the family (pointwise sup for r = infinity).

The trilinear form is linear in f and g and conjugate-linear in the
third argument: pairing a per-square inner sum u_omega against h_omega
via integral of u_omega * conj(h_omega) and summing over omega
reproduces the form exactly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .geometry import (
    FrequencySquare,
    Interval,
    SquareCollection,
    TileCollection,
    TriTile,
    as_interval,
    build_tritile,
    make_dyadic,
)
from .analysis_core import (
    Grid,
    NyquistError,
    SampledFunction,
    band_profile,
    dilated_support,
    from_spectrum,
    inner_product,
    require_same_grid,
    spectrum,
    wave_packet,
)


# ---------------------------------------------------------------------------
# Exponent bookkeeping
# ---------------------------------------------------------------------------


def _recip(p) -> Fraction:
    if p == math.inf:
        return Fraction(0)
    return 1 / Fraction(p)


def dual_exponent(p):
    """p' with 1/p + 1/p' = 1; handles infinity and p < 1 (negative dual)."""
    if p == math.inf:
        return Fraction(1)
    p = Fraction(p)
    if p == 1:
        return math.inf
    return p / (p - 1)


@dataclass(frozen=True)
class ExponentTuple:
    """A Hoelder triple (p, q, s) with 1/p + 1/q = 1/s, plus the ell^r index.

    Stored as Fractions (or inf) so the scaling identity is exact.
    s may lie below 1 (quasi-Banach target); then s' is negative.
    """

    p: object
    q: object
    s: object
    r: object

    def __post_init__(self) -> None:
        if _recip(self.p) + _recip(self.q) != _recip(self.s):
            raise ValueError(
                f"Hoelder scaling violated: 1/{self.p} + 1/{self.q} != 1/{self.s}"
            )

    @classmethod
    def from_pq(cls, p, q, r) -> "ExponentTuple":
        p = p if p == math.inf else Fraction(p)
        q = q if q == math.inf else Fraction(q)
        inv_s = _recip(p) + _recip(q)
        s = math.inf if inv_s == 0 else 1 / inv_s
        return cls(p, q, s, r if r == math.inf else Fraction(r))

    @property
    def r_dual(self):
        return dual_exponent(self.r)

    @property
    def s_dual(self):
        return dual_exponent(self.s)

    def in_main_range(self) -> bool:
        """r' < p, q and r'/2 < s < r (the proved boundedness region)."""
        if self.r == math.inf:
            return True
        rp = self.r_dual
        ok_pq = (self.p == math.inf or Fraction(self.p) > rp) and (
            self.q == math.inf or Fraction(self.q) > rp
        )
        return ok_pq and rp / 2 < Fraction(self.s) < Fraction(self.r)


# ---------------------------------------------------------------------------
# SequenceH
# ---------------------------------------------------------------------------


class SequenceH:
    """A finite family {h_omega} indexed by frequency squares, one grid."""

    __slots__ = ("grid", "_entries", "__weakref__")

    def __init__(self, entries: Mapping[FrequencySquare, SampledFunction]):
        items = sorted(entries.items(), key=lambda kv: kv[0])
        if not items:
            raise ValueError("SequenceH requires at least one entry")
        grid = items[0][1].grid
        for _, f in items:
            if f.grid != grid:
                raise ValueError("all h_omega must share one grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "_entries", dict(items))

    def __setattr__(self, *a):
        raise AttributeError("SequenceH is immutable")

    def __contains__(self, sq: FrequencySquare) -> bool:
        return sq in self._entries

    def __getitem__(self, sq: FrequencySquare) -> SampledFunction:
        try:
            return self._entries[sq]
        except KeyError:
            raise KeyError(f"no h_omega entry for square {sq}") from None

    def squares(self) -> tuple[FrequencySquare, ...]:
        return tuple(self._entries.keys())

    def lr_aggregate(self, r_dual: float) -> np.ndarray:
        """(sum_omega |h_omega(x)|^{r'})^{1/r'} on the grid."""
        acc = np.zeros(self.grid.num_points)
        for f in self._entries.values():
            acc += np.abs(f.values) ** r_dual
        return acc ** (1.0 / r_dual)

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# ell^r aggregation and parallel helpers
# ---------------------------------------------------------------------------


def lr_reduce(pieces: Sequence[np.ndarray], r: float, grid: Grid) -> SampledFunction:
    """Pointwise (sum |piece|^r)^{1/r} over the (already ordered) pieces;
    pointwise sup for r = inf."""
    n = grid.num_points
    if not pieces:
        return SampledFunction(grid, np.zeros(n))
    if math.isinf(r):
        acc = np.zeros(n)
        for p in pieces:
            np.maximum(acc, np.abs(p), out=acc)
        return SampledFunction(grid, acc)
    if r < 1:
        raise ValueError(f"r must be >= 1 or inf, got {r}")
    acc = np.zeros(n)
    for p in pieces:
        acc += np.abs(p) ** r
    return SampledFunction(grid, acc ** (1.0 / r))


def thread_count() -> int:
    env = os.environ.get("TFA_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def ordered_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; uses a thread pool when TFA_THREADS > 1.

    Reductions over the result are therefore bit-reproducible regardless
    of thread count.
    """
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Frequency projections
# ---------------------------------------------------------------------------


def _band_mask_sharp(xi: np.ndarray, band: Interval) -> np.ndarray:
    return ((xi >= band.left) & (xi < band.right)).astype(float)


def band_multiplier(grid: Grid, band, sharp: bool) -> np.ndarray:
    band = as_interval(band)
    xi = grid.freqs
    if sharp:
        return _band_mask_sharp(xi, band)
    return band_profile(xi, band)


def check_band_in_range(grid: Grid, band, sharp: bool) -> None:
    band = as_interval(band)
    lo, hi = grid.freq_range()
    probe = band if sharp else dilated_support(band)
    if probe.left < lo or probe.right > hi:
        raise NyquistError(
            f"band {band.left:.6g}..{band.right:.6g} (effective support "
            f"{probe.left:.6g}..{probe.right:.6g}) exceeds grid range {lo:.6g}..{hi:.6g}"
        )


def project(f_spectrum: np.ndarray, grid: Grid, band, sharp: bool) -> np.ndarray:
    """Spatial values of the frequency restriction of f to the band."""
    mult = band_multiplier(grid, band, sharp)
    return from_spectrum(grid, f_spectrum * mult).values


# ---------------------------------------------------------------------------
# Continuous evaluators
# ---------------------------------------------------------------------------


def eval_T_r(
    f: SampledFunction,
    g: SampledFunction,
    omega: SquareCollection,
    r: float,
    sharp: bool = False,
) -> SampledFunction:
    """The square-family operator: per square omega1 x omega2, restrict
    f to omega1 and g to omega2 (smooth tensor bump, or indicator when
    sharp), multiply in space, and aggregate in ell^r over the family."""
    grid = require_same_grid(f, g)
    squares = tuple(omega)
    if not squares:
        return SampledFunction(grid, np.zeros(grid.num_points))
    for sq in squares:
        check_band_in_range(grid, sq.omega1, sharp)
        check_band_in_range(grid, sq.omega2, sharp)
    fs, gs = spectrum(f), spectrum(g)

    def piece(sq: FrequencySquare) -> np.ndarray:
        return project(fs, grid, sq.omega1, sharp) * project(gs, grid, sq.omega2, sharp)

    pieces = ordered_map(piece, squares)
    return lr_reduce(pieces, r, grid)


def square_piece(
    f: SampledFunction, g: SampledFunction, sq: FrequencySquare, sharp: bool = False
) -> SampledFunction:
    """A single bilinear piece of eval_T_r (exposed for probes)."""
    grid = require_same_grid(f, g)
    fs, gs = spectrum(f), spectrum(g)
    vals = project(fs, grid, sq.omega1, sharp) * project(gs, grid, sq.omega2, sharp)
    return SampledFunction(grid, vals)


def eval_RF_r(
    f: SampledFunction,
    intervals: Sequence,
    r: float,
    sharp: bool = False,
) -> SampledFunction:
    """ell^r aggregate of frequency projections onto disjoint intervals."""
    grid = f.grid
    bands = [as_interval(iv) for iv in intervals]
    for i in range(len(bands)):
        for j in range(i + 1, len(bands)):
            if bands[i].overlaps(bands[j]):
                raise ValueError(f"intervals overlap: {bands[i]} and {bands[j]}")
    if not bands:
        return SampledFunction(grid, np.zeros(grid.num_points))
    for b in bands:
        check_band_in_range(grid, b, sharp)
    fs = spectrum(f)
    pieces = ordered_map(lambda b: project(fs, grid, b, sharp), bands)
    return lr_reduce(pieces, r, grid)


def eval_LP(
    f: SampledFunction,
    g: SampledFunction,
    intervals: Sequence,
    r: float,
) -> SampledFunction:
    """Difference-band square function: pieces carry the multiplier
    1_[a,b](xi - eta); aggregation in ell^r.

    Evaluation groups frequency pairs by their integer difference d and
    accumulates the output spectrum over sums sigma = a + b (folded onto
    the grid), which is exact for the sampled product.
    """
    grid = require_same_grid(f, g)
    bands = [as_interval(iv) for iv in intervals]
    for i in range(len(bands)):
        for j in range(i + 1, len(bands)):
            if bands[i].overlaps(bands[j]):
                raise ValueError(f"intervals overlap: {bands[i]} and {bands[j]}")
    if not bands:
        return SampledFunction(grid, np.zeros(grid.num_points))
    n, L = grid.num_points, grid.period
    fs, gs = spectrum(f), spectrum(g)
    # Integer frequency indices a, b run over [-n/2, n/2); differences
    # d = a - b over (-n, n).
    pieces = []
    for band in bands:
        sigma_acc = np.zeros(2 * n, dtype=np.complex128)  # sigma index a+b+n
        d_lo = math.ceil(band.left * L)
        d_hi = math.ceil(band.right * L) - 1  # d/L in [left, right)
        for d in range(max(d_lo, -(n - 1)), min(d_hi, n - 1) + 1):
            # a - b = d with both indices in range.
            a_lo = max(-(n // 2), d - (n // 2))
            a_hi = min(n // 2 - 1, d + n // 2 - 1)
            if a_lo > a_hi:
                continue
            ai = np.arange(a_lo, a_hi + 1)
            prod = fs[ai + n // 2] * gs[ai - d + n // 2]
            np.add.at(sigma_acc, 2 * ai - d + n, prod)
        # Fold sigma (integer index in (-n, n)) onto the grid modulo n and
        # evaluate: on the sample points, frequencies are aliased mod n/L.
        folded = np.zeros(n, dtype=np.complex128)
        sig = np.arange(-n, n)
        idx = ((sig + n // 2) % n)
        np.add.at(folded, idx, sigma_acc)
        pieces.append(from_spectrum(grid, folded / L).values)
    return lr_reduce(pieces, r, grid)


# ---------------------------------------------------------------------------
# Model operator and trilinear form
# ---------------------------------------------------------------------------


def model_inner_sum(
    f: SampledFunction, g: SampledFunction, tiles: Sequence[TriTile]
) -> np.ndarray:
    """sum_s |I_s|^{-1/2} <f, phi_{s1}> <g, phi_{s2}> phi_{s3}(x) over the
    given tiles (all sharing one square)."""
    grid = require_same_grid(f, g)
    acc = np.zeros(grid.num_points, dtype=np.complex128)
    for t in tiles:
        p1 = wave_packet(grid, t, 1)
        p2 = wave_packet(grid, t, 2)
        p3 = wave_packet(grid, t, 3)
        c = (
            inner_product(f, p1.sampled)
            * inner_product(g, p2.sampled)
            / math.sqrt(t.spatial.length)
        )
        acc = acc + c * p3.values
    return acc


def eval_model(
    f: SampledFunction, g: SampledFunction, tiles: TileCollection, r: float
) -> SampledFunction:
    """Model operator: per square, the wave-packet inner sum over its
    tiles; then the pointwise ell^r aggregate over squares."""
    grid = require_same_grid(f, g)
    squares = tiles.squares()
    if not squares:
        return SampledFunction(grid, np.zeros(grid.num_points))
    pieces = ordered_map(
        lambda sq: model_inner_sum(f, g, tiles.tiles_for_square(sq)), squares
    )
    return lr_reduce(pieces, r, grid)


def tile_term(
    f: SampledFunction, g: SampledFunction, h: SequenceH, t: TriTile
) -> complex:
    """One summand |I_s|^{-1/2} <f,phi_1><g,phi_2><phi_3, h_s>."""
    grid = require_same_grid(f, g)
    p1 = wave_packet(grid, t, 1)
    p2 = wave_packet(grid, t, 2)
    p3 = wave_packet(grid, t, 3)
    h_s = h[t.square]
    return (
        inner_product(f, p1.sampled)
        * inner_product(g, p2.sampled)
        * inner_product(p3.sampled, h_s)
        / math.sqrt(t.spatial.length)
    )


def trilinear_form(
    f: SampledFunction, g: SampledFunction, h: SequenceH, tiles: TileCollection
) -> complex:
    """The dualized model form over a tile collection.

    Linear in f and g, conjugate-linear in h; summation follows the
    canonical tile order, so the value is reproducible bit for bit.
    """
    grid = require_same_grid(f, g)
    if h.grid != grid:
        raise ValueError("h lives on a different grid")
    for sq in tiles.squares():
        if sq not in h:
            raise KeyError(f"no h_omega entry for square {sq}")
    terms = ordered_map(lambda t: tile_term(f, g, h, t), tuple(tiles))
    return complex(sum(terms, start=0j))


# ---------------------------------------------------------------------------
# Tile generation from a square collection
# ---------------------------------------------------------------------------


def tiles_for_omega(
    omega: SquareCollection, window, max_tiles: int | None = None
) -> TileCollection:
    """Model tiles for a square family: for each square, every dyadic
    spatial interval of the matching scale (|I| * |omega1| = 1) meeting
    the window."""
    win = as_interval(window)
    tiles: list[TriTile] = []
    for sq in omega:
        j = -sq.scale  # spatial scale with area one
        length = math.ldexp(1.0, j)
        k_lo = math.floor(win.left / length)
        k_hi = math.ceil(win.right / length) - 1
        for k in range(k_lo, k_hi + 1):
            tiles.append(build_tritile(make_dyadic(j, k), sq))
            if max_tiles is not None and len(tiles) > max_tiles:
                raise ValueError(
                    f"window {win} generates more than {max_tiles} tiles"
                )
    return TileCollection(tiles)
