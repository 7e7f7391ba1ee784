"""Independent reference implementations used by the test suite.

Everything here is deliberately slow and structurally different from the
package code paths: transforms are explicit O(N^2) quadrature matrices,
bilinear operators are direct double sums over frequency pairs grouped
by anti-diagonals, and combinatorial answers come from brute-force
filters.  No FFT is used anywhere in this module.
"""

from __future__ import annotations

import math

import numpy as np

from tfa.analysis_core import Grid, SampledFunction, band_profile
from tfa.geometry import TileCollection, TriTile, as_interval


_matrix_cache: dict = {}


def dft_matrix(grid: Grid) -> np.ndarray:
    """E[k, m] = exp(-2 pi i x_m xi_k)."""
    key = ("dft", grid.num_points, grid.period)
    if key not in _matrix_cache:
        _matrix_cache[key] = np.exp(-2j * np.pi * np.outer(grid.freqs, grid.points))
    return _matrix_cache[key]


def synth_matrix(grid: Grid) -> np.ndarray:
    key = ("synth", grid.num_points, grid.period)
    if key not in _matrix_cache:
        _matrix_cache[key] = np.exp(2j * np.pi * np.outer(grid.points, grid.freqs))
    return _matrix_cache[key]


def oracle_spectrum(f: SampledFunction) -> np.ndarray:
    return f.grid.spacing * (dft_matrix(f.grid) @ f.values)


def oracle_synthesis(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """(1/L) sum_k F_k exp(2 pi i x xi_k), explicit matrix."""
    return (synth_matrix(grid) @ np.asarray(coeffs, dtype=np.complex128)) / grid.period


def _band_mult(grid: Grid, band, sharp: bool) -> np.ndarray:
    band = as_interval(band)
    xi = grid.freqs
    if sharp:
        return ((xi >= band.left) & (xi < band.right)).astype(float)
    return band_profile(xi, band)


def oracle_bilinear_piece(
    f: SampledFunction,
    g: SampledFunction,
    mult1: np.ndarray,
    mult2: np.ndarray,
) -> np.ndarray:
    """sum_{a,b} fhat_a m1_a ghat_b m2_b e^{2 pi i x (xi_a + xi_b)} / L^2,
    via anti-diagonal sums and explicit exponentials."""
    grid = f.grid
    n, L = grid.num_points, grid.period
    fs = oracle_spectrum(f) * mult1
    gs = oracle_spectrum(g) * mult2
    # sigma = a + b for integer indices a, b in [-n/2, n/2)
    acc = np.zeros(2 * n - 1, dtype=np.complex128)  # sigma index: sigma + n
    for ai in range(n):
        a = ai - n // 2
        if fs[ai] == 0:
            continue
        for bi in range(n):
            b = bi - n // 2
            acc[a + b + n] += fs[ai] * gs[bi]
    return (_sigma_matrix(grid) @ acc) / (L * L)


def _sigma_matrix(grid: Grid) -> np.ndarray:
    n, L = grid.num_points, grid.period
    key = ("sig", n, L)
    if key not in _matrix_cache:
        sigmas = (np.arange(2 * n - 1) - n) / L
        _matrix_cache[key] = np.exp(2j * np.pi * np.outer(grid.points, sigmas))
    return _matrix_cache[key]


def oracle_lp_piece(
    f: SampledFunction, g: SampledFunction, band
) -> np.ndarray:
    """Piece with multiplier 1_band(xi - eta), direct double sum."""
    grid = f.grid
    n, L = grid.num_points, grid.period
    band = as_interval(band)
    fs = oracle_spectrum(f)
    gs = oracle_spectrum(g)
    acc = np.zeros(2 * n - 1, dtype=np.complex128)
    for ai in range(n):
        a = ai - n // 2
        for bi in range(n):
            b = bi - n // 2
            diff = (a - b) / L
            if band.left <= diff < band.right:
                acc[a + b + n] += fs[ai] * gs[bi]
    return (_sigma_matrix(grid) @ acc) / (L * L)


def lr_combine(pieces, r: float) -> np.ndarray:
    if not pieces:
        raise ValueError("no pieces")
    if math.isinf(r):
        out = np.abs(pieces[0])
        for p in pieces[1:]:
            out = np.maximum(out, np.abs(p))
        return out
    acc = sum(np.abs(p) ** r for p in pieces)
    return acc ** (1.0 / r)


def oracle_T_r(f, g, squares, r, sharp=False) -> np.ndarray:
    grid = f.grid
    pieces = [
        oracle_bilinear_piece(
            f, g, _band_mult(grid, sq.omega1, sharp), _band_mult(grid, sq.omega2, sharp)
        )
        for sq in squares
    ]
    if not pieces:
        return np.zeros(grid.num_points)
    return lr_combine(pieces, r)


def oracle_RF_r(f, bands, r, sharp=False) -> np.ndarray:
    grid = f.grid
    fs = oracle_spectrum(f)
    pieces = [oracle_synthesis(grid, fs * _band_mult(grid, b, sharp)) for b in bands]
    if not pieces:
        return np.zeros(grid.num_points)
    return lr_combine(pieces, r)


def oracle_LP(f, g, bands, r) -> np.ndarray:
    pieces = [oracle_lp_piece(f, g, b) for b in bands]
    if not pieces:
        return np.zeros(f.grid.num_points)
    return lr_combine(pieces, r)


# -- model operator oracle ---------------------------------------------------


def oracle_wave_packet_values(grid: Grid, tile: TriTile, j: int) -> np.ndarray:
    band = as_interval(tile.freq_component(j))
    coeffs = band_profile(grid.freqs, band).astype(np.complex128)
    coeffs *= np.exp(-2j * np.pi * tile.spatial.center * grid.freqs)
    vals = oracle_synthesis(grid, coeffs)
    norm = math.sqrt(grid.spacing * float(np.sum(np.abs(vals) ** 2)))
    return vals / norm


def oracle_inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> complex:
    return complex(grid.spacing * np.sum(a * np.conj(b)))


def oracle_model(f, g, tiles: TileCollection, r) -> np.ndarray:
    grid = f.grid
    pieces = []
    for sq in tiles.squares():
        acc = np.zeros(grid.num_points, dtype=np.complex128)
        for t in tiles.tiles_for_square(sq):
            p1 = oracle_wave_packet_values(grid, t, 1)
            p2 = oracle_wave_packet_values(grid, t, 2)
            p3 = oracle_wave_packet_values(grid, t, 3)
            c1 = oracle_inner(grid, f.values, p1)
            c2 = oracle_inner(grid, g.values, p2)
            acc += c1 * c2 * p3 / math.sqrt(t.spatial.length)
        pieces.append(acc)
    if not pieces:
        return np.zeros(grid.num_points)
    return lr_combine(pieces, r)


def oracle_trilinear(f, g, h, tiles: TileCollection) -> complex:
    grid = f.grid
    total = 0j
    for t in tiles:
        p1 = oracle_wave_packet_values(grid, t, 1)
        p2 = oracle_wave_packet_values(grid, t, 2)
        p3 = oracle_wave_packet_values(grid, t, 3)
        c1 = oracle_inner(grid, f.values, p1)
        c2 = oracle_inner(grid, g.values, p2)
        c3 = oracle_inner(grid, p3, h[t.square].values)
        total += c1 * c2 * c3 / math.sqrt(t.spatial.length)
    return total


# -- brute-force maximal function over the same window family ----------------


def oracle_maximal(values: np.ndarray) -> np.ndarray:
    """Max average of |f| over periodic windows of dyadic length at every
    start position; plain loops."""
    a = np.abs(values)
    n = a.size
    out = a.copy()
    k = 1
    while k <= n:
        for start in range(n):
            idx = [(start + i) % n for i in range(k)]
            mean = sum(a[i] for i in idx) / k
            lo = start
            for i in idx:
                if mean > out[i]:
                    out[i] = mean
        k *= 2
    return out
