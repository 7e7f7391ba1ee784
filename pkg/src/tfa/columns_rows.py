"""Columns and rows of tri-tiles and their local estimates.

A column collects tiles whose first frequency component contains the
top's (so the second components of distinct squares are pairwise
disjoint); a row is the mirror image.  These carry the local bounds on
the trilinear form: a sup-normalized f-factor, an interpolated g-factor,
and an averaged maximal-function factor for the third slot.

The chi-weight convention: the base weight has decay exponent 10 and
the estimates use its square (M = 2, so exponent 20); the
g-orthogonality right side uses the tenth power (exponent 100).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis_core import (
    SampledFunction,
    chi_tilde,
    inner_product,
    maximal_function,
    wave_packet,
)
from .geometry import (
    DyadicInterval,
    FrequencySquare,
    TileCollection,
    TriTile,
    dyadic_disjoint,
    is_subinterval,
)
from .operators import SequenceH

CHI_M = 2  # fixed weight power: chi_tilde exponent 10 * CHI_M = 20


def _check_members(top: TriTile, members: Sequence[TriTile], freq_index: int) -> None:
    other = 3 - freq_index  # 1 <-> 2
    top_freq = top.freq_component(freq_index)
    for s in members:
        if not is_subinterval(s.spatial, top.spatial):
            raise ValueError(f"member {s} not spatially inside top {top}")
        if not is_subinterval(top_freq, s.freq_component(freq_index)):
            raise ValueError(
                f"member {s} does not contain the top frequency {top_freq}"
            )
    # Complementary components of distinct squares are pairwise disjoint.
    seen: list[TriTile] = []
    for s in members:
        for t in seen:
            if s.square != t.square and not dyadic_disjoint(
                s.freq_component(other), t.freq_component(other)
            ):
                raise ValueError(
                    f"complementary frequency components overlap: {s} vs {t}"
                )
        seen.append(s)


@dataclass(frozen=True)
class Column:
    """Tiles with I_s inside I_top and omega_{top,1} inside omega_{s,1}."""

    top: TriTile
    members: tuple[TriTile, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(sorted(self.members)))
        _check_members(self.top, self.members, 1)

    @property
    def spatial(self) -> DyadicInterval:
        return self.top.spatial

    @property
    def measure(self) -> float:
        return self.top.spatial.length

    def squares(self) -> tuple[FrequencySquare, ...]:
        return tuple(sorted({s.square for s in self.members}))

    def top_rectangle(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (self.top.spatial, self.top.omega1)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Row:
    """Tiles with I_s inside I_top and omega_{top,2} inside omega_{s,2}."""

    top: TriTile
    members: tuple[TriTile, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(sorted(self.members)))
        _check_members(self.top, self.members, 2)

    @property
    def spatial(self) -> DyadicInterval:
        return self.top.spatial

    @property
    def measure(self) -> float:
        return self.top.spatial.length

    def squares(self) -> tuple[FrequencySquare, ...]:
        return tuple(sorted({s.square for s in self.members}))

    def top_rectangle(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (self.top.spatial, self.top.omega2)

    def __len__(self) -> int:
        return len(self.members)


def maximal_column(tiles: TileCollection, top: TriTile) -> Column:
    """All tiles of the collection spatially inside the top whose first
    component contains the top's; the top itself need not belong."""
    members = [
        s
        for s in tiles
        if is_subinterval(s.spatial, top.spatial)
        and is_subinterval(top.omega1, s.omega1)
    ]
    return Column(top, tuple(members))


def maximal_row(tiles: TileCollection, top: TriTile) -> Row:
    members = [
        s
        for s in tiles
        if is_subinterval(s.spatial, top.spatial)
        and is_subinterval(top.omega2, s.omega2)
    ]
    return Row(top, tuple(members))


def _rectangles_disjoint(
    a: tuple[DyadicInterval, DyadicInterval], b: tuple[DyadicInterval, DyadicInterval]
) -> bool:
    return dyadic_disjoint(a[0], b[0]) or dyadic_disjoint(a[1], b[1])


def mutually_disjoint(family: Sequence[Column] | Sequence[Row]) -> bool:
    """Pairwise disjoint member sets AND pairwise disjoint top rectangles
    (spatial x defining frequency component)."""
    seen_tiles: set[TriTile] = set()
    for col in family:
        for s in col.members:
            if s in seen_tiles:
                return False
            seen_tiles.add(s)
    rects = [col.top_rectangle() for col in family]
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if not _rectangles_disjoint(rects[i], rects[j]):
                return False
    return True


# ---------------------------------------------------------------------------
# Pairing values and the h-factor
# ---------------------------------------------------------------------------


def pairing_value(f: SampledFunction, tile: TriTile, j: int) -> float:
    """|<f, phi_{s_j}>| / |I_s|^{1/2}."""
    pkt = wave_packet(f.grid, tile, j)
    return abs(inner_product(f, pkt.sampled)) / math.sqrt(tile.spatial.length)


def h_factor(
    h: SequenceH,
    squares: Sequence[FrequencySquare],
    window: DyadicInterval,
    r: float,
    chi_m: int = CHI_M,
) -> float:
    """The averaged maximal-function factor over a spatial window:

        ( |I|^{-1} * integral over I of
            sum_omega M(h_omega * chi_I^(10*chi_m))^{r'} )^{1/r'}
    """
    rp = r / (r - 1.0)
    grid = h.grid
    weight = chi_tilde(window, grid.points, 10 * chi_m)
    mask = (grid.points >= window.left) & (grid.points < window.right)
    total = 0.0
    for sq in sorted(set(squares)):
        mx = maximal_function(SampledFunction(grid, h[sq].values * weight))
        total += float(np.sum(mx.values.real[mask] ** rp))
    total *= grid.spacing / window.length
    return total ** (1.0 / rp)


# ---------------------------------------------------------------------------
# Column / row estimates
# ---------------------------------------------------------------------------


def _lambda_over(
    members: Sequence[TriTile], f: SampledFunction, g: SampledFunction, h: SequenceH
) -> complex:
    grid = f.grid
    total = 0j
    for t in sorted(members):
        p1 = wave_packet(grid, t, 1)
        p2 = wave_packet(grid, t, 2)
        p3 = wave_packet(grid, t, 3)
        total += (
            inner_product(f, p1.sampled)
            * inner_product(g, p2.sampled)
            * inner_product(p3.sampled, h[t.square])
            / math.sqrt(t.spatial.length)
        )
    return total


def column_estimate_sides(
    col: Column,
    f: SampledFunction,
    g: SampledFunction,
    h: SequenceH,
    r: float,
) -> tuple[float, float]:
    """(|Lambda over the column|, product bound).

    Bound factors: sup_s |<f,phi_1>|/|I_s|^{1/2};
    (sup_s |<g,phi_2>|/|I_s|^{1/2})^{(r-2)/r};
    (|I_t|^{-1} sum_s |<g,phi_2>|^2)^{1/r};
    the h-factor over I_t; times |I_t|.
    """
    if not col.members:
        return (0.0, 0.0)
    grid = f.grid
    lhs = abs(_lambda_over(col.members, f, g, h))
    sup_f = max(pairing_value(f, t, 1) for t in col.members)
    g_pairings = [
        abs(inner_product(g, wave_packet(grid, t, 2).sampled)) for t in col.members
    ]
    sup_g = max(
        gp / math.sqrt(t.spatial.length) for gp, t in zip(g_pairings, col.members)
    )
    l2_g = sum(gp**2 for gp in g_pairings) / col.measure
    d = h_factor(h, [t.square for t in col.members], col.top.spatial, r)
    rhs = (
        sup_f
        * sup_g ** ((r - 2.0) / r)
        * l2_g ** (1.0 / r)
        * d
        * col.measure
    )
    return (lhs, rhs)


def row_estimate_sides(
    row: Row,
    f: SampledFunction,
    g: SampledFunction,
    h: SequenceH,
    r: float,
) -> tuple[float, float]:
    """Mirror image of the column estimate: f and g swap roles."""
    if not row.members:
        return (0.0, 0.0)
    grid = f.grid
    lhs = abs(_lambda_over(row.members, f, g, h))
    sup_g = max(pairing_value(g, t, 2) for t in row.members)
    f_pairings = [
        abs(inner_product(f, wave_packet(grid, t, 1).sampled)) for t in row.members
    ]
    sup_f = max(
        fp / math.sqrt(t.spatial.length) for fp, t in zip(f_pairings, row.members)
    )
    l2_f = sum(fp**2 for fp in f_pairings) / row.measure
    d = h_factor(h, [t.square for t in row.members], row.top.spatial, r)
    rhs = (
        sup_g
        * sup_f ** ((r - 2.0) / r)
        * l2_f ** (1.0 / r)
        * d
        * row.measure
    )
    return (lhs, rhs)


def column_g_orthogonality(
    col: Column, g: SampledFunction
) -> tuple[float, float]:
    """Left: |I_C|^{-1} sum_s |<g,phi_2>|^2.  Right: the chi-weighted
    local L2 mass |I_C|^{-1} * integral |g|^2 chi_{I_C}^10 (exponent 100)."""
    grid = g.grid
    weight = chi_tilde(col.top.spatial, grid.points, 100)
    rhs = float(
        np.sum(np.abs(g.values) ** 2 * weight) * grid.spacing / col.measure
    )
    if not col.members:
        return (0.0, rhs)
    lhs = (
        sum(
            abs(inner_product(g, wave_packet(grid, t, 2).sampled)) ** 2
            for t in col.members
        )
        / col.measure
    )
    return (lhs, rhs)
