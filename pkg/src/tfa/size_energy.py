"""Sizes and energies of tile collections.

Sizes are exact suprema over the finite collection (with a witness).
Energies are suprema over admissible disjoint families, which is not
tractable exactly; they are computed as greedy lower bounds over a grid
of 21 dyadic threshold levels below the matching size, and the proofs'
upper bounds (against L2 / weighted norms) are the regression-tested
contracts.  Every witness family is admissible by construction and
re-verifiable post hoc.
"""

from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .analysis_core import SampledFunction, chi_tilde
from .columns_rows import (
    CHI_M,
    Column,
    Row,
    h_factor,
    maximal_column,
    maximal_row,
    pairing_value,
)
from .geometry import DyadicInterval, FrequencySquare, TileCollection, TriTile
from .operators import SequenceH

ENERGY_LEVELS = 21


@dataclass(frozen=True)
class SizeReport:
    value: float
    witness: object = None  # TriTile for f/g sizes; Column or Row for h


@dataclass(frozen=True)
class EnergyReport:
    value: float
    witness_n: int | None = None
    witness_family: tuple = ()


def pick_top(tiles: Sequence[TriTile]) -> TriTile:
    """Deterministic selection: largest spatial interval, then leftmost
    spatial interval, then leftmost omega1, then leftmost omega2."""
    return min(
        tiles,
        key=lambda t: (
            -t.spatial.scale,
            t.spatial.left,
            t.omega1.left,
            t.omega2.left,
        ),
    )


# ---------------------------------------------------------------------------
# Sizes
# ---------------------------------------------------------------------------


def size_f(tiles: TileCollection, f: SampledFunction) -> SizeReport:
    """sup over tiles of |<f, phi_1>| / |I_s|^{1/2}, with the maximizer."""
    best, witness = 0.0, None
    for t in tiles:
        v = pairing_value(f, t, 1)
        if v > best:
            best, witness = v, t
    return SizeReport(best, witness)


def size_g(tiles: TileCollection, g: SampledFunction) -> SizeReport:
    best, witness = 0.0, None
    for t in tiles:
        v = pairing_value(g, t, 2)
        if v > best:
            best, witness = v, t
    return SizeReport(best, witness)


class SizeHEvaluator:
    """Cached per-(square, window) terms of the h size functional.

    d_value(squares, window) returns the window-averaged maximal-function
    aggregate; terms are memoized so stopping-time algorithms can
    re-evaluate shrinking columns cheaply.
    """

    def __init__(self, h: SequenceH, r: float, chi_m: int = CHI_M):
        self.h = h
        self.r = float(r)
        self.rp = r / (r - 1.0)
        self.chi_m = chi_m
        self._terms: dict[tuple[FrequencySquare, DyadicInterval], float] = {}

    def term(self, sq: FrequencySquare, window: DyadicInterval) -> float:
        key = (sq, window)
        val = self._terms.get(key)
        if val is None:
            val = h_factor(self.h, (sq,), window, self.r, self.chi_m) ** self.rp
            self._terms[key] = val
        return val

    def d_value(self, squares, window: DyadicInterval) -> float:
        total = sum(self.term(sq, window) for sq in sorted(set(squares)))
        return total ** (1.0 / self.rp)

    def d_of(self, family: Column | Row) -> float:
        return self.d_value((t.square for t in family.members), family.top.spatial)


_evaluators: "weakref.WeakKeyDictionary[SequenceH, dict]" = weakref.WeakKeyDictionary()
_evaluators_lock = threading.Lock()


def h_size_evaluator(h: SequenceH, r: float, chi_m: int = CHI_M) -> SizeHEvaluator:
    with _evaluators_lock:
        per_h = _evaluators.setdefault(h, {})
        key = (float(r), chi_m)
        ev = per_h.get(key)
        if ev is None:
            ev = SizeHEvaluator(h, r, chi_m)
            per_h[key] = ev
        return ev


def size_h(tiles: TileCollection, h: SequenceH, r: float) -> SizeReport:
    """sup of the averaged maximal-function aggregate over maximal columns
    and rows with tops among the tiles.  The integrand grows with the
    family, so maximal ones are extremal."""
    ev = h_size_evaluator(h, r)
    best, witness = 0.0, None
    for t in tiles:
        col = maximal_column(tiles, t)
        v = ev.d_of(col)
        if v > best:
            best, witness = v, col
        row = maximal_row(tiles, t)
        v = ev.d_of(row)
        if v > best:
            best, witness = v, row
    return SizeReport(best, witness)


def size_upper_bound_f(tiles: TileCollection, f: SampledFunction, chi_m: int = CHI_M) -> float:
    """sup over tiles of the chi-weighted average |I_s|^{-1} * int |f| chi^{M}."""
    grid = f.grid
    best = 0.0
    seen: set[DyadicInterval] = set()
    a = np.abs(f.values)
    for t in tiles:
        iv = t.spatial
        if iv in seen:
            continue
        seen.add(iv)
        w = chi_tilde(iv, grid.points, 10 * chi_m)
        best = max(best, float(np.sum(a * w)) * grid.spacing / iv.length)
    return best


def size_upper_bound_h(
    tiles: TileCollection, h: SequenceH, r: float, chi_m: int = CHI_M
) -> float:
    """sup over tiles of the weighted local L^{r'} mass of the aggregate
    (sum_omega |h_omega|^{r'})^{1/r'}."""
    rp = r / (r - 1.0)
    grid = h.grid
    agg = h.lr_aggregate(rp)
    best = 0.0
    seen: set[DyadicInterval] = set()
    for t in tiles:
        iv = t.spatial
        if iv in seen:
            continue
        seen.add(iv)
        w = chi_tilde(iv, grid.points, 10) ** (chi_m * rp)
        val = (float(np.sum(agg**rp * w)) * grid.spacing / iv.length) ** (1.0 / rp)
        best = max(best, val)
    return best


def restrict(tiles: TileCollection, interval: DyadicInterval) -> TileCollection:
    """Tiles spatially contained in the interval."""
    return tiles.within(interval)


# ---------------------------------------------------------------------------
# Energies (greedy lower bounds with admissible witnesses)
# ---------------------------------------------------------------------------


def _greedy_family_fg(
    tiles: TileCollection,
    values: dict[TriTile, float],
    n: int,
    kind: str,
) -> tuple:
    """Disjoint columns (kind 'f') or rows (kind 'g') with top value
    >= 2^n, members capped at 2^{n+1}."""
    lo, hi = 2.0**n, 2.0 ** (n + 1)
    working = TileCollection(t for t in tiles if values[t] <= hi)
    family = []
    while True:
        cands = [t for t in working if values[t] >= lo]
        if not cands:
            break
        top = pick_top(cands)
        fam = (
            maximal_column(working, top) if kind == "f" else maximal_row(working, top)
        )
        family.append(fam)
        working = working.without(fam.members)
    return tuple(family)


def _energy_fg(tiles: TileCollection, func: SampledFunction, kind: str) -> EnergyReport:
    j = 1 if kind == "f" else 2
    values = {t: pairing_value(func, t, j) for t in tiles}
    if not values:
        return EnergyReport(0.0)
    size = max(values.values())
    if size == 0.0:
        return EnergyReport(0.0)
    n_hi = math.floor(math.log2(size))
    best = EnergyReport(0.0)
    for n in range(n_hi, n_hi - ENERGY_LEVELS, -1):
        family = _greedy_family_fg(tiles, values, n, kind)
        if not family:
            continue
        val = 2.0**n * math.sqrt(sum(c.measure for c in family))
        if val > best.value:
            best = EnergyReport(val, n, family)
    return best


def energy_f(tiles: TileCollection, f: SampledFunction) -> EnergyReport:
    """Greedy lower bound for the column energy of f."""
    return _energy_fg(tiles, f, "f")


def energy_g(tiles: TileCollection, g: SampledFunction) -> EnergyReport:
    """Greedy lower bound for the row energy of g."""
    return _energy_fg(tiles, g, "g")


def _greedy_family_h(
    tiles: TileCollection,
    ev: SizeHEvaluator,
    threshold: float,
    kind: str,
) -> tuple[tuple, TileCollection]:
    """Disjoint columns (or rows) whose averaged aggregate exceeds the
    threshold; reruns of the functional use the shrinking working set.
    Returns (family, residual)."""
    builder: Callable = maximal_column if kind == "column" else maximal_row
    working = tiles
    # Tops whose full-collection family already misses the threshold can
    # never qualify later (the functional is monotone in the family).
    prefiltered = [
        t for t in tiles if ev.d_of(builder(tiles, t)) >= threshold
    ]
    family = []
    while True:
        cands = [
            t
            for t in prefiltered
            if t in working and ev.d_of(builder(working, t)) >= threshold
        ]
        if not cands:
            break
        top = pick_top(cands)
        fam = builder(working, top)
        family.append(fam)
        working = working.without(fam.members)
    return tuple(family), working


def energy_h(tiles: TileCollection, h: SequenceH, r: float) -> EnergyReport:
    """Greedy lower bound for the h energy: disjoint columns plus disjoint
    rows above a common threshold 2^n, aggregated by the sum of top
    measures raised to 1/r'."""
    ev = h_size_evaluator(h, r)
    rp = r / (r - 1.0)
    size = size_h(tiles, h, r).value
    if size == 0.0 or len(tiles) == 0:
        return EnergyReport(0.0)
    n_hi = math.floor(math.log2(size))
    best = EnergyReport(0.0)
    for n in range(n_hi, n_hi - ENERGY_LEVELS, -1):
        thr = 2.0**n
        cols, rest = _greedy_family_h(tiles, ev, thr, "column")
        rows, _ = _greedy_family_h(rest, ev, thr, "row")
        family = cols + rows
        if not family:
            continue
        val = 2.0**n * sum(c.measure for c in family) ** (1.0 / rp)
        if val > best.value:
            best = EnergyReport(val, n, family)
    return best


# ---------------------------------------------------------------------------
# Witness verification (used by the property suites)
# ---------------------------------------------------------------------------


def verify_energy_witness_fg(
    report: EnergyReport, func: SampledFunction, kind: str
) -> bool:
    """Thresholds of the defining admissibility, re-checked exactly."""
    if report.witness_n is None:
        return report.value == 0.0
    lo, hi = 2.0**report.witness_n, 2.0 ** (report.witness_n + 1)
    j = 1 if kind == "f" else 2
    for fam in report.witness_family:
        if pairing_value(func, fam.top, j) < lo:
            return False
        for t in fam.members:
            if pairing_value(func, t, j) > hi:
                return False
    return True


def verify_energy_witness_h(report: EnergyReport, h: SequenceH, r: float) -> bool:
    if report.witness_n is None:
        return report.value == 0.0
    ev = h_size_evaluator(h, r)
    lo = 2.0**report.witness_n
    return all(ev.d_of(fam) >= lo for fam in report.witness_family)
