"""Stopping-time decompositions and the generic size/energy bound.

decompose_f / decompose_g / decompose_h peel mutually disjoint columns
(rows) off a collection until the matching size drops below half its
entry threshold; `split` iterates all three over decreasing thresholds
and yields an exact partition of the collection into per-level column
and row families.  `generic_bound` evaluates the two-term size/energy
majorant for the trilinear form at a chosen exponent splitting.

Selection order everywhere: largest spatial interval first, ties broken
by leftmost spatial interval, then leftmost omega1, then leftmost
omega2 — fixed so reports are byte-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .analysis_core import SampledFunction, chi_tilde
from .columns_rows import Column, Row, maximal_column, maximal_row, pairing_value
from .geometry import DyadicInterval, TileCollection, TriTile
from .operators import SequenceH
from .size_energy import SizeHEvaluator, h_size_evaluator, pick_top


def alpha(r: float) -> float:
    """The interpolation gap 1/2 - 1/r; positive for r > 2."""
    if not r > 2:
        raise ValueError(f"r must exceed 2, got {r}")
    return 0.5 - 1.0 / r


class PreconditionError(ValueError):
    def __init__(self, message: str, offender: TriTile | None = None):
        super().__init__(message)
        self.offender = offender


@dataclass(frozen=True)
class Partition:
    """Result of one stopping-time pass: residual tiles plus the
    extracted disjoint families (columns, rows, or columns then rows)."""

    residual: TileCollection
    extracted: tuple
    level: int
    kind: str  # "f" | "g" | "h"

    def extracted_tiles(self) -> list[TriTile]:
        out: list[TriTile] = []
        for fam in self.extracted:
            out.extend(fam.members)
        return out

    def top_measure(self, family_type=None) -> float:
        return sum(
            fam.measure
            for fam in self.extracted
            if family_type is None or isinstance(fam, family_type)
        )

    def report(self) -> str:
        """Structured text: one line per extracted family."""
        lines = [
            f"partition kind={self.kind} level={self.level} "
            f"residual={len(self.residual)} extracted={len(self.extracted)}"
        ]
        for fam in self.extracted:
            tag = "column" if isinstance(fam, Column) else "row"
            t = fam.top
            lines.append(
                f"{tag} top=({t.spatial.scale},{t.spatial.position}|"
                f"{t.square.scale},{t.square.omega1.position},{t.square.omega2.position}) "
                f"members={len(fam.members)} measure={fam.measure:.17g}"
            )
        return "\n".join(lines) + "\n"


def _greedy_extract_fg(
    tiles: TileCollection,
    values: dict[TriTile, float],
    threshold: float,
    kind: str,
):
    """Extract maximal columns (kind 'f') or rows (kind 'g') rooted at
    tiles exceeding the threshold, largest first."""
    working = tiles
    family = []
    while True:
        cands = [t for t in working if values[t] > threshold]
        if not cands:
            break
        top = pick_top(cands)
        fam = maximal_column(working, top) if kind == "f" else maximal_row(working, top)
        family.append(fam)
        working = working.without(fam.members)
    return tuple(family), working


def decompose_f(
    tiles: TileCollection, n0: int, e1: float, f: SampledFunction
) -> Partition:
    """Peel disjoint columns until size_f <= 2^{-n0-1} * e1.

    Requires size_f(tiles) <= 2^{-n0} * e1 on entry; the extracted top
    measures obey the energy bound sum |I_C| <~ 2^{2 n0}.
    """
    values = {t: pairing_value(f, t, 1) for t in tiles}
    _check_precondition(values, 2.0 ** (-n0) * e1, "f")
    family, residual = _greedy_extract_fg(tiles, values, 2.0 ** (-n0 - 1) * e1, "f")
    return Partition(residual, family, n0, "f")


def decompose_g(
    tiles: TileCollection, n0: int, e2: float, g: SampledFunction
) -> Partition:
    """Mirror image of decompose_f with rows."""
    values = {t: pairing_value(g, t, 2) for t in tiles}
    _check_precondition(values, 2.0 ** (-n0) * e2, "g")
    family, residual = _greedy_extract_fg(tiles, values, 2.0 ** (-n0 - 1) * e2, "g")
    return Partition(residual, family, n0, "g")


def _check_precondition(values: dict, bound: float, kind: str) -> None:
    for t, v in values.items():
        if v > bound * (1.0 + 1e-12):
            raise PreconditionError(
                f"size precondition violated for {kind}: tile {t} has pairing "
                f"value {v:.6g} > {bound:.6g}",
                offender=t,
            )


def _greedy_extract_h(
    tiles: TileCollection, ev: SizeHEvaluator, threshold: float, kind: str
):
    builder = maximal_column if kind == "column" else maximal_row
    working = tiles
    prefiltered = [t for t in tiles if ev.d_of(builder(tiles, t)) > threshold]
    family = []
    while True:
        cands = [
            t
            for t in prefiltered
            if t in working and ev.d_of(builder(working, t)) > threshold
        ]
        if not cands:
            break
        top = pick_top(cands)
        fam = builder(working, top)
        family.append(fam)
        working = working.without(fam.members)
    return tuple(family), working


def decompose_h(
    tiles: TileCollection, n0: int, e3: float, h: SequenceH, r: float
) -> Partition:
    """Peel columns exceeding 2^{-n0-1} e3 first, then rows (column
    priority follows the extraction order of the size functional)."""
    ev = h_size_evaluator(h, r)
    entry = 2.0 ** (-n0) * e3
    for t in tiles:
        v = max(ev.d_of(maximal_column(tiles, t)), ev.d_of(maximal_row(tiles, t)))
        if v > entry * (1.0 + 1e-12):
            raise PreconditionError(
                f"size precondition violated for h: top {t} reaches {v:.6g} > {entry:.6g}",
                offender=t,
            )
    threshold = 2.0 ** (-n0 - 1) * e3
    cols, rest = _greedy_extract_h(tiles, ev, threshold, "column")
    rows, residual = _greedy_extract_h(rest, ev, threshold, "row")
    return Partition(residual, cols + rows, n0, "h")


# ---------------------------------------------------------------------------
# Global splitting
# ---------------------------------------------------------------------------


@dataclass
class SplitLevel:
    n: int
    columns: tuple = ()
    rows: tuple = ()
    size_caps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sizes_entering: tuple[float, float, float] = (0.0, 0.0, 0.0)
    h_levels_used: tuple[int, ...] = ()

    def tiles(self) -> list[TriTile]:
        out: list[TriTile] = []
        for fam in self.columns + self.rows:
            out.extend(fam.members)
        return out

    def column_measure(self) -> float:
        return sum(c.measure for c in self.columns)

    def row_measure(self) -> float:
        return sum(c.measure for c in self.rows)


@dataclass
class Splitting:
    levels: list[SplitLevel] = field(default_factory=list)
    overflow: SplitLevel | None = None
    energies: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sizes: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def all_tiles(self) -> list[TriTile]:
        out: list[TriTile] = []
        for lv in self.levels:
            out.extend(lv.tiles())
        if self.overflow is not None:
            out.extend(self.overflow.tiles())
        return out

    def report(self) -> str:
        lines = [
            f"splitting levels={len(self.levels)} "
            f"overflow={'yes' if self.overflow and (self.overflow.columns or self.overflow.rows) else 'no'}"
        ]
        for lv in self.levels + ([self.overflow] if self.overflow else []):
            lines.append(
                f"level n={lv.n} columns={len(lv.columns)} rows={len(lv.rows)} "
                f"col_measure={lv.column_measure():.17g} row_measure={lv.row_measure():.17g}"
            )
            for fam in lv.columns + lv.rows:
                tag = "column" if isinstance(fam, Column) else "row"
                t = fam.top
                lines.append(
                    f"  {tag} top=({t.spatial.scale},{t.spatial.position}|"
                    f"{t.square.scale},{t.square.omega1.position},{t.square.omega2.position}) "
                    f"members={len(fam.members)} measure={fam.measure:.17g}"
                )
        return "\n".join(lines) + "\n"


def _extract_all_as_columns(tiles: TileCollection):
    """Threshold-free greedy column extraction; partitions any collection
    into mutually disjoint columns."""
    working = tiles
    family = []
    while len(working) > 0:
        top = pick_top(list(working))
        fam = maximal_column(working, top)
        family.append(fam)
        working = working.without(fam.members)
    return tuple(family)


def split(
    tiles: TileCollection,
    f: SampledFunction,
    g: SampledFunction,
    h: SequenceH,
    r: float,
    levels: int = 21,
) -> Splitting:
    """Simultaneous stopping-time splitting of a tile collection.

    Per level n the residual obeys the caps min(2^-n E1, S1),
    min(2^-n E2, S2), min(2^(-2n/r') E3, S3); level n's families are
    extracted while all three caps for n hold, and the h passes run the
    achieved h threshold down to ceil(2(n+1)/r') at the end of level n
    so the next level's h cap is met on entry.  Tiles never reached by
    any threshold (down 21 levels) land in a final overflow level,
    extracted threshold-free.
    """
    from .size_energy import energy_f, energy_g, energy_h, size_f, size_g, size_h

    rp = r / (r - 1.0)
    s1, s2 = size_f(tiles, f).value, size_g(tiles, g).value
    s3 = size_h(tiles, h, r).value
    e1, e2 = energy_f(tiles, f).value, energy_g(tiles, g).value
    e3 = energy_h(tiles, h, r).value
    out = Splitting(energies=(e1, e2, e3), sizes=(s1, s2, s3))

    def h_target(n: int) -> int:
        return math.ceil(2.0 * n / rp)

    nf = math.floor(math.log2(e1 / s1)) if s1 > 0 else None
    ng = math.floor(math.log2(e2 / s2)) if s2 > 0 else None
    mh = math.floor(math.log2(e3 / s3)) if s3 > 0 else None
    starts = []
    if nf is not None:
        starts.append(nf)
    if ng is not None:
        starts.append(ng)
    if mh is not None:
        # first outer level whose h target exceeds the starting level
        n = math.floor(mh * rp / 2.0) - 2
        while h_target(n + 1) <= mh:
            n += 1
        starts.append(n)
    working = tiles
    if starts:
        n_start = min(starts)
        for n in range(n_start, n_start + levels):
            lv = SplitLevel(
                n=n,
                size_caps=(
                    min(2.0**-n * e1, s1) if s1 > 0 else 0.0,
                    min(2.0**-n * e2, s2) if s2 > 0 else 0.0,
                    min(2.0 ** (-2.0 * n / rp) * e3, s3) if s3 > 0 else 0.0,
                ),
                sizes_entering=(
                    size_f(working, f).value,
                    size_g(working, g).value,
                    size_h(working, h, r).value,
                ),
            )
            cols: list = []
            rows: list = []
            if nf is not None and n >= nf:
                part = decompose_f(working, n, e1, f)
                cols.extend(part.extracted)
                working = part.residual
            if ng is not None and n >= ng:
                part = decompose_g(working, n, e2, g)
                rows.extend(part.extracted)
                working = part.residual
            used = []
            if mh is not None:
                while mh < h_target(n + 1):
                    part = decompose_h(working, mh, e3, h, r)
                    cols.extend(c for c in part.extracted if isinstance(c, Column))
                    rows.extend(c for c in part.extracted if isinstance(c, Row))
                    working = part.residual
                    used.append(mh)
                    mh += 1
            lv.columns, lv.rows, lv.h_levels_used = tuple(cols), tuple(rows), tuple(used)
            out.levels.append(lv)
            if len(working) == 0:
                break
    if len(working) > 0:
        last_n = out.levels[-1].n + 1 if out.levels else 0
        out.overflow = SplitLevel(n=last_n, columns=_extract_all_as_columns(working))
    return out


# ---------------------------------------------------------------------------
# Generic estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenericBoundInputs:
    """Sizes, energies, simplex weights and the two windowed set averages
    feeding the two-term majorant."""

    s1: float
    e1: float
    s2: float
    e2: float
    s3: float
    e3: float
    theta: tuple[float, float, float]
    beta: tuple[float, float, float]
    sup_avg_g: float  # (sup_s |I_s|^-1 int 1_G chi^100)-average for term 1
    sup_avg_f: float  # same with 1_F for term 2

    def validate(self, r: float) -> None:
        a = alpha(r)
        for name, w in (("theta", self.theta), ("beta", self.beta)):
            if abs(sum(w) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {w}")
        cap1 = min(1.0, 1.0 / (4.0 * a))
        t, b = self.theta, self.beta
        checks = [
            (0.0 <= t[0] <= cap1 + 1e-12, "theta1"),
            (0.0 <= b[1] <= cap1 + 1e-12, "beta2"),
            (0.0 <= t[1] <= 0.5 + 1e-12, "theta2"),
            (0.0 <= b[0] <= 0.5 + 1e-12, "beta1"),
            (0.0 < t[2] <= 1.0 + 1e-12, "theta3"),
            (0.0 < b[2] <= 1.0 + 1e-12, "beta3"),
        ]
        for ok, name in checks:
            if not ok:
                raise ValueError(f"exponent constraint violated for {name}")


def _pow(base: float, expo: float) -> float:
    if expo == 0.0:
        return 1.0
    if base == 0.0:
        return 0.0 if expo > 0 else math.inf
    return base**expo


def generic_bound(inputs: GenericBoundInputs, r: float) -> float:
    """The two-term size/energy majorant of the trilinear form."""
    inputs.validate(r)
    a = alpha(r)
    rp = r / (r - 1.0)
    t, b = inputs.theta, inputs.beta
    term1 = (
        _pow(inputs.sup_avg_g, 1.0 / r)
        * _pow(inputs.s1, 4 * a * t[0])
        * _pow(inputs.e1, 1 - 4 * a * t[0])
        * _pow(inputs.s2, 4 * a * t[1])
        * _pow(inputs.e2, 2 * a - 4 * a * t[1])
        * _pow(inputs.s3, (rp / 2) * 4 * a * t[2])
        * _pow(inputs.e3, 1 - (rp / 2) * 4 * a * t[2])
    )
    term2 = (
        _pow(inputs.sup_avg_f, 1.0 / r)
        * _pow(inputs.s1, 4 * a * b[0])
        * _pow(inputs.e1, 2 * a - 4 * a * b[0])
        * _pow(inputs.s2, 4 * a * b[1])
        * _pow(inputs.e2, 1 - 4 * a * b[1])
        * _pow(inputs.s3, (rp / 2) * 4 * a * b[2])
        * _pow(inputs.e3, 1 - (rp / 2) * 4 * a * b[2])
    )
    return term1 + term2


def sup_average(
    tiles: TileCollection, set_values: np.ndarray, grid, chi_exponent: int = 1000
) -> float:
    """sup over tiles of |I_s|^{-1} * int 1_E * chi_{I_s}^{100}; the
    weight is the 100th power of the base weight (exponent 1000)."""
    best = 0.0
    seen: set[DyadicInterval] = set()
    vals = np.asarray(set_values, dtype=float)
    for t in tiles:
        iv = t.spatial
        if iv in seen:
            continue
        seen.add(iv)
        w = chi_tilde(iv, grid.points, chi_exponent)
        best = max(best, float(np.sum(vals * w)) * grid.spacing / iv.length)
    return best
