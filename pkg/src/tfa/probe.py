"""Restricted-type experiment engine.

Given indicator-dominated inputs on measurable sets, the probe removes
an exceptional superlevel set of the maximal functions, stratifies the
tile collection by distance to its complement, evaluates the trilinear
form per stratum, and reports the ratio against the product of set
measures raised to the dual exponents.

h construction: per-square weights w with sum w^{r'} = 1 saturate the
ell^{r'} budget on the major set.  The default weights are uniform and
nonnegative; the "aligned" mode keeps |h_omega| identical but rotates
each h_omega to the phase of the per-square model sum, which is the
adversarial admissible choice (the restricted-type inequality
quantifies over every admissible h).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .analysis_core import Grid, SampledFunction, maximal_function
from .geometry import (
    DyadicInterval,
    SquareCollection,
    TileCollection,
    TriTile,
    square,
)
from .operators import (
    ExponentTuple,
    SequenceH,
    model_inner_sum,
    tiles_for_omega,
    trilinear_form,
)

SCHEMA_VERSION = 1


def set_measure(mask: np.ndarray, grid: Grid) -> float:
    return float(np.count_nonzero(mask)) * grid.spacing


def interval_mask(grid: Grid, left: float, right: float) -> np.ndarray:
    return (grid.points >= left) & (grid.points < right)


# ---------------------------------------------------------------------------
# Exceptional set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExceptionalSet:
    mask: np.ndarray
    constant: float
    measure: float


def exceptional_set(
    grid: Grid,
    f_mask: np.ndarray,
    g_mask: np.ndarray,
    c_start: float = 4.0,
    max_measure: float = 0.5,
) -> ExceptionalSet:
    """Union of maximal-function superlevel sets of the two indicators,
    with the constant doubled until the measure drops below
    `max_measure` (so removing it from a unit-measure set leaves a major
    subset)."""
    mf = set_measure(f_mask, grid)
    mg = set_measure(g_mask, grid)
    if mf <= 0 or mg <= 0:
        raise ValueError("degenerate sets: F and G must have positive measure")
    max_f = maximal_function(SampledFunction(grid, f_mask.astype(complex))).values.real
    max_g = maximal_function(SampledFunction(grid, g_mask.astype(complex))).values.real
    c = float(c_start)
    while True:
        mask = (max_f > c * mf) | (max_g > c * mg)
        measure = set_measure(mask, grid)
        if measure < max_measure:
            return ExceptionalSet(mask, c, measure)
        c *= 2.0


# ---------------------------------------------------------------------------
# Distance stratification
# ---------------------------------------------------------------------------


def _interval_distance_to_points(iv: DyadicInterval, points: np.ndarray) -> float:
    if points.size == 0:
        return math.inf
    d = np.maximum(np.maximum(iv.left - points, points - iv.right), 0.0)
    return float(d.min())


def stratum_index(tile: TriTile, complement_points: np.ndarray) -> int:
    dist = _interval_distance_to_points(tile.spatial, complement_points)
    ratio = 1.0 + dist / tile.spatial.length
    return int(math.floor(math.log2(ratio)))


def stratify(
    tiles: TileCollection, exceptional_mask: np.ndarray, grid: Grid
) -> dict[int, TileCollection]:
    """Partition tiles by the dyadic band of 1 + dist(I_s, E^c)/|I_s|.

    Band 0 contains every tile meeting the complement of the exceptional
    set; the bands partition the collection exactly."""
    complement = grid.points[~exceptional_mask]
    buckets: dict[int, list[TriTile]] = {}
    for t in tiles:
        buckets.setdefault(stratum_index(t, complement), []).append(t)
    return {d: TileCollection(ts) for d, ts in sorted(buckets.items())}


# ---------------------------------------------------------------------------
# Stopping-time interval selection
# ---------------------------------------------------------------------------


@dataclass
class IntervalSelection:
    """Output of the selection algorithm: per band n the chosen maximal
    intervals with their tile buckets, plus a floor bucket for tiles
    whose averages vanish."""

    buckets: dict[int, list[tuple[DyadicInterval, TileCollection]]]
    floor_tiles: TileCollection
    kind: str

    def all_tiles(self) -> list[TriTile]:
        out = list(self.floor_tiles)
        for pairs in self.buckets.values():
            for _, tc in pairs:
                out.extend(tc)
        return out

    def intervals_at(self, n: int) -> list[DyadicInterval]:
        return [iv for iv, _ in self.buckets.get(n, [])]


def _weight_average(
    weight: np.ndarray, grid: Grid, iv: DyadicInterval, chi_exponent: float
) -> float:
    x = grid.points
    dist = np.maximum(np.maximum(iv.left - x, x - iv.right), 0.0)
    w = (1.0 + dist / iv.length) ** (-chi_exponent)
    return float(np.sum(weight * w)) * grid.spacing / iv.length


def select_intervals(
    tiles: TileCollection,
    weight: np.ndarray,
    grid: Grid,
    kind: str = "f",
    r: float = 4.0,
    chi_m: int = 2,
) -> IntervalSelection:
    """Greedy maximal-interval selection against dyadic averages.

    kind "f"/"g": averages |I|^{-1} int w * chi_I (exponent 10);
    kind "h": averages |I|^{-1} int w * chi_I^{M r'} (exponent 10*M*r').
    Band n holds averages in (2^{-n-1}, 2^{-n}]; bands are processed in
    ascending n, and within a band maximal intervals first (longest,
    then leftmost), so the selected intervals of one band are pairwise
    disjoint.  Every tile is assigned exactly once; tiles whose every
    candidate interval has average zero land in the floor bucket.
    """
    if kind in ("f", "g"):
        expo = 10.0
    elif kind == "h":
        expo = 10.0 * chi_m * (r / (r - 1.0))
    else:
        raise ValueError(f"kind must be f, g or h, got {kind}")
    weight = np.asarray(weight, dtype=float)
    if np.any(weight < 0):
        raise ValueError("weight must be nonnegative")

    # Candidate intervals: spatial intervals and their dyadic ancestors up
    # to the grid period.
    j_cap = math.floor(math.log2(grid.period))
    candidates: set[DyadicInterval] = set()
    for t in tiles:
        iv = t.spatial
        candidates.add(iv)
        while iv.scale < j_cap:
            iv = iv.parent()
            candidates.add(iv)
    averages = {
        iv: _weight_average(weight, grid, iv, expo) for iv in candidates
    }
    by_band: dict[int, list[DyadicInterval]] = {}
    for iv, avg in averages.items():
        if avg <= 0.0:
            continue
        n = math.floor(-math.log2(avg))
        by_band.setdefault(n, []).append(iv)

    working = set(tiles)
    buckets: dict[int, list[tuple[DyadicInterval, TileCollection]]] = {}
    for n in sorted(by_band):
        if not working:
            break
        chosen: list[tuple[DyadicInterval, TileCollection]] = []
        for iv in sorted(by_band[n], key=lambda i: (-i.scale, i.left)):
            grabbed = [t for t in working if _tile_inside(t, iv)]
            if not grabbed:
                continue
            working.difference_update(grabbed)
            chosen.append((iv, TileCollection(grabbed)))
        if chosen:
            buckets[n] = chosen
    return IntervalSelection(buckets, TileCollection(working), kind)


def _tile_inside(t: TriTile, iv: DyadicInterval) -> bool:
    from .geometry import is_subinterval

    return is_subinterval(t.spatial, iv)


# ---------------------------------------------------------------------------
# Restricted triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestrictedTriple:
    """Indicator-dominated inputs over measurable grid sets, with the
    major subset already carved out."""

    grid: Grid
    f_mask: np.ndarray
    g_mask: np.ndarray
    h_mask: np.ndarray
    major_mask: np.ndarray
    f: SampledFunction
    g: SampledFunction
    h: SequenceH
    r: float

    def verify(self, h_tolerance: float = 1e-9) -> None:
        if abs(set_measure(self.h_mask, self.grid) - 1.0) > self.grid.spacing / 2:
            raise ValueError("H must have measure 1 after normalization")
        if set_measure(self.major_mask, self.grid) <= 0.5 * set_measure(
            self.h_mask, self.grid
        ):
            raise ValueError("major subset lost more than half of H")
        if np.any(np.abs(self.f.values) > self.f_mask + 1e-12):
            raise ValueError("f is not dominated by 1_F")
        if np.any(np.abs(self.g.values) > self.g_mask + 1e-12):
            raise ValueError("g is not dominated by 1_G")
        rp = self.r / (self.r - 1.0)
        agg = self.h.lr_aggregate(rp)
        if np.any(agg > self.major_mask + h_tolerance):
            raise ValueError("h aggregate is not dominated by 1_{H'}")


def make_restricted_triple(
    grid: Grid,
    f_mask: np.ndarray,
    g_mask: np.ndarray,
    h_mask: np.ndarray,
    squares: Sequence,
    r: float,
    exc: ExceptionalSet,
    h_values: Mapping | None = None,
    fg_values: tuple[np.ndarray, np.ndarray] | None = None,
) -> RestrictedTriple:
    """f = 1_F, g = 1_G (or supplied dominated values); by default
    h_omega = w * 1_{H'} with uniform weights saturating the ell^{r'}
    budget.  Explicit per-square h arrays (already cut to the major set
    and budget-dominated) may be supplied instead."""
    squares = tuple(sorted(squares))
    if not squares:
        raise ValueError("need at least one frequency square")
    major = h_mask & ~exc.mask
    rp = r / (r - 1.0)
    if h_values is None:
        w = float(len(squares)) ** (-1.0 / rp)
        base = w * major.astype(complex)
        entries = {sq: SampledFunction(grid, base) for sq in squares}
    else:
        entries = {sq: SampledFunction(grid, h_values[sq]) for sq in squares}
    if fg_values is None:
        f_vals = f_mask.astype(complex)
        g_vals = g_mask.astype(complex)
    else:
        f_vals, g_vals = fg_values
    triple = RestrictedTriple(
        grid,
        f_mask.astype(float),
        g_mask.astype(float),
        h_mask.astype(float),
        major,
        SampledFunction(grid, f_vals),
        SampledFunction(grid, g_vals),
        SequenceH(entries),
        r,
    )
    triple.verify()
    return triple


def _adversarial_h(
    grid: Grid,
    tiles: TileCollection,
    squares: Sequence,
    major: np.ndarray,
    f_vals: np.ndarray,
    g_vals: np.ndarray,
    r: float,
    mode: str,
) -> dict:
    """Budget-saturating h choices driven by the per-square model sums.

    "aligned": uniform weights rotated to each sum's phase.
    "extremal": pointwise Hoelder-optimal weights |u|^{r-1}-shaped, the
    exact maximizer of the form over the admissible h.
    """
    rp = r / (r - 1.0)
    f0 = SampledFunction(grid, f_vals)
    g0 = SampledFunction(grid, g_vals)
    sums = {
        sq: model_inner_sum(f0, g0, tiles.tiles_for_square(sq)) for sq in squares
    }
    out: dict = {}
    if mode == "aligned":
        w = float(len(squares)) ** (-1.0 / rp)
        for sq, u in sums.items():
            mag = np.abs(u)
            phase = np.where(mag > 0, u / np.where(mag > 0, mag, 1.0), 1.0)
            out[sq] = w * major.astype(complex) * phase
        return out
    if mode == "extremal":
        agg_r = np.zeros(grid.num_points)
        for u in sums.values():
            agg_r += np.abs(u) ** r
        agg = agg_r ** (1.0 / r)
        denom = np.where(agg > 0, agg ** (r / rp), 1.0)
        for sq, u in sums.items():
            mag = np.abs(u)
            phase = np.where(mag > 0, u / np.where(mag > 0, mag, 1.0), 1.0)
            out[sq] = major * (mag ** (r - 1.0) / denom) * phase
        return out
    raise ValueError(f"unknown h_mode {mode!r}")


# ---------------------------------------------------------------------------
# Probe reports
# ---------------------------------------------------------------------------


@dataclass
class ProbeReport:
    key: str
    p: float
    q: float
    s: float
    s_dual: float
    r: float
    nu: tuple[float, float, float] | None
    measure_f: float
    measure_g: float
    measure_h: float
    measure_major: float
    exceptional_constant: float
    exceptional_measure: float
    per_d: list[tuple[int, float]]
    lambda_abs: float
    ratio: float
    num_squares: int
    num_tiles: int
    h_mode: str
    seed: int | None
    wall_time_s: float
    envelope_nonincreasing: bool = False
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        data = dict(self.__dict__)
        data["per_d"] = [[int(d), float(v)] for d, v in self.per_d]
        data["nu"] = list(self.nu) if self.nu is not None else None
        return json.dumps(data, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProbeReport":
        data = json.loads(text)
        data["per_d"] = [(int(d), float(v)) for d, v in data["per_d"]]
        if data.get("nu") is not None:
            data["nu"] = tuple(data["nu"])
        return cls(**data)


# The CSV summary carries only deterministic fields (wall time lives in
# the per-run JSON), so sweep summaries are byte-identical across reruns.
CSV_HEADER = (
    "key,num_squares,num_tiles,p,q,s_dual,r,h_mode,measure_f,measure_g,"
    "measure_h,measure_major,lambda_abs,ratio,exceptional_constant"
)


def summarize_csv(reports: Iterable[ProbeReport]) -> str:
    lines = [CSV_HEADER]
    for rep in reports:
        lines.append(
            f"{rep.key},{rep.num_squares},{rep.num_tiles},{rep.p:.17g},"
            f"{rep.q:.17g},{rep.s_dual:.17g},{rep.r:.17g},{rep.h_mode},"
            f"{rep.measure_f:.17g},{rep.measure_g:.17g},{rep.measure_h:.17g},"
            f"{rep.measure_major:.17g},{rep.lambda_abs:.17g},{rep.ratio:.17g},"
            f"{rep.exceptional_constant:.17g}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# The probe
# ---------------------------------------------------------------------------


def restricted_probe(
    tiles: TileCollection,
    grid: Grid,
    exponents: ExponentTuple,
    f_mask: np.ndarray,
    g_mask: np.ndarray,
    h_mask: np.ndarray,
    nu: tuple[float, float, float] | None = None,
    h_mode: str = "uniform",
    key: str = "probe",
    seed: int | None = None,
    modulation: tuple[float, float] = (0.0, 0.0),
) -> ProbeReport:
    """Full restricted-type experiment on a tile collection.

    Builds the exceptional set and the major subset, saturating h
    (uniform weights, phase-aligned, or pointwise extremal), verifies
    the domination constraints, stratifies by distance, and measures
    |Lambda| against |F|^{1/p} |G|^{1/q} |H|^{1/s'}.

    `modulation` shifts the spectra of f and g (|f| = 1_F is unchanged,
    so domination still holds); useful for steering the mass into a
    prescribed frequency box.
    """
    t0 = time.perf_counter()
    if nu is not None and abs(sum(nu) - 1.0) > 1e-9:
        raise ValueError("nu must sum to 1")
    r = float(exponents.r)
    exc = exceptional_set(grid, f_mask, g_mask)
    squares = tiles.squares()
    mod_f = np.exp(2j * np.pi * modulation[0] * grid.points)
    mod_g = np.exp(2j * np.pi * modulation[1] * grid.points)
    f_vals = f_mask.astype(complex) * mod_f
    g_vals = g_mask.astype(complex) * mod_g
    h_values = None
    if h_mode in ("aligned", "extremal"):
        major = h_mask & ~exc.mask
        h_values = _adversarial_h(
            grid, tiles, squares, major, f_vals, g_vals, r, h_mode
        )
    elif h_mode != "uniform":
        raise ValueError(f"unknown h_mode {h_mode!r}")
    triple = make_restricted_triple(
        grid, f_mask, g_mask, h_mask, squares, r, exc, h_values, (f_vals, g_vals)
    )
    strata = stratify(tiles, exc.mask, grid)
    per_d: list[tuple[int, float]] = []
    lam_total = 0j
    for d, sub in strata.items():
        lam = trilinear_form(triple.f, triple.g, triple.h, sub)
        per_d.append((d, abs(lam)))
        lam_total += lam
    mf = set_measure(f_mask, grid)
    mg = set_measure(g_mask, grid)
    mh = set_measure(h_mask, grid)
    denom = (
        mf ** float(1 / exponents.p if exponents.p != math.inf else 0.0)
        * mg ** float(1 / exponents.q if exponents.q != math.inf else 0.0)
        * mh ** float(1 / exponents.s_dual)
    )
    values = [v for _, v in per_d]
    envelope_ok = all(
        max(values[i:]) <= max(values[i - 1 :]) + 1e-15 for i in range(1, len(values))
    )
    return ProbeReport(
        key=key,
        p=float(exponents.p),
        q=float(exponents.q),
        s=float(exponents.s),
        s_dual=float(exponents.s_dual),
        r=r,
        nu=nu,
        measure_f=mf,
        measure_g=mg,
        measure_h=mh,
        measure_major=set_measure(triple.major_mask, grid),
        exceptional_constant=exc.constant,
        exceptional_measure=exc.measure,
        per_d=per_d,
        lambda_abs=abs(lam_total),
        ratio=abs(lam_total) / denom if denom > 0 else 0.0,
        num_squares=len(squares),
        num_tiles=len(tiles),
        h_mode=h_mode,
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
        envelope_nonincreasing=envelope_ok,
    )


def admissible_nu_grid(
    r: float,
    theta1: float = 1.0 / 3.0,
    theta2: float = 1.0 / 3.0,
    step: float = 0.05,
) -> list[tuple[float, float, float]]:
    """Grid of generalized-restricted-type exponent triples on the
    admissible simplex region: 0 < nu1 < 1/2 + 2*alpha*theta1 (capped at
    1/r'), same for nu2, and -1 < nu3 < 1/r' with nu1+nu2+nu3 = 1."""
    a = 0.5 - 1.0 / r
    rp_inv = 1.0 - 1.0 / r
    cap1 = min(0.5 + 2.0 * a * theta1, rp_inv)
    cap2 = min(0.5 + 2.0 * a * theta2, rp_inv)
    out: list[tuple[float, float, float]] = []
    n1 = step
    while n1 < cap1 - 1e-12:
        n2 = step
        while n2 < cap2 - 1e-12:
            n3 = 1.0 - n1 - n2
            if -1.0 < n3 < rp_inv:
                out.append((round(n1, 10), round(n2, 10), round(n3, 10)))
            n2 += step
        n1 += step
    return out


def sweep_family(count: int, seed: int, core_scale: int = 2) -> SquareCollection:
    """Boundedness-sweep square families: one core square [0, 2^s)^2
    (sized to catch the probe's modulated spectra) plus count-1 seeded
    random disjoint squares at distance >= 5 from the origin, so growing
    the family only adds spectral tail mass."""
    if count < 1:
        raise ValueError("need at least one square")
    rng = np.random.default_rng(seed)
    squares = [square(core_scale, 0, 0)]
    attempts = 0
    while len(squares) < count:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError(f"could not place {count} disjoint sweep squares")
        j = int(rng.integers(-1, 2))
        side = 2.0**j
        kmin = max(1, math.ceil(5.0 / side))
        kmax = max(kmin + 1, int(50.0 / side))
        k1 = int(rng.integers(kmin, kmax)) * (1 if rng.random() < 0.5 else -1)
        k2 = int(rng.integers(kmin, kmax)) * (1 if rng.random() < 0.5 else -1)
        cand = square(j, k1, k2)
        if all(cand.disjoint_from(s) for s in squares):
            squares.append(cand)
    return SquareCollection(squares)


def counterexample_config(n: int, orientation: str = "xi-strip") -> SquareCollection:
    """Unit squares tiling a frequency strip: xi confined to [0, 1)
    (omega2 walking upward) or the transpose."""
    if n < 1:
        raise ValueError("need at least one square")
    if orientation == "xi-strip":
        squares = [square(0, 0, k) for k in range(n)]
    elif orientation == "eta-strip":
        squares = [square(0, k, 0) for k in range(n)]
    else:
        raise ValueError(f"orientation must be xi-strip or eta-strip, got {orientation!r}")
    return SquareCollection(squares)


def counterexample_probe(
    grid: Grid,
    n: int,
    p: float,
    r: float = 4.0,
    window: tuple[float, float] = (-4.0, 4.0),
    h_mode: str = "extremal",
) -> ProbeReport:
    """The strip experiment at exponent p: F shrinks like 1/n so its
    spectrum spreads across the n squares hitting the first slot
    (eta-strip: omega1 walks along the strip); G and H are unit-scale."""
    omega = counterexample_config(n, "eta-strip")
    tiles = tiles_for_omega(omega, window)
    exps = ExponentTuple.from_pq(p, p, r)
    f_mask = interval_mask(grid, 0.0, 1.0 / n)
    g_mask = interval_mask(grid, -1.0, 1.0)
    h_mask = interval_mask(grid, -0.5, 0.5)
    return restricted_probe(
        tiles, grid, exps, f_mask, g_mask, h_mask,
        h_mode=h_mode, key=f"counterexample-n{n}-p{p:g}",
    )
