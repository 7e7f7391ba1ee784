"""Dyadic geometry of the frequency plane.

Dyadic intervals, frequency squares, tri-tiles, disjoint square
collections, and Whitney coverings of bounded open regions.  Everything
here is exact integer arithmetic on (scale, position) pairs; floating
point only enters through derived endpoints, which are powers of two
times integers and therefore exact in double precision.

All values are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence


class Relation(enum.Enum):
    DISJOINT = "disjoint"
    A_IN_B = "a_in_b"
    B_IN_A = "b_in_a"
    EQUAL = "equal"


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The half-open interval [position * 2**scale, (position+1) * 2**scale)."""

    scale: int
    position: int

    @property
    def length(self) -> float:
        return math.ldexp(1.0, self.scale)

    @property
    def left(self) -> float:
        return math.ldexp(float(self.position), self.scale)

    @property
    def right(self) -> float:
        return math.ldexp(float(self.position + 1), self.scale)

    @property
    def center(self) -> float:
        return math.ldexp(self.position + 0.5, self.scale)

    def contains_point(self, x: float) -> bool:
        return self.left <= x < self.right

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.scale + 1, self.position >> 1)

    def __str__(self) -> str:
        return f"[{self.left}, {self.right})"


def make_dyadic(scale: int, position: int) -> DyadicInterval:
    """Build [position * 2**scale, (position+1) * 2**scale)."""
    return DyadicInterval(int(scale), int(position))


def relate(a: DyadicInterval, b: DyadicInterval) -> Relation:
    """Classify a pair of dyadic intervals: disjoint, nested, or equal.

    Pure integer arithmetic; two dyadic intervals are never partially
    overlapping.
    """
    if a.scale == b.scale:
        return Relation.EQUAL if a.position == b.position else Relation.DISJOINT
    if a.scale < b.scale:
        # a is shorter; a subset of b iff a's position lands in b's block.
        shift = b.scale - a.scale
        return Relation.A_IN_B if (a.position >> shift) == b.position else Relation.DISJOINT
    shift = a.scale - b.scale
    return Relation.B_IN_A if (b.position >> shift) == a.position else Relation.DISJOINT


def is_subinterval(a: DyadicInterval, b: DyadicInterval) -> bool:
    """a ⊆ b, by integer arithmetic."""
    r = relate(a, b)
    return r is Relation.A_IN_B or r is Relation.EQUAL


def dyadic_disjoint(a: DyadicInterval, b: DyadicInterval) -> bool:
    return relate(a, b) is Relation.DISJOINT


@dataclass(frozen=True, order=True)
class Interval:
    """A plain half-open interval [left, right); used where dyadic structure
    is not required (output intervals of tri-tiles, projection bands)."""

    left: float
    right: float

    def __post_init__(self) -> None:
        if not self.right > self.left:
            raise ValueError(f"empty interval [{self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def center(self) -> float:
        return 0.5 * (self.left + self.right)

    def contains_point(self, x: float) -> bool:
        return self.left <= x < self.right

    def contains(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def overlaps(self, other: "Interval") -> bool:
        return self.left < other.right and other.left < self.right


def as_interval(obj) -> Interval:
    """Coerce a DyadicInterval / Interval / (left, right) pair to Interval."""
    if isinstance(obj, Interval):
        return obj
    if isinstance(obj, DyadicInterval):
        return Interval(obj.left, obj.right)
    left, right = obj
    return Interval(float(left), float(right))


@dataclass(frozen=True, order=True)
class FrequencySquare:
    """A dyadic square omega1 x omega2 in the frequency plane.

    Only genuine squares are allowed: both sides share one scale.
    """

    omega1: DyadicInterval
    omega2: DyadicInterval

    def __post_init__(self) -> None:
        if self.omega1.scale != self.omega2.scale:
            raise ValueError(
                f"not a square: |omega1|=2^{self.omega1.scale}, |omega2|=2^{self.omega2.scale}"
            )

    @property
    def scale(self) -> int:
        return self.omega1.scale

    @property
    def side(self) -> float:
        return self.omega1.length

    def disjoint_from(self, other: "FrequencySquare") -> bool:
        # Squares are disjoint in the plane unless both projections overlap.
        return dyadic_disjoint(self.omega1, other.omega1) or dyadic_disjoint(
            self.omega2, other.omega2
        )

    def __str__(self) -> str:
        return f"{self.omega1} x {self.omega2}"


def square(scale: int, k1: int, k2: int) -> FrequencySquare:
    return FrequencySquare(make_dyadic(scale, k1), make_dyadic(scale, k2))


@dataclass(frozen=True, order=True)
class TriTile:
    """A spatial dyadic interval paired with a frequency square.

    The spatial interval and each frequency side span a rectangle of
    area one (|I| * |omega1| = 1).  The derived output interval omega3
    is the interval of length 4|omega1| centered at
    center(omega1) + center(omega2); it contains the sumset
    omega1 + omega2, whose length is 2|omega1|.
    """

    spatial: DyadicInterval
    square: FrequencySquare

    def __post_init__(self) -> None:
        if self.spatial.scale + self.square.scale != 0:
            raise ValueError(
                f"tile area is 2^{self.spatial.scale + self.square.scale}, not 1: "
                f"I={self.spatial}, omega1={self.square.omega1}"
            )

    @property
    def omega1(self) -> DyadicInterval:
        return self.square.omega1

    @property
    def omega2(self) -> DyadicInterval:
        return self.square.omega2

    @property
    def output(self) -> Interval:
        c = self.square.omega1.center + self.square.omega2.center
        half = 2.0 * self.square.side
        return Interval(c - half, c + half)

    def freq_component(self, j: int):
        """The j-th frequency component, j in {1, 2, 3}."""
        if j == 1:
            return self.square.omega1
        if j == 2:
            return self.square.omega2
        if j == 3:
            return self.output
        raise ValueError(f"component index must be 1, 2 or 3, got {j}")

    def __str__(self) -> str:
        return f"I={self.spatial} omega={self.square}"


def build_tritile(spatial: DyadicInterval, sq: FrequencySquare) -> TriTile:
    """Assemble a tri-tile; rejects spatial/frequency scale mismatches."""
    return TriTile(spatial, sq)


def reflect_tile(tile: TriTile) -> TriTile:
    """Swap the roles of the two frequency sides (omega1 <-> omega2)."""
    return TriTile(tile.spatial, FrequencySquare(tile.square.omega2, tile.square.omega1))


class SquareCollection:
    """A finite family of pairwise disjoint frequency squares."""

    __slots__ = ("squares",)

    def __init__(self, squares: Iterable[FrequencySquare], validate: bool = True):
        sq = tuple(sorted(set(squares)))
        if validate:
            _check_disjoint(sq)
        object.__setattr__(self, "squares", sq)

    def __setattr__(self, *a):  # immutable
        raise AttributeError("SquareCollection is immutable")

    def __len__(self) -> int:
        return len(self.squares)

    def __iter__(self) -> Iterator[FrequencySquare]:
        return iter(self.squares)

    def __contains__(self, sq: FrequencySquare) -> bool:
        return sq in self.squares

    def __eq__(self, other) -> bool:
        return isinstance(other, SquareCollection) and self.squares == other.squares

    def __hash__(self) -> int:
        return hash(self.squares)

    def validate_disjoint(self) -> None:
        _check_disjoint(self.squares)

    def to_text(self) -> str:
        """One square per line: 'j k1 k2' (scale, omega1 position, omega2 position)."""
        return "".join(
            f"{sq.scale} {sq.omega1.position} {sq.omega2.position}\n" for sq in self.squares
        )

    @classmethod
    def from_text(cls, text: str) -> "SquareCollection":
        squares = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            j, k1, k2 = (int(tok) for tok in line.split())
            squares.append(square(j, k1, k2))
        return cls(squares)

    def __repr__(self) -> str:
        return f"SquareCollection({len(self.squares)} squares)"


def _check_disjoint(squares: Sequence[FrequencySquare]) -> None:
    for i in range(len(squares)):
        for j in range(i + 1, len(squares)):
            if not squares[i].disjoint_from(squares[j]):
                raise ValueError(f"squares overlap: {squares[i]} and {squares[j]}")


class TileCollection:
    """A finite set of tri-tiles with lookup by frequency square and by
    spatial containment.  Iteration order is canonical (sorted), so any
    reduction over a TileCollection is deterministic."""

    __slots__ = ("tiles", "_by_square")

    def __init__(self, tiles: Iterable[TriTile]):
        ts = tuple(sorted(set(tiles)))
        by_square: dict[FrequencySquare, list[TriTile]] = {}
        for t in ts:
            by_square.setdefault(t.square, []).append(t)
        object.__setattr__(self, "tiles", ts)
        object.__setattr__(self, "_by_square", {k: tuple(v) for k, v in by_square.items()})

    def __setattr__(self, *a):
        raise AttributeError("TileCollection is immutable")

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[TriTile]:
        return iter(self.tiles)

    def __contains__(self, t: TriTile) -> bool:
        return t in set(self.tiles)

    def __eq__(self, other) -> bool:
        return isinstance(other, TileCollection) and self.tiles == other.tiles

    def __hash__(self) -> int:
        return hash(self.tiles)

    def squares(self) -> tuple[FrequencySquare, ...]:
        """Omega(S): the distinct frequency squares of the tiles, sorted."""
        return tuple(sorted(self._by_square.keys()))

    def tiles_for_square(self, sq: FrequencySquare) -> tuple[TriTile, ...]:
        return self._by_square.get(sq, ())

    def within(self, interval: DyadicInterval) -> "TileCollection":
        """Tiles whose spatial interval is contained in `interval`."""
        return TileCollection(t for t in self.tiles if is_subinterval(t.spatial, interval))

    def without(self, tiles: Iterable[TriTile]) -> "TileCollection":
        drop = set(tiles)
        return TileCollection(t for t in self.tiles if t not in drop)

    def union(self, other: "TileCollection") -> "TileCollection":
        return TileCollection(self.tiles + other.tiles)

    def __repr__(self) -> str:
        return f"TileCollection({len(self.tiles)} tiles)"


# ---------------------------------------------------------------------------
# Open regions and Whitney coverings
# ---------------------------------------------------------------------------


class OpenRegion:
    """A bounded open subset of the frequency plane.

    Described by a pointwise indicator, a bounding box and a resolution
    limit n_max (squares below side 2**-n_max are never produced).  A
    region may carry an exact distance oracle dist(square -> distance to
    the complement); without one, distances are estimated by sampling
    complement points on a lattice, which is slower and approximate.
    """

    def __init__(
        self,
        indicator: Callable[[float, float], bool],
        bbox: tuple[float, float, float, float],
        n_max: int,
        dist_to_complement: Callable[[FrequencySquare], float] | None = None,
        intersects: Callable[[FrequencySquare], bool] | None = None,
        name: str = "region",
    ):
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
        self.indicator = indicator
        self.bbox = tuple(float(v) for v in bbox)
        self.n_max = int(n_max)
        self._dist = dist_to_complement
        self._intersects = intersects
        self.name = name
        self._lattice: list[tuple[float, float]] | None = None

    def contains_square(self, sq: FrequencySquare) -> bool:
        """Membership test at resolution limit: all four corners and the
        center must satisfy the indicator.  Exact for convex regions."""
        x0, x1 = sq.omega1.left, sq.omega1.right
        y0, y1 = sq.omega2.left, sq.omega2.right
        pts = ((x0, y0), (x0, y1), (x1, y0), (x1, y1), (0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        return all(self.indicator(x, y) for (x, y) in pts)

    def square_distance_to_complement(self, sq: FrequencySquare) -> float:
        if self._dist is not None:
            return self._dist(sq)
        return self._sampled_distance(sq)

    def may_intersect(self, sq: FrequencySquare) -> bool:
        """Pruning test for the quadtree: False only when the square
        certainly misses the region.  Exact for the built-in factories;
        the generic fallback probes a small sub-lattice and may drop
        slivers below the resolution limit."""
        if self._intersects is not None:
            return self._intersects(sq)
        x0, x1 = sq.omega1.left, sq.omega1.right
        y0, y1 = sq.omega2.left, sq.omega2.right
        for i in range(5):
            px = x0 + (x1 - x0) * i / 4.0
            for j in range(5):
                if self.indicator(px, y0 + (y1 - y0) * j / 4.0):
                    return True
        return False

    def _sampled_distance(self, sq: FrequencySquare) -> float:
        if self._lattice is None:
            self._lattice = self._build_complement_lattice()
        x0, x1 = sq.omega1.left, sq.omega1.right
        y0, y1 = sq.omega2.left, sq.omega2.right
        best = math.inf
        for (px, py) in self._lattice:
            dx = max(x0 - px, px - x1, 0.0)
            dy = max(y0 - py, py - y1, 0.0)
            d = math.hypot(dx, dy)
            if d < best:
                best = d
        return best

    def _build_complement_lattice(self) -> list[tuple[float, float]]:
        # Sample the complement on a lattice twice finer than the smallest
        # square; points in an inflated bounding box so outside mass is seen.
        xmin, xmax, ymin, ymax = self.bbox
        pad_x, pad_y = 0.5 * (xmax - xmin), 0.5 * (ymax - ymin)
        step = math.ldexp(1.0, -self.n_max - 1)
        # Guard against pathological lattice sizes for deep resolution limits.
        max_per_side = 2048
        nx = min(max_per_side, int((xmax - xmin + 2 * pad_x) / step) + 1)
        ny = min(max_per_side, int((ymax - ymin + 2 * pad_y) / step) + 1)
        sx = (xmax - xmin + 2 * pad_x) / max(nx - 1, 1)
        sy = (ymax - ymin + 2 * pad_y) / max(ny - 1, 1)
        pts = []
        for i in range(nx):
            px = xmin - pad_x + i * sx
            for j in range(ny):
                py = ymin - pad_y + j * sy
                if not self.indicator(px, py):
                    pts.append((px, py))
        return pts


def disc_region(radius: float = 1.0, center: tuple[float, float] = (0.0, 0.0), n_max: int = 6) -> OpenRegion:
    """Open disc with an exact distance oracle."""
    cx, cy = center
    r = float(radius)

    def indicator(x: float, y: float) -> bool:
        return (x - cx) ** 2 + (y - cy) ** 2 < r * r

    def dist(sq: FrequencySquare) -> float:
        corners = [
            (sq.omega1.left, sq.omega2.left),
            (sq.omega1.left, sq.omega2.right),
            (sq.omega1.right, sq.omega2.left),
            (sq.omega1.right, sq.omega2.right),
        ]
        far = max(math.hypot(x - cx, y - cy) for (x, y) in corners)
        return max(0.0, r - far)

    def intersects(sq: FrequencySquare) -> bool:
        # nearest point of the square to the disc center
        dx = max(sq.omega1.left - cx, cx - sq.omega1.right, 0.0)
        dy = max(sq.omega2.left - cy, cy - sq.omega2.right, 0.0)
        return dx * dx + dy * dy < r * r

    return OpenRegion(
        indicator, (cx - r, cx + r, cy - r, cy + r), n_max, dist, intersects, name="disc"
    )


def box_region(x0: float, x1: float, y0: float, y1: float, n_max: int = 6) -> OpenRegion:
    """Open axis-parallel box with an exact distance oracle."""

    def indicator(x: float, y: float) -> bool:
        return x0 < x < x1 and y0 < y < y1

    def dist(sq: FrequencySquare) -> float:
        margins = (
            sq.omega1.left - x0,
            x1 - sq.omega1.right,
            sq.omega2.left - y0,
            y1 - sq.omega2.right,
        )
        return max(0.0, min(margins))

    def intersects(sq: FrequencySquare) -> bool:
        return (
            sq.omega1.left < x1
            and x0 < sq.omega1.right
            and sq.omega2.left < y1
            and y0 < sq.omega2.right
        )

    return OpenRegion(indicator, (x0, x1, y0, y1), n_max, dist, intersects, name="box")


def empty_region(n_max: int = 3) -> OpenRegion:
    return OpenRegion(
        lambda x, y: False,
        (0.0, 1.0, 0.0, 1.0),
        n_max,
        lambda sq: 0.0,
        lambda sq: False,
        name="empty",
    )


# Whitney normalization: emit a square omega once
#   |omega| <= dist(omega, complement) <= 4 * diam(omega),
# where |omega| is the side length and diam = sqrt(2) * side.

_WHITNEY_UPPER = 4.0 * math.sqrt(2.0)


def whitney_cover(region: OpenRegion, n_max: int | None = None) -> SquareCollection:
    """Whitney covering of a bounded open region by disjoint dyadic squares.

    Quadtree refinement: a candidate square is emitted once it is inside
    the region and its side/distance band condition holds; otherwise it
    is subdivided, down to side 2**-n_max.
    """
    if n_max is None:
        n_max = region.n_max
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")

    xmin, xmax, ymin, ymax = region.bbox
    span = max(xmax - xmin, ymax - ymin)
    if span <= 0:
        return SquareCollection([], validate=False)
    j0 = max(math.ceil(math.log2(span)) if span > 0 else 0, -n_max)
    side0 = math.ldexp(1.0, j0)
    roots = []
    for k1 in range(math.floor(xmin / side0), math.ceil(xmax / side0) + 1):
        for k2 in range(math.floor(ymin / side0), math.ceil(ymax / side0) + 1):
            roots.append(square(j0, k1, k2))

    out: list[FrequencySquare] = []
    stack = list(reversed(roots))
    while stack:
        sq = stack.pop()
        if not region.may_intersect(sq):
            continue
        side = sq.side
        inside = region.contains_square(sq)
        if inside:
            d = region.square_distance_to_complement(sq)
            if side <= d <= _WHITNEY_UPPER * side:
                out.append(sq)
                continue
        if sq.scale > -n_max:
            j = sq.scale - 1
            k1, k2 = sq.omega1.position << 1, sq.omega2.position << 1
            stack.extend(
                (
                    square(j, k1, k2),
                    square(j, k1 + 1, k2),
                    square(j, k1, k2 + 1),
                    square(j, k1 + 1, k2 + 1),
                )
            )
        # Below the resolution limit the square is dropped.
    return SquareCollection(out, validate=False)


def shell_index(cover_square: FrequencySquare, region: OpenRegion) -> int:
    """The band n with 2**-n <= dist(omega, complement) < 2**-(n-1)."""
    d = region.square_distance_to_complement(cover_square)
    if d <= 0:
        raise ValueError(f"square {cover_square} touches the complement")
    return -math.floor(math.log2(d))


def shell(cover: SquareCollection, region: OpenRegion, n: int) -> SquareCollection:
    """Squares of the cover whose distance to the complement lies in
    [2**-n, 2**-(n-1)).  The bands over all n partition the cover."""
    return SquareCollection(
        (sq for sq in cover if shell_index(sq, region) == n), validate=False
    )


def shell_histogram(cover: SquareCollection, region: OpenRegion) -> dict[int, int]:
    hist: dict[int, int] = {}
    for sq in cover:
        n = shell_index(sq, region)
        hist[n] = hist.get(n, 0) + 1
    return dict(sorted(hist.items()))
