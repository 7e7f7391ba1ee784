import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfa.geometry import (
    DyadicInterval,
    Relation,
    SquareCollection,
    box_region,
    build_tritile,
    disc_region,
    empty_region,
    make_dyadic,
    relate,
    shell,
    shell_histogram,
    shell_index,
    square,
    whitney_cover,
)


# -- dyadic intervals --------------------------------------------------------


def test_make_dyadic_examples():
    assert (make_dyadic(0, 0).left, make_dyadic(0, 0).right) == (0.0, 1.0)
    assert (make_dyadic(-2, 5).left, make_dyadic(-2, 5).right) == (1.25, 1.5)
    assert (make_dyadic(3, -1).left, make_dyadic(3, -1).right) == (-8.0, 0.0)


def test_relate_examples():
    assert relate(make_dyadic(0, 0), make_dyadic(1, 0)) is Relation.A_IN_B
    assert relate(make_dyadic(0, 0), make_dyadic(0, 1)) is Relation.DISJOINT
    assert relate(make_dyadic(2, 0), make_dyadic(2, 0)) is Relation.EQUAL


def _relation_by_endpoints(a: DyadicInterval, b: DyadicInterval) -> Relation:
    # Independent check via floating-point endpoints.
    if a.right <= b.left or b.right <= a.left:
        return Relation.DISJOINT
    if a.left == b.left and a.right == b.right:
        return Relation.EQUAL
    if b.left <= a.left and a.right <= b.right:
        return Relation.A_IN_B
    if a.left <= b.left and b.right <= a.right:
        return Relation.B_IN_A
    raise AssertionError(f"partial overlap of dyadic intervals {a} {b}")


@settings(max_examples=500, deadline=None)
@given(
    st.integers(-8, 8), st.integers(-64, 64), st.integers(-8, 8), st.integers(-64, 64)
)
def test_dyadic_trichotomy(j1, k1, j2, k2):
    a, b = make_dyadic(j1, k1), make_dyadic(j2, k2)
    assert relate(a, b) is _relation_by_endpoints(a, b)


def test_trichotomy_bulk(rng):
    # 10^4 random pairs: relation valid and disjointness <=> empty
    # intersection computed by endpoints.
    for _ in range(10_000):
        j1, j2 = rng.integers(-6, 7, size=2)
        k1, k2 = rng.integers(-100, 101, size=2)
        a, b = make_dyadic(int(j1), int(k1)), make_dyadic(int(j2), int(k2))
        rel = relate(a, b)
        empty = a.right <= b.left or b.right <= a.left
        assert (rel is Relation.DISJOINT) == empty


# -- tri-tiles ----------------------------------------------------------------


def test_build_tritile_output_interval():
    t = build_tritile(make_dyadic(0, 0), square(0, 0, 2))
    # center(omega1) + center(omega2) = 0.5 + 2.5 = 3, length 4.
    assert (t.output.left, t.output.right) == (1.0, 5.0)
    # contains the sumset omega1 + omega2 = [2, 4)
    assert t.output.left <= 2.0 and 4.0 <= t.output.right


def test_build_tritile_area_mismatch():
    with pytest.raises(ValueError):
        build_tritile(make_dyadic(1, 0), square(0, 0, 0))


def test_build_tritile_wide_square():
    t = build_tritile(make_dyadic(-1, 0), square(1, 0, 0))
    assert (t.output.left, t.output.right) == (-2.0, 6.0)


def test_tritile_area_invariant(rng):
    for _ in range(200):
        j = int(rng.integers(-4, 5))
        t = build_tritile(
            make_dyadic(-j, int(rng.integers(-10, 10))),
            square(j, int(rng.integers(-10, 10)), int(rng.integers(-10, 10))),
        )
        assert t.spatial.length * t.omega1.length == 1.0
        assert t.output.length == 4.0 * t.omega1.length
        lo = t.omega1.left + t.omega2.left
        hi = t.omega1.right + t.omega2.right
        assert t.output.left <= lo and hi <= t.output.right


# -- square collections -------------------------------------------------------


def test_square_collection_rejects_overlap():
    with pytest.raises(ValueError):
        SquareCollection([square(0, 0, 0), square(1, 0, 0)])


def test_square_collection_roundtrip():
    coll = SquareCollection([square(0, 0, 0), square(0, 3, -2), square(-1, -3, 9)])
    text = coll.to_text()
    assert SquareCollection.from_text(text) == coll
    # bit-exact: serializing again yields identical bytes
    assert SquareCollection.from_text(text).to_text() == text


# -- Whitney covers ------------------------------------------------------------


def test_whitney_unit_square():
    region = box_region(0.0, 1.0, 0.0, 1.0, n_max=3)
    cover = whitney_cover(region)
    assert len(cover) > 0
    cover.validate_disjoint()
    for sq in cover:
        # inside the open box
        assert 0.0 < sq.omega1.left and sq.omega1.right < 1.0 + 1e-12
        assert region.contains_square(sq)
        d = region.square_distance_to_complement(sq)
        side = sq.side
        assert side <= d <= 4.0 * math.sqrt(2.0) * side


def test_whitney_empty_region():
    assert len(whitney_cover(empty_region())) == 0


def test_whitney_rejects_negative_resolution():
    with pytest.raises(ValueError):
        whitney_cover(disc_region(1.0, n_max=3), n_max=-1)


def test_whitney_disc_shell_slope():
    n_max = 6
    region = disc_region(1.0, n_max=n_max)
    cover = whitney_cover(region)
    hist = shell_histogram(cover, region)
    # log2(count) affine in n with slope in [0.7, 1.3] over n in [2, n_max-1]
    ns = [n for n in range(2, n_max) if hist.get(n, 0) > 0]
    ys = [math.log2(hist[n]) for n in ns]
    slope = np.polyfit(ns, ys, 1)[0]
    assert 0.7 <= slope <= 1.3


def test_shell_partition_and_bounds():
    n_max = 5
    region = disc_region(1.0, n_max=n_max)
    cover = whitney_cover(region)
    seen = []
    for n in range(0, n_max + 3):
        seen.extend(shell(cover, region, n))
    assert sorted(seen) == list(cover.squares)
    # far band beyond the resolution limit is empty
    assert len(shell(cover, region, n_max + 5)) == 0
    # band membership is exactly the stated distance band
    for sq in cover:
        n = shell_index(sq, region)
        d = region.square_distance_to_complement(sq)
        assert 2.0 ** (-n) <= d < 2.0 ** (-n + 1)


def test_shell_count_disc_n4():
    region = disc_region(1.0, n_max=6)
    cover = whitney_cover(region)
    count = len(shell(cover, region, 4))
    # boundary length 2*pi at band width 2^-4: count within a factor 4
    # of 2*pi*2^4
    target = 2.0 * math.pi * 16
    assert target / 4 <= count <= target * 4


def test_generic_region_sampled_distance():
    # indicator-only region (no exact oracle): coarse disc
    region_exact = disc_region(1.0, n_max=4)
    from tfa.geometry import OpenRegion

    region = OpenRegion(region_exact.indicator, region_exact.bbox, 4)
    cover = whitney_cover(region)
    assert len(cover) > 0
    for sq in cover:
        d = region.square_distance_to_complement(sq)
        assert sq.side <= d <= 4.0 * math.sqrt(2.0) * sq.side
