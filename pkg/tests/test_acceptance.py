"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` (the -s shows the
per-criterion lines).  Tolerances are pinned here, not configurable.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from tfa.analysis_core import (
    Grid,
    SampledFunction,
    chi_tilde,
    inner_product,
    random_function,
    spectrum,
    wave_packet,
)
from tfa.columns_rows import (
    Column,
    Row,
    column_estimate_sides,
    row_estimate_sides,
)
from tfa.decomposition import (
    GenericBoundInputs,
    decompose_f,
    decompose_g,
    decompose_h,
    generic_bound,
    split,
    sup_average,
)
from tfa.geometry import (
    build_tritile,
    disc_region,
    make_dyadic,
    reflect_tile,
    shell_histogram,
    square,
    whitney_cover,
)
from tfa.operators import (
    ExponentTuple,
    SequenceH,
    eval_LP,
    eval_RF_r,
    eval_T_r,
    eval_model,
    tiles_for_omega,
    trilinear_form,
)
from tfa.probe import counterexample_probe, interval_mask, restricted_probe, sweep_family
from tfa.size_energy import (
    energy_f,
    energy_g,
    energy_h,
    restrict,
    size_f,
    size_g,
    size_h,
    verify_energy_witness_fg,
    verify_energy_witness_h,
)

from conftest import (
    check_constant,
    indicator_function,
    random_disjoint_squares,
    random_sequence_h,
    random_tiles,
)
from oracles import oracle_LP, oracle_RF_r, oracle_T_r, oracle_model

BIG = Grid(4096, 32.0)
SMALL = Grid(256, 8.0)
MED = Grid(2048, 32.0)
FAST = Grid(1024, 16.0)
PROBE = Grid(8192, 32.0)


@contextmanager
def criterion(num: int, name: str):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {num} {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {num} {name}: PASS")


def rel_err(got, want) -> float:
    scale = float(np.max(np.abs(want)))
    if scale == 0.0:
        return float(np.max(np.abs(got)))
    return float(np.max(np.abs(np.asarray(got) - np.asarray(want))) / scale)


# -- 1: Plancherel / orthogonality ---------------------------------------------


def test_acceptance_01_plancherel_orthogonality():
    with criterion(1, "plancherel-orthogonality"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        for _ in range(100):
            f = SampledFunction(
                BIG,
                rng.standard_normal(BIG.num_points)
                + 1j * rng.standard_normal(BIG.num_points),
            )
            t_norm = BIG.spacing * np.sum(np.abs(f.values) ** 2)
            w_norm = np.sum(np.abs(spectrum(f)) ** 2) / BIG.period
            assert abs(t_norm - w_norm) <= 1e-10 * t_norm
        # column wave-packet Gram matrices (sibling-separated squares)
        for count, slot in ((8, 0), (6, 1), (4, 2)):
            packs = [
                wave_packet(
                    BIG, build_tritile(make_dyadic(1, (i + slot) % 3), square(-1, 0, 2 * i)), 2
                )
                for i in range(count)
            ]
            gram = np.array(
                [[inner_product(a.sampled, b.sampled) for b in packs] for a in packs]
            )
            assert np.max(np.abs(gram - np.eye(count))) <= 1e-8
        elapsed = time.perf_counter() - t0
        print(f"  criterion 1 runtime {elapsed:.2f}s (budget 10s)")
        assert elapsed < 10.0


# -- 2: oracle equivalence --------------------------------------------------------


def test_acceptance_02_oracle_equivalence():
    with criterion(2, "oracle-equivalence"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(202)
        for i in range(20):
            f = random_function(SMALL, rng)
            g = random_function(SMALL, rng)
            omega = random_disjoint_squares(rng, 8, (-2, 0), box=6.5)
            sharp = i % 2 == 0
            got = eval_T_r(f, g, omega, 4.0, sharp=sharp)
            want = oracle_T_r(f, g, tuple(omega), 4.0, sharp=sharp)
            assert rel_err(got.values.real, want) < 1e-8
        for i in range(20):
            f = random_function(SMALL, rng)
            edges = np.sort(rng.uniform(-13.0, 13.0, size=32))
            bands = [
                (float(edges[2 * k]), float(edges[2 * k + 1])) for k in range(16)
            ]
            got = eval_RF_r(f, bands, 3.0, sharp=True)
            want = oracle_RF_r(f, bands, 3.0, sharp=True)
            assert rel_err(got.values.real, want) < 1e-8
        for i in range(20):
            f = random_function(SMALL, rng)
            g = random_function(SMALL, rng)
            edges = np.sort(rng.uniform(-20.0, 20.0, size=8))
            bands = [
                (float(edges[2 * k]), float(edges[2 * k + 1])) for k in range(4)
            ]
            got = eval_LP(f, g, bands, 2.0)
            want = oracle_LP(f, g, bands, 2.0)
            assert rel_err(got.values.real, want) < 1e-8
        for i in range(20):
            f = random_function(SMALL, rng)
            g = random_function(SMALL, rng)
            tiles = random_tiles(SMALL, rng, n_squares=4, window=2.0, keep=0.7)
            got = eval_model(f, g, tiles, 4.0)
            want = oracle_model(f, g, tiles, 4.0)
            assert rel_err(got.values.real, want) < 1e-8
        elapsed = time.perf_counter() - t0
        print(f"  criterion 2 runtime {elapsed:.1f}s (budget 120s)")
        assert elapsed < 120.0


# -- 3: RF baseline ----------------------------------------------------------------


def test_acceptance_03_rf_baseline():
    with criterion(3, "rf-baseline"):
        rng = np.random.default_rng(303)
        f = random_function(BIG, rng, band_fraction=0.6)
        nyq = BIG.nyquist
        cuts = np.linspace(-nyq, nyq, 33)
        bands = [(float(cuts[i]), float(cuts[i + 1])) for i in range(32)]
        rf2 = eval_RF_r(f, bands, 2.0, sharp=True)
        assert abs(rf2.l2_norm() - f.l2_norm()) <= 1e-9 * f.l2_norm()
        rf4 = eval_RF_r(f, bands, 4.0, sharp=True)
        assert rf4.l2_norm() <= f.l2_norm() * (1.0 + 1e-9)


# -- 4: column / row estimates --------------------------------------------------


def _acceptance_column(rng, pool_squares, slots):
    count = int(rng.integers(1, 65))
    squares = pool_squares[:count]
    members = tuple(
        build_tritile(slots[int(rng.integers(0, len(slots)))], sq) for sq in squares
    )
    top = build_tritile(make_dyadic(3, 0), square(-3, 0, 0))
    return Column(top, members)


def test_acceptance_04_column_row_estimates():
    with criterion(4, "column-row-estimates"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(404)
        pool = [square(-1, 0, k) for k in range(64)]  # adjacent omega2, one tower
        slots = [make_dyadic(1, k) for k in range(4)]  # [0,2) .. [6,8)
        worst_col = warm_col = 0.0
        for i in range(100):
            col = _acceptance_column(rng, pool, slots)
            f, g = random_function(BIG, rng), random_function(BIG, rng)
            h = SequenceH(
                {sq: random_function(BIG, rng) for sq in {m.square for m in col.members}}
            )
            lhs, rhs = column_estimate_sides(col, f, g, h, 4.0)
            if rhs > 0:
                worst_col = max(worst_col, lhs / rhs)
                if i < 10:
                    warm_col = worst_col
        worst_row = warm_row = 0.0
        for i in range(100):
            col = _acceptance_column(rng, pool, slots)
            row = Row(reflect_tile(col.top), tuple(reflect_tile(t) for t in col.members))
            f, g = random_function(BIG, rng), random_function(BIG, rng)
            h = SequenceH(
                {m.square: random_function(BIG, rng) for m in row.members}
            )
            lhs, rhs = row_estimate_sides(row, f, g, h, 4.0)
            if rhs > 0:
                worst_row = max(worst_row, lhs / rhs)
                if i < 10:
                    warm_row = worst_row
        # The frozen constants are the full first-run maxima; the 10-instance
        # warm-up statistic is reported but too noisy to freeze against the
        # 1.5x threshold (the ratio distribution spans more than a decade).
        check_constant("acc_column_estimate", worst_col)
        check_constant("acc_row_estimate", worst_row)
        elapsed = time.perf_counter() - t0
        print(
            f"  criterion 4 runtime {elapsed:.1f}s (budget 120s); "
            f"worst column {worst_col:.4g} (warm-up {warm_col:.4g}), "
            f"worst row {worst_row:.4g} (warm-up {warm_row:.4g})"
        )
        assert elapsed < 120.0


# -- 5: energy bounds --------------------------------------------------------------


def test_acceptance_05_energy_bounds():
    with criterion(5, "energy-bounds"):
        rng = np.random.default_rng(505)
        worst = {k: 0.0 for k in ("f", "g", "h", "f_local", "h_local")}
        I0 = make_dyadic(1, 0)
        rp = 4.0 / 3.0
        for _ in range(100):
            tiles = random_tiles(MED, rng, n_squares=4, window=4.0, keep=0.7)
            f = random_function(MED, rng)
            g = random_function(MED, rng)
            h = random_sequence_h(MED, rng, tiles.squares())
            rep_f = energy_f(tiles, f)
            assert verify_energy_witness_fg(rep_f, f, "f")
            if f.l2_norm() > 0:
                worst["f"] = max(worst["f"], rep_f.value / f.l2_norm())
            rep_g = energy_g(tiles, g)
            assert verify_energy_witness_fg(rep_g, g, "g")
            if g.l2_norm() > 0:
                worst["g"] = max(worst["g"], rep_g.value / g.l2_norm())
            rep_h = energy_h(tiles, h, 4.0)
            assert verify_energy_witness_h(rep_h, h, 4.0)
            agg_norm = (float(np.sum(h.lr_aggregate(rp) ** rp)) * MED.spacing) ** (
                1.0 / rp
            )
            if agg_norm > 0:
                worst["h"] = max(worst["h"], rep_h.value / agg_norm)
            local = restrict(tiles, I0)
            if len(local):
                wf = chi_tilde(I0, MED.points, 10)
                wl2 = math.sqrt(float(np.sum(np.abs(f.values) ** 2 * wf)) * MED.spacing)
                if wl2 > 0:
                    worst["f_local"] = max(
                        worst["f_local"], energy_f(local, f).value / wl2
                    )
                wh = chi_tilde(I0, MED.points, 20)
                wlr = (
                    float(np.sum((h.lr_aggregate(rp) * wh) ** rp)) * MED.spacing
                ) ** (1.0 / rp)
                if wlr > 0:
                    worst["h_local"] = max(
                        worst["h_local"], energy_h(local, h, 4.0).value / wlr
                    )
        check_constant("acc_energy_f_l2", worst["f"])
        check_constant("acc_energy_g_l2", worst["g"])
        check_constant("acc_energy_h_lrp", worst["h"])
        check_constant("acc_energy_f_local", worst["f_local"])
        check_constant("acc_energy_h_local", worst["h_local"])


# -- 6: decomposition postconditions ------------------------------------------------


def test_acceptance_06_decomposition():
    with criterion(6, "decomposition-postconditions"):
        rng = np.random.default_rng(606)
        rp = 4.0 / 3.0
        worst = {"f": 0.0, "g": 0.0, "h": 0.0, "split": 0.0}
        for i in range(200):
            tiles = random_tiles(FAST, rng, n_squares=3, window=3.0, keep=0.8)
            f = random_function(FAST, rng)
            g = random_function(FAST, rng)
            h = random_sequence_h(FAST, rng, tiles.squares())

            e1, s1 = energy_f(tiles, f).value, size_f(tiles, f).value
            if e1 > 0 and s1 > 0:
                n0 = math.floor(math.log2(e1 / s1))
                part = decompose_f(tiles, n0, e1, f)
                assert sorted(list(part.residual) + part.extracted_tiles()) == list(tiles)
                assert size_f(part.residual, f).value <= 2.0 ** (-n0 - 1) * e1 * (
                    1 + 1e-12
                )
                worst["f"] = max(worst["f"], part.top_measure() / 2.0 ** (2 * n0))
            e2, s2 = energy_g(tiles, g).value, size_g(tiles, g).value
            if e2 > 0 and s2 > 0:
                n0 = math.floor(math.log2(e2 / s2))
                part = decompose_g(tiles, n0, e2, g)
                assert sorted(list(part.residual) + part.extracted_tiles()) == list(tiles)
                assert size_g(part.residual, g).value <= 2.0 ** (-n0 - 1) * e2 * (
                    1 + 1e-12
                )
                worst["g"] = max(worst["g"], part.top_measure() / 2.0 ** (2 * n0))
            e3, s3 = energy_h(tiles, h, 4.0).value, size_h(tiles, h, 4.0).value
            if e3 > 0 and s3 > 0:
                n0 = math.floor(math.log2(e3 / s3))
                part = decompose_h(tiles, n0, e3, h, 4.0)
                assert sorted(list(part.residual) + part.extracted_tiles()) == list(tiles)
                assert size_h(part.residual, h, 4.0).value <= 2.0 ** (-n0 - 1) * e3 * (
                    1 + 1e-12
                )
                cols = [c for c in part.extracted if isinstance(c, Column)]
                rows = [c for c in part.extracted if isinstance(c, Row)]
                for fams in (cols, rows):
                    measure = sum(c.measure for c in fams)
                    if measure > 0:
                        worst["h"] = max(worst["h"], measure / 2.0 ** (rp * n0))
            out = split(tiles, f, g, h, 4.0)
            assert sorted(out.all_tiles()) == list(tiles)
            for lv in out.levels:
                worst["split"] = max(
                    worst["split"],
                    (lv.column_measure() + lv.row_measure()) / 2.0 ** (2 * lv.n),
                )
        check_constant("acc_decompose_f_tops", worst["f"])
        check_constant("acc_decompose_g_tops", worst["g"])
        check_constant("acc_decompose_h_tops", worst["h"])
        check_constant("acc_split_tops", worst["split"])


# -- 7: generic estimate --------------------------------------------------------------


def test_acceptance_07_generic_estimate():
    with criterion(7, "generic-estimate"):
        # exponent identity in exact rational arithmetic
        for r in (Fraction(3), Fraction(4), Fraction(6)):
            a = Fraction(1, 2) - 1 / r
            rp = r / (r - 1)
            assert 1 + 2 * a + 2 / rp - 2 == 4 * a
        rng = np.random.default_rng(707)
        weights = {
            "acc_generic_111": (1 / 3, 1 / 3, 1 / 3),
            "acc_generic_001": (0.0, 0.0, 1.0),
            "acc_generic_101": (0.5, 0.0, 0.5),
        }
        worst = {k: 0.0 for k in weights}
        for _ in range(100):
            tiles = random_tiles(FAST, rng, n_squares=3, window=3.0, keep=0.8)
            f_set = indicator_function(FAST, -2.0, 1.0)
            g_set = indicator_function(FAST, -1.5, 2.0)
            h_set = indicator_function(FAST, -0.5, 0.5)
            phase = lambda: np.exp(2j * np.pi * rng.random(FAST.num_points))
            f = SampledFunction(FAST, f_set.values * phase())
            g = SampledFunction(FAST, g_set.values * phase())
            squares = tiles.squares()
            w = len(squares) ** (-3.0 / 4.0)
            h = SequenceH(
                {sq: SampledFunction(FAST, w * h_set.values * phase()) for sq in squares}
            )
            lam = abs(trilinear_form(f, g, h, tiles))
            s1, e1 = size_f(tiles, f).value, energy_f(tiles, f).value
            s2, e2 = size_g(tiles, g).value, energy_g(tiles, g).value
            s3, e3 = size_h(tiles, h, 4.0).value, energy_h(tiles, h, 4.0).value
            if min(e1, e2, e3) == 0:
                continue
            sup_g = sup_average(tiles, g_set.values.real, FAST)
            sup_f = sup_average(tiles, f_set.values.real, FAST)
            for key, th in weights.items():
                bound = generic_bound(
                    GenericBoundInputs(s1, e1, s2, e2, s3, e3, th, th, sup_g, sup_f),
                    4.0,
                )
                if bound > 0:
                    worst[key] = max(worst[key], lam / bound)
        for key, val in worst.items():
            check_constant(key, val)


# -- 8: restricted-type probe -----------------------------------------------------------


def test_acceptance_08_restricted_probe():
    with criterion(8, "restricted-type-probe"):
        t0 = time.perf_counter()
        exps = ExponentTuple.from_pq(3, 3, 4)
        ratios = []
        for count in (1, 4, 16, 64):
            omega = sweep_family(count, seed=808)
            tiles = tiles_for_omega(omega, (-2.0, 2.0))
            rep = restricted_probe(
                tiles,
                PROBE,
                exps,
                interval_mask(PROBE, -1.0, 0.5),
                interval_mask(PROBE, -0.5, 1.0),
                interval_mask(PROBE, -0.5, 0.5),
                h_mode="extremal",
                key=f"acc-sweep-{count}",
                modulation=(2.0, 2.0),
            )
            assert rep.measure_major > 0.5 * rep.measure_h
            ratios.append(rep.ratio)
        variation = max(ratios) / min(ratios)
        print(f"  criterion 8 sweep ratios {['%.5g' % v for v in ratios]}, variation {variation:.4g}")
        assert variation < 2.0

        # counterexample growth at p = 1.2 < r' = 4/3
        rep4 = counterexample_probe(PROBE, 4, p=1.2)
        rep64 = counterexample_probe(PROBE, 64, p=1.2)
        growth = rep64.ratio / rep4.ratio
        print(
            f"  criterion 8 counterexample ratios: n=4 {rep4.ratio:.6g}, "
            f"n=64 {rep64.ratio:.6g}, growth {growth:.4g} (required > 2)"
        )
        elapsed = time.perf_counter() - t0
        print(f"  criterion 8 runtime {elapsed:.1f}s (budget 600s)")
        assert elapsed < 600.0
        assert rep64.ratio > 2.0 * rep4.ratio, (
            f"counterexample growth {growth:.4g} did not exceed 2; the measured "
            f"trend matches the sharp restricted-type rate n^(1/p - 1/r') = n^(1/12) "
            f"(about 1.26 over 4 -> 64), which cannot reach the stated factor"
        )


# -- 9: rough-domain domination ----------------------------------------------------------


def test_acceptance_09_bochner():
    with criterion(9, "rough-domain-domination"):
        from tfa.bochner_riesz import build_symbol, lr_domination

        grid = Grid(1024, 64.0)
        region = disc_region(1.0, n_max=6)
        cover = whitney_cover(region)
        sym = build_symbol(region, cover, 4.0, 0.25)
        rng = np.random.default_rng(909)
        for _ in range(20):
            f = random_function(grid, rng, band_fraction=0.4)
            g = random_function(grid, rng, band_fraction=0.4)
            lhs, rhs, _ = lr_domination(f, g, sym)
            tol = 1e-8 * max(float(rhs.values.real.max()), 1e-30)
            assert np.all(lhs.values.real <= rhs.values.real + tol)
        hist = shell_histogram(cover, region)
        worst = max(c / 2.0**n for n, c in hist.items() if n >= 1)
        check_constant("whitney_disc_shells", worst)
        ns = [n for n in range(2, 6) if hist.get(n, 0) > 0]
        slope = np.polyfit(ns, [math.log2(hist[n]) for n in ns], 1)[0]
        assert 0.7 <= slope <= 1.3


# -- 10: determinism -----------------------------------------------------------------------


def test_acceptance_10_determinism(tmp_path):
    with criterion(10, "determinism"):
        from tfa.cli import main

        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "instances = 2\nseed = 7\nomega_count = 3\ngrid_n = 1024\n"
            "grid_l = 16\nwindow = 4\n"
        )
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["decompose-suite", "--config", str(cfg), "--out", str(out)]) == 0
            outs.append((out / "decompose_golden.txt").read_bytes())
        assert outs[0] == outs[1] and outs[0]

        sweep_cfg = tmp_path / "sweep.cfg"
        sweep_cfg.write_text(
            "seed = 11\ngrid_n = 4096\ngrid_l = 32\nsweep_sizes = 1,4\nwindow = 4\n"
        )
        csvs = []
        for name in ("c", "d"):
            out = tmp_path / name
            assert main(["probe-sweep", "--config", str(sweep_cfg), "--out", str(out)]) == 0
            csvs.append((out / "probe_sweep.csv").read_bytes())
        assert csvs[0] == csvs[1] and csvs[0]
