"""Experiment runner: `tfa <kind> --config <path> [--seed k] [--out dir]`.

Configs are flat key = value text files ('#' starts a comment).  Every
runner writes its artifacts into the output directory atomically
(temp + rename) and returns a machine-readable failure list; identical
config + seed reproduce byte-identical outputs.  TFA_THREADS caps the
evaluators' data parallelism (reductions stay in fixed order either
way).

Exit codes: 0 all suite invariants pass, 1 failures (listed in
failures.json), 2 configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis_core import Grid, random_function
from .geometry import SquareCollection, disc_region, square, whitney_cover
from .operators import (
    ExponentTuple,
    SequenceH,
    eval_RF_r,
    eval_model,
    tiles_for_omega,
    trilinear_form,
)
from .probe import (
    counterexample_config,
    counterexample_probe,
    interval_mask,
    restricted_probe,
    summarize_csv,
)

KINDS = (
    "rf-baseline",
    "model-oracle",
    "column-suite",
    "energy-suite",
    "decompose-suite",
    "split-suite",
    "probe-sweep",
    "counterexample",
    "bochner",
)


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    grid_n: int = 2048
    grid_l: float = 32.0
    seed: int = 0
    out_dir: Path = Path(".")
    # omega source: "file:<path>" or a generator name
    omega_source: str = "random-disjoint"
    omega_count: int = 8
    omega_scale_min: int = -1
    omega_scale_max: int = 0
    # exponents
    r: float = 4.0
    p: float = 3.0
    q: float = 3.0
    # suite sizing
    instances: int = 20
    window: float = 4.0
    # probe sweep (extremal h measures the sup over admissible h, which
    # is the quantity whose boundedness the sweep tracks)
    sweep_sizes: tuple[int, ...] = (1, 4, 16, 64)
    h_mode: str = "extremal"
    # counterexample
    strip_sizes: tuple[int, ...] = (4, 8, 16, 32, 64)
    p_counter: float = 1.2
    # bochner
    disc_n_max: int = 5
    eps: float = 0.25
    raw: dict = field(default_factory=dict)

    def grid(self) -> Grid:
        return Grid(self.grid_n, self.grid_l)


_INT_KEYS = {
    "grid_n": "grid_n",
    "seed": "seed",
    "omega_count": "omega_count",
    "omega_scale_min": "omega_scale_min",
    "omega_scale_max": "omega_scale_max",
    "instances": "instances",
    "disc_n_max": "disc_n_max",
}
_FLOAT_KEYS = {
    "grid_l": "grid_l",
    "r": "r",
    "p": "p",
    "q": "q",
    "window": "window",
    "p_counter": "p_counter",
    "eps": "eps",
}
_STR_KEYS = {"omega_source": "omega_source", "h_mode": "h_mode"}
_LIST_KEYS = {"sweep_sizes": "sweep_sizes", "strip_sizes": "strip_sizes"}


def parse_config(path: Path, kind: str) -> ExperimentConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    cfg = ExperimentConfig(kind=kind)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in _INT_KEYS:
                setattr(cfg, _INT_KEYS[key], int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, _FLOAT_KEYS[key], float(value))
            elif key in _STR_KEYS:
                setattr(cfg, _STR_KEYS[key], value)
            elif key in _LIST_KEYS:
                setattr(
                    cfg, _LIST_KEYS[key], tuple(int(v) for v in value.split(",") if v)
                )
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
        cfg.raw[key] = value
    n = cfg.grid_n
    if n < 2 or n & (n - 1):
        raise ConfigError(f"{path}: grid_n must be a power of two, got {n}")
    if cfg.omega_source.startswith("file:"):
        omega_path = Path(cfg.omega_source[5:])
        if not omega_path.exists():
            raise ConfigError(f"{path}: omega file {omega_path} does not exist")
    return cfg


# ---------------------------------------------------------------------------
# Omega generators
# ---------------------------------------------------------------------------


def generate_omega(generator: str, cfg: ExperimentConfig, seed: int) -> SquareCollection:
    """Deterministic square families: rejection-sampled disjoint squares,
    the strip configuration, or a Whitney disc cover."""
    if generator.startswith("file:"):
        return SquareCollection.from_text(Path(generator[5:]).read_text())
    if generator == "aligned-strip":
        return counterexample_config(cfg.omega_count, "eta-strip")
    if generator == "whitney-disc":
        region = disc_region(1.0, n_max=cfg.disc_n_max)
        return whitney_cover(region)
    if generator == "random-disjoint":
        rng = np.random.default_rng(seed)
        grid = cfg.grid()
        side_hi = 2.0**cfg.omega_scale_max
        box = max(1.0, 0.49 * grid.nyquist - 1.1 * side_hi)
        chosen: list = []
        attempts = 0
        while len(chosen) < cfg.omega_count:
            attempts += 1
            if attempts > 10_000:
                raise ConfigError(
                    f"could not place {cfg.omega_count} disjoint squares "
                    f"in 10000 attempts"
                )
            j = int(rng.integers(cfg.omega_scale_min, cfg.omega_scale_max + 1))
            kmax = max(1, int(box / 2.0**j))
            cand = square(j, int(rng.integers(-kmax, kmax)), int(rng.integers(-kmax, kmax)))
            if all(cand.disjoint_from(s) for s in chosen):
                chosen.append(cand)
        return SquareCollection(chosen)
    raise ConfigError(f"unknown omega generator {generator!r}")


# ---------------------------------------------------------------------------
# Atomic artifact writing
# ---------------------------------------------------------------------------


def write_atomic(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# Runners (one per kind)
# ---------------------------------------------------------------------------


def run_rf_baseline(cfg: ExperimentConfig) -> list[str]:
    grid = Grid(max(cfg.grid_n, 4096), cfg.grid_l)
    rng = np.random.default_rng(cfg.seed)
    f = random_function(grid, rng, band_fraction=0.5)
    # a sharp partition of the whole frequency range
    nyq = grid.nyquist
    cuts = np.linspace(-nyq, nyq, 17)
    bands = [(float(cuts[i]), float(cuts[i + 1])) for i in range(16)]
    failures: list[str] = []
    lines = ["p,r,ratio"]
    for p in (2.0, 3.0, 4.0, 6.0):
        for r in (2.0, cfg.r):
            out = eval_RF_r(f, bands, r, sharp=True)
            ratio = out.lp_norm(p) / f.lp_norm(p)
            lines.append(f"{p:.17g},{r:.17g},{ratio:.17g}")
            if p == 2.0 and r == 2.0 and abs(ratio - 1.0) > 1e-9:
                failures.append(f"rf-baseline: sharp r=2 partition ratio {ratio} != 1")
            if p == 2.0 and r > 2.0 and ratio > 1.0 + 1e-9:
                failures.append(f"rf-baseline: ell^{r} ratio {ratio} exceeds 1")
    write_atomic(cfg.out_dir / "rf_baseline.csv", "\n".join(lines) + "\n")
    return failures


def run_model_oracle(cfg: ExperimentConfig) -> list[str]:
    grid = Grid(min(cfg.grid_n, 256), 8.0)
    rng = np.random.default_rng(cfg.seed)
    failures: list[str] = []
    lines = ["instance,rel_err"]
    for i in range(min(cfg.instances, 8)):
        omega = generate_omega("random-disjoint", cfg, cfg.seed + i)
        small = SquareCollection(list(omega)[: min(4, len(omega))])
        tiles = tiles_for_omega(small, (-2.0, 2.0))
        f = random_function(grid, rng)
        g = random_function(grid, rng)
        got = eval_model(f, g, tiles, cfg.r)
        h = SequenceH({sq: random_function(grid, rng) for sq in tiles.squares()})
        lam = trilinear_form(f, g, h, tiles)
        # duality recomputation: sum over squares of the paired inner sums
        from .operators import model_inner_sum

        paired = 0j
        for sq in tiles.squares():
            u = model_inner_sum(f, g, tiles.tiles_for_square(sq))
            paired += grid.spacing * np.sum(u * np.conj(h[sq].values))
        err = abs(paired - lam) / max(abs(lam), 1e-12)
        lines.append(f"{i},{err:.17g}")
        if err > 1e-8:
            failures.append(f"model-oracle: duality mismatch {err} on instance {i}")
        if not np.all(np.isfinite(got.values.real)):
            failures.append(f"model-oracle: non-finite output on instance {i}")
    write_atomic(cfg.out_dir / "model_oracle.csv", "\n".join(lines) + "\n")
    return failures


def _suite_instances(cfg: ExperimentConfig, grid: Grid):
    rng = np.random.default_rng(cfg.seed)
    for i in range(cfg.instances):
        omega = generate_omega("random-disjoint", cfg, cfg.seed + 1000 + i)
        small = SquareCollection(list(omega)[: min(cfg.omega_count, len(omega))])
        tiles = tiles_for_omega(small, (-cfg.window / 2, cfg.window / 2))
        f = random_function(grid, rng)
        g = random_function(grid, rng)
        h = SequenceH({sq: random_function(grid, rng) for sq in tiles.squares()})
        yield i, tiles, f, g, h


def run_column_suite(cfg: ExperimentConfig) -> list[str]:
    from .columns_rows import column_estimate_sides, maximal_column

    grid = cfg.grid()
    failures: list[str] = []
    lines = ["instance,lhs,rhs,ratio"]
    worst = 0.0
    for i, tiles, f, g, h in _suite_instances(cfg, grid):
        if len(tiles) == 0:
            continue
        top = max(tiles, key=lambda t: (t.spatial.length, -t.spatial.left))
        col = maximal_column(tiles, top)
        if not col.members:
            continue
        lhs, rhs = column_estimate_sides(col, f, g, h, cfg.r)
        ratio = lhs / rhs if rhs > 0 else 0.0
        worst = max(worst, ratio)
        lines.append(f"{i},{lhs:.17g},{rhs:.17g},{ratio:.17g}")
    from .calibration import CONSTANTS, REGRESSION_FACTOR

    if worst > REGRESSION_FACTOR * CONSTANTS["column_estimate"]:
        failures.append(
            f"column-suite: worst ratio {worst} exceeds "
            f"{REGRESSION_FACTOR} x {CONSTANTS['column_estimate']}"
        )
    write_atomic(cfg.out_dir / "column_suite.csv", "\n".join(lines) + "\n")
    return failures


def run_energy_suite(cfg: ExperimentConfig) -> list[str]:
    from .size_energy import energy_f, energy_g, verify_energy_witness_fg

    grid = cfg.grid()
    failures: list[str] = []
    lines = ["instance,energy_f,norm_f,energy_g,norm_g"]
    for i, tiles, f, g, h in _suite_instances(cfg, grid):
        rep_f = energy_f(tiles, f)
        rep_g = energy_g(tiles, g)
        if not verify_energy_witness_fg(rep_f, f, "f"):
            failures.append(f"energy-suite: inadmissible f witness on instance {i}")
        if not verify_energy_witness_fg(rep_g, g, "g"):
            failures.append(f"energy-suite: inadmissible g witness on instance {i}")
        lines.append(
            f"{i},{rep_f.value:.17g},{f.l2_norm():.17g},"
            f"{rep_g.value:.17g},{g.l2_norm():.17g}"
        )
    write_atomic(cfg.out_dir / "energy_suite.csv", "\n".join(lines) + "\n")
    return failures


def run_decompose_suite(cfg: ExperimentConfig) -> list[str]:
    from .decomposition import decompose_f
    from .size_energy import energy_f, size_f

    grid = cfg.grid()
    failures: list[str] = []
    reports: list[str] = []
    for i, tiles, f, g, h in _suite_instances(cfg, grid):
        e1 = energy_f(tiles, f).value
        s1 = size_f(tiles, f).value
        if s1 == 0 or e1 == 0:
            continue
        n0 = math.floor(math.log2(e1 / s1))
        part = decompose_f(tiles, n0, e1, f)
        together = sorted(list(part.residual) + part.extracted_tiles())
        if together != list(tiles):
            failures.append(f"decompose-suite: partition broken on instance {i}")
        if size_f(part.residual, f).value > 2.0 ** (-n0 - 1) * e1 * (1 + 1e-12):
            failures.append(f"decompose-suite: size halving failed on instance {i}")
        reports.append(part.report())
    write_atomic(cfg.out_dir / "decompose_golden.txt", "".join(reports))
    return failures


def run_split_suite(cfg: ExperimentConfig) -> list[str]:
    from .decomposition import split

    grid = cfg.grid()
    failures: list[str] = []
    reports: list[str] = []
    for i, tiles, f, g, h in _suite_instances(cfg, grid):
        out = split(tiles, f, g, h, cfg.r)
        if sorted(out.all_tiles()) != list(tiles):
            failures.append(f"split-suite: partition broken on instance {i}")
        reports.append(out.report())
    write_atomic(cfg.out_dir / "split_golden.txt", "".join(reports))
    return failures


def run_probe_sweep(cfg: ExperimentConfig) -> list[str]:
    from .probe import sweep_family

    grid = cfg.grid()
    exps = ExponentTuple.from_pq(cfg.p, cfg.q, cfg.r)
    failures: list[str] = []
    reports = []
    for count in cfg.sweep_sizes:
        omega = sweep_family(count, cfg.seed)
        tiles = tiles_for_omega(omega, (-cfg.window / 2, cfg.window / 2))
        rep = restricted_probe(
            tiles,
            grid,
            exps,
            interval_mask(grid, -1.0, 0.5),
            interval_mask(grid, -0.5, 1.0),
            interval_mask(grid, -0.5, 0.5),
            h_mode=cfg.h_mode,
            key=f"sweep-{count}",
            seed=cfg.seed,
            modulation=(2.0, 2.0),
        )
        reports.append(rep)
        write_atomic(cfg.out_dir / f"probe_{count}.json", rep.to_json())
    ratios = [r.ratio for r in reports if r.ratio > 0]
    if ratios and max(ratios) > 2.0 * min(ratios):
        failures.append(
            f"probe-sweep: ratios vary by {max(ratios) / min(ratios):.3g} > 2"
        )
    write_atomic(cfg.out_dir / "probe_sweep.csv", summarize_csv(reports))
    return failures


def run_counterexample(cfg: ExperimentConfig) -> list[str]:
    grid = cfg.grid()
    failures: list[str] = []
    reports = []
    for n in cfg.strip_sizes:
        rep = counterexample_probe(grid, n, cfg.p_counter, cfg.r)
        reports.append(rep)
        write_atomic(cfg.out_dir / f"counterexample_{n}.json", rep.to_json())
    ratios = [r.ratio for r in reports]
    monotone = all(a <= b * (1 + 1e-9) for a, b in zip(ratios, ratios[1:]))
    lines = ["n,ratio"]
    lines.extend(f"{n},{r:.17g}" for n, r in zip(cfg.strip_sizes, ratios))
    lines.append(f"monotone_trend,{'yes' if monotone else 'no'}")
    write_atomic(cfg.out_dir / "counterexample.csv", "\n".join(lines) + "\n")
    if not monotone:
        failures.append("counterexample: ratio trend is not monotone increasing")
    return failures


def run_bochner(cfg: ExperimentConfig) -> list[str]:
    from .bochner_riesz import build_symbol, lr_domination

    grid = Grid(min(cfg.grid_n, 1024), 64.0)
    region = disc_region(1.0, n_max=cfg.disc_n_max)
    cover = whitney_cover(region)
    sym = build_symbol(region, cover, cfg.r, cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    failures: list[str] = []
    for i in range(min(cfg.instances, 5)):
        f = random_function(grid, rng, band_fraction=0.4)
        g = random_function(grid, rng, band_fraction=0.4)
        lhs, rhs, _ = lr_domination(f, g, sym)
        tol = 1e-8 * max(float(rhs.values.real.max()), 1e-30)
        if not np.all(lhs.values.real <= rhs.values.real + tol):
            failures.append(f"bochner: pointwise domination failed on instance {i}")
    write_atomic(cfg.out_dir / "symbol.txt", sym.export_text())
    write_atomic(cfg.out_dir / "shell_histogram.csv", sym.shell_histogram_csv())
    return failures


_RUNNERS = {
    "rf-baseline": run_rf_baseline,
    "model-oracle": run_model_oracle,
    "column-suite": run_column_suite,
    "energy-suite": run_energy_suite,
    "decompose-suite": run_decompose_suite,
    "split-suite": run_split_suite,
    "probe-sweep": run_probe_sweep,
    "counterexample": run_counterexample,
    "bochner": run_bochner,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; writes artifacts plus failures.json and a
    run manifest (seed recorded) into the output directory."""
    failures = _RUNNERS[cfg.kind](cfg)
    manifest = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "grid_n": cfg.grid_n,
        "grid_l": cfg.grid_l,
        "version": __version__,
        "config": cfg.raw,
        "failures": failures,
    }
    write_atomic(cfg.out_dir / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True))
    if failures:
        write_atomic(
            cfg.out_dir / "failures.json", json.dumps(failures, indent=1)
        )
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tfa",
        description="Run square-function laboratory experiments from a config file.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.kind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
