"""Rough-domain bilinear multipliers through Whitney coverings.

A symbol on a bounded open frequency region is prescribed as a weighted
sum of tensor bumps over the Whitney squares, with per-shell weights
2^{-n(2d-1)/r'} n^{-(1/r'+eps)} (the n = 0 shell merges into n = 1).
The pointwise domination splits the multiplier into the ell^r square
function over the squares times a scalar shell factor; both sides are
evaluated on the grid and compared pointwise.

d (half the frequency-plane dimension) stays 1 in this laboratory; the
(2d-1) exponents are kept symbolic for documentation fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .analysis_core import SampledFunction, band_profile, require_same_grid
from .geometry import (
    FrequencySquare,
    OpenRegion,
    SquareCollection,
    shell_histogram,
    shell_index,
)
from .operators import lr_reduce, project, spectrum


def phi_weight(t: float, r: float, eps: float, d: int = 1) -> float:
    """The boundary weight t^{(2d-1)/r'} * (1 + log t)^{-(1/r' + eps)}.

    Natural logarithm, implemented exactly as written: for t < 1/e the
    base 1 + log t is negative, so the value is real only when the total
    exponent is integral (signed power; e.g. r = 4, eps = 1/4 gives
    exponent -1); otherwise a ValueError is raised.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if not r > 2:
        raise ValueError("r must exceed 2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    rp = r / (r - 1.0)
    lead = t ** ((2 * d - 1) / rp)
    base = 1.0 + math.log(t)
    expo = -(1.0 / rp + eps)
    if base > 0:
        return lead * base**expo
    if base == 0.0:
        return math.inf
    if abs(expo - round(expo)) < 1e-12:
        k = int(round(expo))
        return lead * (base**k if k >= 0 else 1.0 / base ** (-k))
    raise ValueError(
        f"(1 + log t) = {base:.6g} < 0 with non-integral exponent {expo:.6g}: "
        "the weight as written is not real here"
    )


def shell_coefficient(n: int, r: float, eps: float, d: int = 1) -> float:
    """Per-shell renormalization 2^{-n(2d-1)/r'} n^{-(1/r'+eps)}; the
    n <= 0 shells use the n = 1 weight."""
    rp = r / (r - 1.0)
    m = max(n, 1)
    return 2.0 ** (-m * (2 * d - 1) / rp) * float(m) ** (-(1.0 / rp + eps))


@dataclass(frozen=True)
class SymbolPiece:
    square: FrequencySquare
    shell: int
    coefficient: float


class RoughSymbol:
    """Per-square tensor-bump pieces with shell-renormalized weights.

    The full symbol is exactly the sum of its pieces (the construction
    prescribes it that way); each piece's frequency support is the
    (11/10)-dilate of its Whitney square.
    """

    __slots__ = ("region", "cover", "r", "eps", "d", "pieces")

    def __init__(self, region: OpenRegion, cover: SquareCollection, r: float, eps: float, d: int = 1):
        if len(cover) == 0:
            raise ValueError("empty cover")
        pieces = []
        for sq in cover:
            n = shell_index(sq, region)
            pieces.append(SymbolPiece(sq, n, shell_coefficient(n, r, eps, d)))
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "cover", cover)
        object.__setattr__(self, "r", float(r))
        object.__setattr__(self, "eps", float(eps))
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "pieces", tuple(pieces))

    def __setattr__(self, *a):
        raise AttributeError("RoughSymbol is immutable")

    def piece_values(self, xi: np.ndarray, eta: np.ndarray, piece: SymbolPiece) -> np.ndarray:
        """The piece on a frequency mesh: coefficient times the tensor bump."""
        from .geometry import as_interval

        b1 = band_profile(xi, as_interval(piece.square.omega1))
        b2 = band_profile(eta, as_interval(piece.square.omega2))
        return piece.coefficient * np.outer(b1, b2)

    def symbol_values(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        total = np.zeros((xi.size, eta.size))
        for piece in self.pieces:
            total += self.piece_values(xi, eta, piece)
        return total

    def shell_sup_bounds(self) -> dict[int, float]:
        """Per-shell sup of |pieces| (the template peak is e^{-1})."""
        peak = math.exp(-1.0) ** 2
        out: dict[int, float] = {}
        for piece in self.pieces:
            out[piece.shell] = max(out.get(piece.shell, 0.0), piece.coefficient * peak)
        return dict(sorted(out.items()))

    def export_text(self) -> str:
        """Per-square records 'j k1 k2 coefficient'."""
        lines = []
        for piece in sorted(self.pieces, key=lambda p: p.square):
            sq = piece.square
            lines.append(
                f"{sq.scale} {sq.omega1.position} {sq.omega2.position} "
                f"{piece.coefficient:.17g}"
            )
        return "\n".join(lines) + "\n"

    def shell_histogram_csv(self) -> str:
        hist = shell_histogram(self.cover, self.region)
        lines = ["n,count"]
        lines.extend(f"{n},{c}" for n, c in hist.items())
        return "\n".join(lines) + "\n"


def build_symbol(
    region: OpenRegion, cover: SquareCollection, r: float, eps: float, d: int = 1
) -> RoughSymbol:
    """Prescribe a symbol on the region satisfying the boundary-decay
    condition, as the shell-weighted sum of Whitney tensor bumps."""
    return RoughSymbol(region, cover, r, eps, d)


def apply_symbol_piece(
    f: SampledFunction, g: SampledFunction, piece: SymbolPiece
) -> np.ndarray:
    grid = require_same_grid(f, g)
    fs, gs = spectrum(f), spectrum(g)
    return (
        project(fs, grid, piece.square.omega1, sharp=False)
        * project(gs, grid, piece.square.omega2, sharp=False)
    )


def shell_factor(
    cover: SquareCollection,
    region: OpenRegion,
    r: float,
    eps: float,
    d: int = 1,
) -> float:
    """( sum_n 2^{-n(2d-1)} n^{-1-r' eps} #Omega_n )^{1/r'} with the
    n <= 0 shells merged into n = 1."""
    rp = r / (r - 1.0)
    hist = shell_histogram(cover, region)
    total = 0.0
    for n, count in hist.items():
        m = max(n, 1)
        total += 2.0 ** (-m * (2 * d - 1)) * float(m) ** (-1.0 - rp * eps) * count
    return total ** (1.0 / rp)


def shell_factor_partial_sums(
    cover: SquareCollection, region: OpenRegion, r: float, eps: float, d: int = 1
) -> list[tuple[int, float]]:
    """Running value of the shell factor as shells accumulate (for
    convergence diagnostics)."""
    rp = r / (r - 1.0)
    hist = shell_histogram(cover, region)
    out = []
    total = 0.0
    for n in sorted(hist):
        m = max(n, 1)
        total += 2.0 ** (-m * (2 * d - 1)) * float(m) ** (-1.0 - rp * eps) * hist[n]
        out.append((n, total ** (1.0 / rp)))
    return out


def lr_domination(
    f: SampledFunction, g: SampledFunction, symbol: RoughSymbol
) -> tuple[SampledFunction, SampledFunction, float]:
    """(|T_m(f,g)|, ell^r aggregate of the pieces times the shell factor,
    shell factor).

    T_m is the sum of the per-square bilinear pieces weighted by the
    shell coefficients; the bound is their ell^r aggregate times the
    scalar factor, pointwise at every grid point.
    """
    grid = require_same_grid(f, g)
    r = symbol.r
    fs, gs = spectrum(f), spectrum(g)
    pieces = [
        project(fs, grid, piece.square.omega1, sharp=False)
        * project(gs, grid, piece.square.omega2, sharp=False)
        for piece in symbol.pieces
    ]
    total = np.zeros(grid.num_points, dtype=np.complex128)
    for piece, vals in zip(symbol.pieces, pieces):
        total += piece.coefficient * vals
    lhs = SampledFunction(grid, np.abs(total).astype(complex))
    aggregate = lr_reduce(pieces, r, grid)
    factor = shell_factor(symbol.cover, symbol.region, r, symbol.eps, symbol.d)
    rhs = SampledFunction(grid, aggregate.values.real * factor)
    return lhs, rhs, factor
