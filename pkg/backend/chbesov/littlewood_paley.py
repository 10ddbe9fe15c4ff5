"""Dyadic partition of unity, Littlewood-Paley blocks and Besov norms."""

import itertools
import math
from typing import Literal, NamedTuple, Optional

import numpy as np
from dataclasses_json import DataClassJsonMixin
from pydantic import Field
from pydantic.dataclasses import dataclass

from chbesov.cache import cache
from chbesov.logger import logger
from chbesov.spectral_grid import (
    DEFAULT_DEALIAS,
    GridMismatchError,
    SpectralField,
    TorusGrid,
    lattice,
    lp_norm,
    partial,
    product,
    random_band_limited,
)

# Plateau and support edges of the low-frequency cutoff chi.
CHI_FLAT = 3 / 4
CHI_EDGE = 4 / 3


class SupportError(ValueError):
    """Raised when a field violates the frequency-support precondition."""

    def __init__(self, msg="Field is not supported in the required frequency region"):
        super().__init__(msg)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) for t > 0, zero otherwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def smooth_transition(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp from 0 (t <= 0) to 1 (t >= 1)."""
    rise = smooth_step(t)
    return rise / (rise + smooth_step(1.0 - np.asarray(t, dtype=float)))


def _chi(rho: np.ndarray, shift: float = 0.0) -> np.ndarray:
    t = (np.asarray(rho, dtype=float) - CHI_FLAT - shift) / (CHI_EDGE - CHI_FLAT)
    return np.clip(1.0 - smooth_transition(t), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffPair:
    """Radial cutoffs chi (ball) and psi (annulus) of the dyadic partition.

    `shift` displaces chi only; psi keeps the reference construction. A
    nonzero shift therefore breaks the partition of unity and is used as a
    negative control.
    """

    shift: float = 0.0

    def chi(self, rho: np.ndarray) -> np.ndarray:
        return _chi(rho, self.shift)

    def psi(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return _chi(rho / 2) - _chi(rho)


def build_cutoffs(chi_shift: float = 0.0) -> CutoffPair:
    return CutoffPair(shift=chi_shift)


def partition_sum(cutoffs: CutoffPair, rho: np.ndarray, blocks: int = 40) -> np.ndarray:
    """chi(rho) + sum_{j=0}^{blocks} psi(2^-j rho)."""
    total = cutoffs.chi(rho)
    for j in range(blocks + 1):
        total = total + cutoffs.psi(np.asarray(rho) * 2.0**-j)
    return total


def partition_square_sum(cutoffs: CutoffPair, rho: np.ndarray, blocks: int = 40) -> np.ndarray:
    total = cutoffs.chi(rho) ** 2
    for j in range(blocks + 1):
        total = total + cutoffs.psi(np.asarray(rho) * 2.0**-j) ** 2
    return total


class DyadicPartition:
    """Per-block multiplier tables on the frequency lattice of one grid.

    Table `j` (j = -1..J_max) holds chi(|xi|) for j = -1 and psi(2^-j |xi|)
    otherwise. Instances are immutable and shared through `partition_for`.
    """

    def __init__(self, grid: TorusGrid, cutoffs: CutoffPair):
        self.grid = grid
        self.cutoffs = cutoffs
        radius = lattice(grid).radius

        tables = [cutoffs.chi(radius)]
        j = 0
        while True:
            table = cutoffs.psi(radius * 2.0**-j)
            if not np.any(table):
                break
            tables.append(table)
            j += 1

        for table in tables:
            table.flags.writeable = False
        self._tables = tuple(tables)
        self.J_max = j - 1

    @property
    def indices(self) -> range:
        return range(-1, self.J_max + 1)

    def table(self, j: int) -> Optional[np.ndarray]:
        if j < -1 or j > self.J_max:
            return None
        return self._tables[j + 1]

    def lattice_sum(self) -> np.ndarray:
        return np.sum(self._tables, axis=0)

    def __repr__(self) -> str:
        return f"DyadicPartition(grid={self.grid!r}, J_max={self.J_max})"


@cache
def partition_for(grid: TorusGrid, cutoffs: CutoffPair = CutoffPair()) -> DyadicPartition:
    part = DyadicPartition(grid, cutoffs)
    logger.debug(f"Built dyadic partition for {grid} with J_max={part.J_max}")
    return part


@dataclass(frozen=True)
class BesovParams(DataClassJsonMixin):
    s: float = 0.0
    p: float = Field(default=2.0, ge=1)
    r: float = Field(default=math.inf, ge=1)


def dyadic_block(f: SpectralField, j: int, part: DyadicPartition) -> SpectralField:
    if f.grid != part.grid:
        raise GridMismatchError("Partition was built on a different grid than the field")
    table = part.table(j)
    if table is None:
        return SpectralField.zeros(f.grid, f.components)
    return f.with_coeffs(f.coeffs * table)


def block_norms(f: SpectralField, p: float, part: DyadicPartition) -> np.ndarray:
    """(||Delta_j f||_{L^p}) for j = -1..J_max."""
    return np.array([lp_norm(dyadic_block(f, j, part), p) for j in part.indices])


def sequence_norm(values: np.ndarray, r: float) -> float:
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(r):
        return float(np.max(values)) if values.size else 0.0
    return float(np.sum(values**r) ** (1.0 / r))


def besov_from_blocks(norms: np.ndarray, s: float, r: float = math.inf) -> float:
    """Besov norm from precomputed block norms (first entry is j = -1)."""
    weights = 2.0 ** (s * np.arange(-1, len(norms) - 1))
    return sequence_norm(weights * norms, r)


def besov_norm(f: SpectralField, params: BesovParams, part: DyadicPartition) -> float:
    return besov_from_blocks(block_norms(f, params.p, part), params.s, params.r)


class BernsteinReport(NamedTuple):
    support: str
    scale: float
    order: int
    derivative_norm: float
    base_norm: float
    ratio: float


def _support_radius(f: SpectralField, rtol: float = 1e-14) -> np.ndarray:
    peak = np.max(np.abs(f.coeffs), axis=0)
    threshold = rtol * float(np.max(peak)) if peak.size else 0.0
    return lattice(f.grid).radius[peak > threshold]


def bernstein_check(
    f: SpectralField,
    scale: float,
    order: int,
    p: float = 2.0,
    q: float = 2.0,
    support: Literal["annulus", "ball"] = "annulus",
) -> BernsteinReport:
    """Measure ||D^k f||_{L^q} / (scale^(k + d(1/p - 1/q)) ||f||_{L^p}).

    The derivative norm is the supremum over multi-indices of order k. The
    support of f must lie in scale * [3/4, 8/3] (annulus) or scale * [0, 4/3]
    (ball).
    """
    if order not in (1, 2):
        raise ValueError(f"Derivative order must be 1 or 2, got {order}")
    if q < p:
        raise ValueError("Bernstein check requires q >= p")

    radii = _support_radius(f)
    if radii.size:
        if support == "annulus":
            ok = (
                radii.min() >= CHI_FLAT * scale * (1 - 1e-12)
                and radii.max() <= 2 * CHI_EDGE * scale * (1 + 1e-12)
            )
        else:
            ok = radii.max() <= CHI_EDGE * scale * (1 + 1e-12)
        if not ok:
            raise SupportError(
                f"Frequency support [{radii.min():.4g}, {radii.max():.4g}] is outside the {support} of scale {scale}"
            )

    derivative_norm = 0.0
    for alpha in itertools.combinations_with_replacement(range(f.grid.d), order):
        g = f
        for axis in alpha:
            g = partial(g, axis)
        derivative_norm = max(derivative_norm, lp_norm(g, q))

    base_norm = lp_norm(f, p)
    exponent = order + f.grid.d * (1 / p - 1 / q)
    ratio = derivative_norm / (scale**exponent * base_norm) if base_norm > 0 else 0.0
    return BernsteinReport(support, scale, order, derivative_norm, base_norm, ratio)


def product_law_constant(
    u: SpectralField, v: SpectralField, s: float, p: float, r: float, part: DyadicPartition
) -> float:
    """||uv||_{B^{s-2}} / (||u||_{B^{s-2}} ||v||_{B^{s-1}})."""
    uv = product(u, v)
    numerator = besov_norm(uv, BesovParams(s - 2, p, r), part)
    denominator = besov_norm(u, BesovParams(s - 2, p, r), part) * besov_norm(
        v, BesovParams(s - 1, p, r), part
    )
    return numerator / denominator


def algebra_law_constant(
    u: SpectralField, v: SpectralField, s: float, p: float, r: float, part: DyadicPartition
) -> float:
    """||uv||_{B^s} / (||u||_{B^s} ||v||_inf + ||u||_inf ||v||_{B^s})."""
    params = BesovParams(s, p, r)
    uv = product(u, v)
    denominator = besov_norm(u, params, part) * lp_norm(v, math.inf) + lp_norm(
        u, math.inf
    ) * besov_norm(v, params, part)
    return besov_norm(uv, params, part) / denominator


class LawConstants(NamedTuple):
    product: float
    algebra: float
    samples: int


def measure_law_constants(
    grid: TorusGrid,
    n_samples: int = 8,
    seed: int = 0,
    s: float = 2.5,
    p: float = 2.0,
    r: float = math.inf,
    cutoffs: CutoffPair = CutoffPair(),
    fraction: float = DEFAULT_DEALIAS,
) -> LawConstants:
    """Largest product-law and algebra-law ratios over a seeded random ensemble."""
    part = partition_for(grid, cutoffs)
    rng = np.random.default_rng(seed)
    worst_product = 0.0
    worst_algebra = 0.0
    for _ in range(n_samples):
        # Half band so the product is resolved without truncation.
        u = random_band_limited(grid, rng, components=1, fraction=fraction / 2, decay=1.0)
        v = random_band_limited(grid, rng, components=1, fraction=fraction / 2, decay=1.0)
        worst_product = max(worst_product, product_law_constant(u, v, s, p, r, part))
        worst_algebra = max(worst_algebra, algebra_law_constant(u, v, s, p, r, part))
    return LawConstants(worst_product, worst_algebra, n_samples)
