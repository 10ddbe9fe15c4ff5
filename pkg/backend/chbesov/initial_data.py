"""Lacunary initial data built from a compactly band-limited bump.

Every profile is assembled directly on the frequency lattice: a bump with
Fourier transform theta is modulated by cosines whose frequencies
(17/12) 2^{kn} are exact lattice points, then tensored with the bump along
the transverse axes. No spatial sampling is involved, so frequency supports
are exact.
"""

import math
from functools import reduce
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from dataclasses_json import DataClassJsonMixin
from pydantic import Field
from pydantic.dataclasses import dataclass

from chbesov.littlewood_paley import DyadicPartition, dyadic_block, smooth_transition
from chbesov.logger import logger
from chbesov.spectral_grid import (
    DEFAULT_DEALIAS,
    DEFAULT_PERIOD,
    SpectralField,
    TorusGrid,
    lp_norm,
    product,
)

BASE_FREQUENCY = 17 / 12

Constraint = Literal["sigma", "band", "lattice", "index", "dimension"]


class InadmissibleSpecError(ValueError):
    """Raised when initial-data parameters cannot be realised on a grid."""

    def __init__(self, constraint: Constraint, msg: Optional[str] = None):
        self.constraint = constraint
        super().__init__(f"[{constraint}] {msg or 'inadmissible initial-data spec'}")


class Taps(NamedTuple):
    # Signed lattice offsets
    offsets: np.ndarray
    # Fourier coefficients at those offsets
    values: np.ndarray

    @property
    def reach(self) -> int:
        """Largest |offset| carrying a nonzero coefficient."""
        nonzero = self.offsets[self.values != 0]
        return int(np.max(np.abs(nonzero))) if nonzero.size else 0

    def squared(self) -> "Taps":
        """Taps of the pointwise square (discrete self-convolution)."""
        values = np.convolve(self.values, self.values)
        start = 2 * int(self.offsets[0])
        return Taps(np.arange(start, start + values.size), values)


@dataclass(frozen=True)
class BumpProfile:
    """Even bump whose Fourier transform is 1 on |xi| <= inner and 0 past outer."""

    inner: float = 0.25
    outer: float = 0.5

    def theta(self, xi: np.ndarray) -> np.ndarray:
        t = (np.abs(np.asarray(xi, dtype=float)) - self.inner) / (self.outer - self.inner)
        return np.clip(1.0 - smooth_transition(t), 0.0, 1.0)

    def samples(self, L: float = DEFAULT_PERIOD, reach: int = 6) -> np.ndarray:
        """theta at the lattice points m = -reach..reach of period L."""
        m = np.arange(-reach, reach + 1)
        return self.theta(m * 2 * math.pi / L)

    def taps(self, L: float = DEFAULT_PERIOD) -> Taps:
        reach = math.ceil(self.outer * L / (2 * math.pi))
        offsets = np.arange(-reach, reach + 1)
        return Taps(offsets, self.theta(offsets * 2 * math.pi / L) / L)

    def center_value(self, L: float = DEFAULT_PERIOD) -> float:
        """b(0), the bump's value at the origin."""
        return float(np.sum(self.taps(L).values))


def bump() -> BumpProfile:
    return BumpProfile()


@dataclass(frozen=True)
class InitialDataSpec(DataClassJsonMixin):
    # Spatial dimension
    d: int = Field(default=2, ge=2, le=3)
    # Lacunarity: block n sits at dyadic index k*n
    k: int = Field(default=2, ge=1)
    # Number of modulated blocks beyond n = 0
    N: int = Field(default=3, ge=1)
    sigma: float = 4.5
    p: float = Field(default=2.0, ge=1)

    @property
    def sigma_threshold(self) -> float:
        return 2 + max(1 + self.d / self.p, 1.5)

    @property
    def s(self) -> float:
        return self.sigma - 2

    def weight(self, n: int) -> float:
        return 2.0 ** (-self.k * n * self.sigma)

    def carrier_frequency(self, n: int) -> float:
        return BASE_FREQUENCY * 2.0 ** (self.k * n)

    @property
    def highest_frequency(self) -> float:
        return BASE_FREQUENCY * (2.0 ** (self.k * self.N) + 2.0 ** (self.k * (self.N - 1)))


def carrier_index(frequency: float, grid: TorusGrid) -> int:
    value = frequency / grid.fundamental
    index = round(value)
    if abs(value - index) > 1e-9 * max(1.0, abs(value)):
        raise InadmissibleSpecError(
            "lattice", f"frequency {frequency} is not a lattice point for period {grid.L}"
        )
    return int(index)


def _modulated_axis(
    taps: Taps,
    carriers: Sequence[tuple[int, float]],
    size: int,
    limit: float,
    strict: bool,
) -> np.ndarray:
    """1-D coefficients of sum_c weight_c * taps shifted to index c.

    Indices with |m| >= limit are refused when `strict`, dropped otherwise.
    """
    out = np.zeros(size, dtype=np.complex128)
    for carrier, weight in carriers:
        idx = carrier + taps.offsets
        keep = np.abs(idx) < limit
        if strict and np.any(taps.values[~keep] != 0):
            raise InadmissibleSpecError(
                "band",
                f"carrier index {carrier} with reach {taps.reach} leaves the band |m| < {limit:.6g}",
            )
        out[idx[keep] % size] += weight * taps.values[keep]
    return out


def _tensor(first: np.ndarray, transverse: np.ndarray, d: int) -> np.ndarray:
    return reduce(np.multiply.outer, [transverse] * (d - 1), first)


def _separable(
    grid: TorusGrid,
    taps: Taps,
    carriers: Sequence[tuple[int, float]],
    band: float,
    strict: bool,
) -> np.ndarray:
    first = _modulated_axis(taps, carriers, grid.M, grid.band_edge(band, 0), strict)
    transverse = _modulated_axis(
        taps, [(0, 1.0)], grid.transverse, grid.band_edge(band, min(1, grid.d - 1)), strict
    )
    return _tensor(first, transverse, grid.d)


def _vector_in_first(grid: TorusGrid, scalar: np.ndarray) -> SpectralField:
    coeffs = np.zeros((grid.d,) + grid.shape, dtype=np.complex128)
    coeffs[0] = scalar
    return SpectralField(grid, coeffs)


def _cosine(index: int, weight: float = 1.0) -> list[tuple[int, float]]:
    return [(index, weight / 2), (-index, weight / 2)]


def f_profile(
    k: int,
    n: int,
    grid: TorusGrid,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> SpectralField:
    """b(x1) cos((17/12) 2^{kn} x1) b(x2)...b(xd) in the first component."""
    index = carrier_index(BASE_FREQUENCY * 2.0 ** (k * n), grid)
    taps = profile.taps(grid.L)
    return _vector_in_first(grid, _separable(grid, taps, _cosine(index), band, strict=True))


def g_profile(
    k: int,
    m: int,
    n: int,
    sign: Literal[1, -1],
    grid: TorusGrid,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> SpectralField:
    """Bump modulated at (17/12)(2^{kn} + sign 2^{km}), requires 0 <= m < n."""
    if not 0 <= m < n:
        raise InadmissibleSpecError("index", f"g profile requires 0 <= m < n, got m={m}, n={n}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    frequency = BASE_FREQUENCY * (2.0 ** (k * n) + sign * 2.0 ** (k * m))
    index = carrier_index(frequency, grid)
    taps = profile.taps(grid.L)
    return _vector_in_first(grid, _separable(grid, taps, _cosine(index), band, strict=True))


def check_admissible(
    spec: InitialDataSpec,
    grid: TorusGrid,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> None:
    if spec.sigma <= spec.sigma_threshold:
        raise InadmissibleSpecError(
            "sigma", f"sigma={spec.sigma} must exceed 2 + max(1 + d/p, 3/2) = {spec.sigma_threshold}"
        )
    if spec.d != grid.d:
        raise InadmissibleSpecError("dimension", f"spec has d={spec.d} but grid has d={grid.d}")

    reach = profile.taps(grid.L).reach
    highest = carrier_index(spec.highest_frequency, grid) + reach
    edge = grid.band_edge(band, 0)
    if highest >= edge:
        raise InadmissibleSpecError(
            "band",
            f"highest index {highest} does not fit the dealiased band |m| < {edge:.6g} (M={grid.M})",
        )
    if grid.d > 1 and 2 * reach >= grid.band_edge(band, 1):
        raise InadmissibleSpecError(
            "band", f"transverse grid M_perp={grid.transverse} cannot resolve the squared bump"
        )


def minimal_grid_size(
    spec: InitialDataSpec,
    L: float = DEFAULT_PERIOD,
    band: float = DEFAULT_DEALIAS,
    M_perp: Optional[int] = None,
    limit: int = 2**16,
) -> int:
    """Smallest power-of-two M on which `spec` is admissible."""
    M = 16
    while M <= limit:
        try:
            check_admissible(spec, TorusGrid(d=spec.d, L=L, M=M, M_perp=M_perp), band)
            return M
        except InadmissibleSpecError as e:
            if e.constraint != "band":
                raise
        M *= 2
    raise InadmissibleSpecError("band", f"no grid up to M={limit} fits {spec}")


def build_u0(
    spec: InitialDataSpec,
    grid: TorusGrid,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> SpectralField:
    """(sum_{n=0}^N 2^{-kn sigma} f_n, 0, ..., 0)."""
    check_admissible(spec, grid, band, profile)
    carriers = []
    for n in range(spec.N + 1):
        carriers += _cosine(carrier_index(spec.carrier_frequency(n), grid), spec.weight(n))
    u0 = _vector_in_first(grid, _separable(grid, profile.taps(grid.L), carriers, band, strict=True))
    logger.debug(f"Built u0 for {spec} on grid {grid.shape}")
    return u0


def single_block_datum(
    spec: InitialDataSpec,
    grid: TorusGrid,
    n: int = 1,
    band: float = DEFAULT_DEALIAS,
) -> SpectralField:
    """The smooth control datum 2^{-kn sigma} f_n."""
    return spec.weight(n) * f_profile(spec.k, n, grid, band)


class SquareGroups(NamedTuple):
    # Zero-carrier part of the n = m terms
    diagonal: SpectralField
    # Doubled-carrier part of the n = m terms
    doubled: SpectralField
    # n != m terms at carriers K_n - K_m and K_n + K_m
    cross: SpectralField

    def total(self) -> SpectralField:
        return self.diagonal + self.doubled + self.cross


def _square_field(grid: TorusGrid, carriers, band: float, profile: BumpProfile) -> SpectralField:
    taps = profile.taps(grid.L).squared()
    return SpectralField(grid, _separable(grid, taps, carriers, band, strict=False))


def square_groups(
    spec: InitialDataSpec,
    grid: TorusGrid,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> SquareGroups:
    """|u0|^2 split by the product-to-sum identity, truncated to the dealias band."""
    K = [carrier_index(spec.carrier_frequency(n), grid) for n in range(spec.N + 1)]
    w = [spec.weight(n) for n in range(spec.N + 1)]

    diagonal = [(0, 0.5 * sum(x * x for x in w))]
    doubled = []
    cross = []
    for n in range(spec.N + 1):
        doubled += _cosine(2 * K[n], 0.5 * w[n] ** 2)
        for m in range(n):
            cross += _cosine(K[n] - K[m], w[n] * w[m])
            cross += _cosine(K[n] + K[m], w[n] * w[m])

    return SquareGroups(
        _square_field(grid, diagonal, band, profile),
        _square_field(grid, doubled, band, profile),
        _square_field(grid, cross, band, profile),
    )


def square_of(u0: SpectralField, band: float = DEFAULT_DEALIAS) -> SpectralField:
    """Pseudo-spectral |u0|^2 for a field with a single nonzero component."""
    first = u0.component(0)
    return product(first, first, band)


def _pair_term(
    spec: InitialDataSpec,
    grid: TorusGrid,
    n: int,
    partners: range,
    band: float,
    profile: BumpProfile,
) -> SpectralField:
    K_n = carrier_index(spec.carrier_frequency(n), grid)
    carriers = []
    for m in partners:
        K_m = carrier_index(spec.carrier_frequency(m), grid)
        weight = spec.weight(n) * spec.weight(m)
        carriers += _cosine(K_n + K_m, weight) + _cosine(K_n - K_m, weight)
    return _square_field(grid, carriers, band, profile)


def block_lower_bound_report(
    u0: SpectralField,
    spec: InitialDataSpec,
    part: DyadicPartition,
    band: float = DEFAULT_DEALIAS,
    profile: BumpProfile = BumpProfile(),
) -> pd.DataFrame:
    """Normalised block norms 2^{kn sigma} ||Delta_{kn} |u0|^2||_{L^p} for n = 1..N.

    Alongside the measured block, the two leading contributions are built
    from the product-to-sum identity: `i1` pairs block n with block 0 and
    `i2` collects the pairs (n, m) for 1 <= m < n.
    """
    grid = u0.grid
    square = square_of(u0, band)
    rows = []
    for n in range(1, spec.N + 1):
        j = spec.k * n
        scale = 2.0 ** (j * spec.sigma)
        i1 = _pair_term(spec, grid, n, range(0, 1), band, profile)
        i2 = _pair_term(spec, grid, n, range(1, n), band, profile)

        i1_norm = scale * lp_norm(dyadic_block(i1, j, part), spec.p)
        i2_norm = scale * lp_norm(dyadic_block(i2, j, part), spec.p)
        rows.append(
            {
                "n": n,
                "block_norm": scale * lp_norm(dyadic_block(square, j, part), spec.p),
                "i1_norm": i1_norm,
                "i2_norm": i2_norm,
                "i2_over_i1": i2_norm / i1_norm if i1_norm > 0 else math.nan,
                "product_constant": scale * lp_norm(i1, spec.p),
                "predicted_lower": i1_norm - i2_norm,
            }
        )
    return pd.DataFrame(rows)


class NormFactors(NamedTuple):
    carrier_axis: float
    transverse_axis: float
    total: float


def tensor_norm_factors(
    k: int,
    n: int,
    grid: TorusGrid,
    p: float = 2.0,
    profile: BumpProfile = BumpProfile(),
) -> NormFactors:
    """L^p norm of f_n split into its one-dimensional factors.

    ||f_n||_{L^p} = ||b cos||_{L^p(x1)} * ||b||_{L^p(x)}^{d-1} holds exactly
    for the discrete norm as well, since the samples are a tensor product.
    """
    taps = profile.taps(grid.L)
    index = carrier_index(BASE_FREQUENCY * 2.0 ** (k * n), grid)
    carrier_grid = TorusGrid(d=1, L=grid.L, M=grid.M)
    transverse_grid = TorusGrid(d=1, L=grid.L, M=grid.transverse)

    carrier = SpectralField(
        carrier_grid,
        _modulated_axis(taps, _cosine(index), grid.M, grid.M / 2, strict=True),
    )
    transverse = SpectralField(
        transverse_grid,
        _modulated_axis(taps, [(0, 1.0)], grid.transverse, grid.transverse / 2, strict=True),
    )
    a = lp_norm(carrier, p)
    b = lp_norm(transverse, p)
    return NormFactors(a, b, a * b ** (grid.d - 1))


def localized_pairs(spec: InitialDataSpec) -> list[tuple[int, int]]:
    """Pairs (m, n) whose g profiles sit inside block kn for both signs.

    The carrier (17/12)(2^{kn} - 2^{km}) clears the lower shoulder of block
    kn only when k(n - m) >= 4, and the bump half-width needs kn >= 6.
    """
    return [
        (m, n)
        for n in range(1, spec.N + 1)
        for m in range(n)
        if spec.k * (n - m) >= 4 and spec.k * n >= 6
    ]


class Localization(NamedTuple):
    # ||Delta_j f - f|| / ||f||
    in_block: float
    # max over i != j of ||Delta_i f|| / ||f||
    leakage: float


def block_localization(f: SpectralField, j: int, part: DyadicPartition) -> Localization:
    """Distance of f from living in the single dyadic block j, relative in L^2."""
    base = lp_norm(f, 2)
    if base == 0:
        return Localization(0.0, 0.0)
    in_block = lp_norm(dyadic_block(f, j, part) - f, 2) / base
    leakage = max(
        (lp_norm(dyadic_block(f, i, part), 2) / base for i in part.indices if i != j),
        default=0.0,
    )
    return Localization(in_block, leakage)
