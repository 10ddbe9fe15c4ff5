"""Periodic computational domain, transforms and the vector-field container.

Coefficients are stored in FFT order with the forward transform normalised by
the number of grid points, so that a stored coefficient equals the Fourier
series coefficient of the field: f(x) = sum_m f_hat(m) exp(i xi_m . x) with
xi_m = 2 pi m / L.
"""

import math
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import Field, field_validator
from pydantic.dataclasses import dataclass

from chbesov.cache import cache

DEFAULT_PERIOD = 24 * math.pi
DEFAULT_DEALIAS = 2 / 3

# Largest |c(m) - conj(c(-m))| tolerated by to_physical, relative to the
# coefficient l1 norm with a floor of one (fields here have unit-order amplitude).
HERMITIAN_TOLERANCE = 1e-12


class CorruptedFieldError(ValueError):
    """Raised when a field is not the transform of real finite samples."""

    def __init__(self, msg="Field violates Hermitian symmetry or holds non-finite values"):
        super().__init__(msg)


class GridMismatchError(ValueError):
    """Raised when two operands live on different grids."""

    def __init__(self, msg="Operands are defined on different grids"):
        super().__init__(msg)


@dataclass(frozen=True)
class TorusGrid:
    # Spatial dimension
    d: int = Field(default=2, ge=1, le=3)
    # Period of every axis
    L: float = Field(default=DEFAULT_PERIOD, gt=0)
    # Grid points along the carrier axis x_1
    M: int = 4096
    # Grid points along the transverse axes x_2..x_d, defaults to M
    M_perp: Optional[int] = None

    @field_validator("M", "M_perp")
    @classmethod
    def _power_of_two(cls, value: Optional[int]) -> Optional[int]:
        if value is None:
            return value
        if value < 2 or value & (value - 1):
            raise ValueError(f"Grid size must be a power of two >= 2, got {value}")
        return value

    @property
    def transverse(self) -> int:
        return self.M_perp if self.M_perp is not None else self.M

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) + (self.transverse,) * (self.d - 1)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(self.L / m for m in self.shape)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def fundamental(self) -> float:
        """Lattice spacing in frequency, 2 pi / L."""
        return 2 * math.pi / self.L

    def band_edge(self, fraction: float = DEFAULT_DEALIAS, axis: int = 0) -> float:
        """Indices |m| strictly below this value survive the dealias mask."""
        return fraction * self.shape[axis] / 2

    def coordinates(self) -> list[np.ndarray]:
        """Sparse broadcastable sample coordinates, one array per axis."""
        coords = []
        for axis, m in enumerate(self.shape):
            x = np.arange(m) * (self.L / m)
            coords.append(_along_axis(x, axis, self.d))
        return coords


class Lattice(NamedTuple):
    # Signed integer indices per axis, broadcastable against the grid shape
    indices: tuple[np.ndarray, ...]
    # Wave numbers xi_m per axis, broadcastable
    wavenumbers: tuple[np.ndarray, ...]
    # |xi| on the full lattice
    radius: np.ndarray


def _along_axis(values: np.ndarray, axis: int, d: int) -> np.ndarray:
    shape = [1] * d
    shape[axis] = values.size
    return values.reshape(shape)


@cache
def lattice(grid: TorusGrid) -> Lattice:
    indices = []
    wavenumbers = []
    for axis, m in enumerate(grid.shape):
        idx = np.fft.fftfreq(m, d=1.0 / m).round().astype(np.int64)
        indices.append(_along_axis(idx, axis, grid.d))
        wavenumbers.append(_along_axis(idx * grid.fundamental, axis, grid.d))

    radius = np.sqrt(sum(xi**2 for xi in wavenumbers))
    radius = np.broadcast_to(radius, grid.shape).copy()
    radius.flags.writeable = False
    return Lattice(tuple(indices), tuple(wavenumbers), radius)


@cache
def dealias_mask(grid: TorusGrid, fraction: float = DEFAULT_DEALIAS) -> np.ndarray:
    """Box mask keeping |m_i| < fraction * M_i / 2 on every axis."""
    if not 0 < fraction <= 1:
        raise ValueError(f"Dealias fraction must lie in (0, 1], got {fraction}")
    mask = np.ones(grid.shape, dtype=bool)
    for axis, idx in enumerate(lattice(grid).indices):
        mask = mask & (np.abs(idx) < grid.band_edge(fraction, axis))
    mask.flags.writeable = False
    return mask


def nyquist_mask(grid: TorusGrid) -> np.ndarray:
    # The -M/2 index has no conjugate partner on the lattice.
    return dealias_mask(grid, 1.0)


class SpectralField:
    """A real field on the torus held by its Fourier coefficients.

    `coeffs` has shape (components, *grid.shape). Instances are treated as
    immutable values: the coefficient array is flagged read-only.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: TorusGrid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == grid.d:
            coeffs = coeffs[np.newaxis]
        if coeffs.shape[1:] != grid.shape:
            raise GridMismatchError(
                f"Coefficient shape {coeffs.shape[1:]} does not match grid shape {grid.shape}"
            )
        coeffs.flags.writeable = False
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid: TorusGrid, components: Optional[int] = None) -> "SpectralField":
        n = grid.d if components is None else components
        return cls(grid, np.zeros((n,) + grid.shape, dtype=np.complex128))

    @classmethod
    def stack(cls, fields: Sequence["SpectralField"]) -> "SpectralField":
        grid = fields[0].grid
        for f in fields[1:]:
            _require_same_grid(grid, f.grid)
        return cls(grid, np.concatenate([f.coeffs for f in fields]))

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i : i + 1].copy())

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def masked(self, fraction: float = DEFAULT_DEALIAS) -> "SpectralField":
        return self.with_coeffs(self.coeffs * dealias_mask(self.grid, fraction))

    def is_band_limited(self, fraction: float = DEFAULT_DEALIAS) -> bool:
        outside = self.coeffs[:, ~dealias_mask(self.grid, fraction)]
        return not np.any(outside)

    def l2_coefficient_norm(self) -> float:
        """Parseval side of the L2 norm: sqrt(L^d sum |f_hat|^2)."""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _require_same_grid(self.grid, other.grid)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _require_same_grid(self.grid, other.grid)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def __repr__(self) -> str:
        return f"SpectralField(grid={self.grid!r}, components={self.components})"


def _require_same_grid(a: TorusGrid, b: TorusGrid) -> None:
    if a != b:
        raise GridMismatchError(f"Grid mismatch: {a} vs {b}")


def inverse_transform(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Complex samples of coefficient arrays, transforming the trailing d axes."""
    return np.fft.ifftn(coeffs, axes=grid.axes, norm="forward")


def forward_transform(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return np.fft.fftn(values, axes=grid.axes, norm="forward")


def _mirror(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Coefficients re-indexed m -> -m; the -M/2 index maps to itself."""
    return np.roll(np.flip(coeffs, axis=grid.axes), 1, axis=grid.axes)


def hermitian_defect(f: SpectralField) -> float:
    """max |f_hat(m) - conj(f_hat(-m))| over all components."""
    if not f.coeffs.size:
        return 0.0
    return float(np.max(np.abs(f.coeffs - np.conj(_mirror(f.coeffs, f.grid)))))


def _real_samples(f: SpectralField) -> np.ndarray:
    return inverse_transform(f.coeffs, f.grid).real


def to_physical(f: SpectralField) -> np.ndarray:
    """Real samples of every component, shape (components, *grid.shape)."""
    if not np.all(np.isfinite(f.coeffs)):
        raise CorruptedFieldError("Field holds non-finite coefficients")
    l1 = float(np.max(np.sum(np.abs(f.coeffs), axis=f.grid.axes))) if f.coeffs.size else 0.0
    defect = hermitian_defect(f)
    if defect > HERMITIAN_TOLERANCE * max(l1, 1.0):
        raise CorruptedFieldError(
            f"Field violates Hermitian symmetry (coefficient defect {defect:.3e}, l1 norm {l1:.3e})"
        )
    return _real_samples(f)


def to_spectral(samples: Union[np.ndarray, Iterable[np.ndarray]], grid: TorusGrid) -> SpectralField:
    """Coefficients of real samples; a bare grid-shaped array is one component."""
    values = np.asarray(samples)
    if np.iscomplexobj(values):
        raise CorruptedFieldError("Samples must be real-valued")
    values = values.astype(np.float64)
    if values.ndim == grid.d:
        values = values[np.newaxis]
    if values.shape[1:] != grid.shape:
        raise GridMismatchError(
            f"Sample shape {values.shape[1:]} does not match grid shape {grid.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise CorruptedFieldError("Samples hold non-finite values")

    coeffs = forward_transform(values, grid) * nyquist_mask(grid)
    return SpectralField(grid, coeffs)


def lp_norm(f: SpectralField, p: float = 2.0) -> float:
    """Discrete L^p norm of the pointwise Euclidean length of f.

    Roundoff asymmetry in the coefficients is dropped with the imaginary part
    of the samples; only `to_physical` reports it.
    """
    if not p >= 1:
        raise ValueError(f"Lebesgue exponent must lie in [1, inf], got {p}")

    magnitude = np.sqrt(np.sum(_real_samples(f) ** 2, axis=0))
    if math.isinf(p):
        return float(np.max(magnitude))
    if p == 2:
        return float(np.sqrt(np.sum(magnitude**2) * f.grid.cell_volume))
    return float((np.sum(magnitude**p) * f.grid.cell_volume) ** (1.0 / p))


def partial(f: SpectralField, axis: int) -> SpectralField:
    """Spectral derivative of every component along `axis`."""
    return f.with_coeffs(f.coeffs * (1j * lattice(f.grid).wavenumbers[axis]))


def product(
    a: SpectralField, b: SpectralField, fraction: float = DEFAULT_DEALIAS
) -> SpectralField:
    """Dealiased pseudo-spectral product of two scalar fields."""
    _require_same_grid(a.grid, b.grid)
    if a.components != 1 or b.components != 1:
        raise ValueError("product expects scalar (single component) fields")
    grid = a.grid
    mask = dealias_mask(grid, fraction)
    left = inverse_transform(a.coeffs * mask, grid).real
    right = inverse_transform(b.coeffs * mask, grid).real
    return SpectralField(grid, forward_transform(left * right, grid) * mask)


def random_band_limited(
    grid: TorusGrid,
    rng: np.random.Generator,
    components: Optional[int] = None,
    fraction: float = DEFAULT_DEALIAS,
    decay: float = 0.0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random real field with coefficients confined to the dealias band.

    Coefficients are damped by (1 + |xi|^2)^(-decay/2) and the field is
    rescaled to unit maximum coefficient times `amplitude`.
    """
    n = grid.d if components is None else components
    samples = rng.standard_normal((n,) + grid.shape)
    coeffs = forward_transform(samples, grid) * dealias_mask(grid, fraction)
    if decay:
        coeffs = coeffs * (1.0 + lattice(grid).radius ** 2) ** (-decay / 2)
    peak = float(np.max(np.abs(coeffs)))
    if peak > 0:
        coeffs = coeffs * (amplitude / peak)
    return SpectralField(grid, coeffs)
