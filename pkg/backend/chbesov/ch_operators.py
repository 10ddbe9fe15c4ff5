"""Helmholtz maps, transport and nonlocal terms of the Camassa-Holm system.

Jacobian convention: A[i][j] = d_j u_i (row = component, column =
derivative). Then (u . grad u)_i = sum_j u_j A[i][j] and
(grad u^T m)_i = sum_j m_j A[j][i]. Matrix divergence is taken row-wise,
(div S)_i = sum_j d_j S[i][j].

All products are pseudo-spectral: inputs are truncated to the dealias band,
multiplied on the grid and truncated again after the forward transform.
"""

from typing import NamedTuple

import numpy as np

from chbesov.spectral_grid import (
    DEFAULT_DEALIAS,
    SpectralField,
    TorusGrid,
    dealias_mask,
    forward_transform,
    inverse_transform,
    lattice,
)


def helmholtz_symbol(grid: TorusGrid) -> np.ndarray:
    return 1.0 + lattice(grid).radius ** 2


def helmholtz(f: SpectralField) -> SpectralField:
    """(1 - Laplacian) f."""
    return f.with_coeffs(f.coeffs * helmholtz_symbol(f.grid))


def helmholtz_inverse(f: SpectralField) -> SpectralField:
    return f.with_coeffs(f.coeffs / helmholtz_symbol(f.grid))


class _Kinematics:
    """Grid samples of a band-limited vector field and its Jacobian."""

    def __init__(self, u: SpectralField, fraction: float):
        grid = u.grid
        if u.components != grid.d:
            raise ValueError(f"Expected a {grid.d}-component vector field, got {u.components}")
        self.grid = grid
        self.mask = dealias_mask(grid, fraction)
        self.ik = [1j * xi for xi in lattice(grid).wavenumbers]

        coeffs = u.coeffs * self.mask
        self.coeffs = coeffs
        self.u = inverse_transform(coeffs, grid).real
        self.A = [
            [inverse_transform(coeffs[i] * self.ik[j], grid).real for j in range(grid.d)]
            for i in range(grid.d)
        ]
        self.div = sum(self.A[i][i] for i in range(grid.d))

    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        return forward_transform(values, self.grid) * self.mask

    def field(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, coeffs)

    def advection(self) -> np.ndarray:
        d = self.grid.d
        values = np.stack([sum(self.u[j] * self.A[i][j] for j in range(d)) for i in range(d)])
        return self.to_coeffs(values)

    def stress(self) -> list[list[np.ndarray]]:
        """AA + AA^T - A^T A - A div u + 1/2 I |A|^2, with |A| the Frobenius norm."""
        d = self.grid.d
        A = self.A
        frobenius = sum(A[i][j] ** 2 for i in range(d) for j in range(d))
        S = []
        for i in range(d):
            row = []
            for j in range(d):
                entry = sum(
                    A[i][c] * A[c][j] + A[i][c] * A[j][c] - A[c][i] * A[c][j]
                    for c in range(d)
                )
                entry = entry - A[i][j] * self.div
                if i == j:
                    entry = entry + 0.5 * frobenius
                row.append(entry)
            S.append(row)
        return S

    def q_coeffs(self) -> np.ndarray:
        d = self.grid.d
        S = self.stress()
        div_S = np.stack(
            [sum(self.to_coeffs(S[i][j]) * self.ik[j] for j in range(d)) for i in range(d)]
        )
        return -div_S / helmholtz_symbol(self.grid)

    def r_coeffs(self) -> np.ndarray:
        d = self.grid.d
        values = np.stack(
            [
                self.u[i] * self.div + sum(self.u[j] * self.A[j][i] for j in range(d))
                for i in range(d)
            ]
        )
        return -self.to_coeffs(values) / helmholtz_symbol(self.grid)


def advection(u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> SpectralField:
    """u . grad u."""
    kin = _Kinematics(u, dealias)
    return kin.field(kin.advection())


def q_form(u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> SpectralField:
    """Q(u, u) = -(1 - Laplacian)^-1 div(AA + AA^T - A^T A - A div u + 1/2 I |A|^2)."""
    kin = _Kinematics(u, dealias)
    return kin.field(kin.q_coeffs())


def r_form(u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> SpectralField:
    """R(u, u) = -(1 - Laplacian)^-1 (u div u + u . grad u^T)."""
    kin = _Kinematics(u, dealias)
    return kin.field(kin.r_coeffs())


class RhsTerms(NamedTuple):
    advection: SpectralField
    q: SpectralField
    r: SpectralField

    def total(self) -> SpectralField:
        return -self.advection + self.q + self.r

    @property
    def nonlocal_part(self) -> SpectralField:
        return self.q + self.r


def rhs_terms(u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> RhsTerms:
    kin = _Kinematics(u, dealias)
    return RhsTerms(
        kin.field(kin.advection()),
        kin.field(kin.q_coeffs()),
        kin.field(kin.r_coeffs()),
    )


def rhs(u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> SpectralField:
    """-u . grad u + Q(u, u) + R(u, u), the transport-form time derivative."""
    kin = _Kinematics(u, dealias)
    return kin.field(-kin.advection() + kin.q_coeffs() + kin.r_coeffs())


def m_form_rhs(m: SpectralField, u: SpectralField, dealias: float = DEFAULT_DEALIAS) -> SpectralField:
    """-(u . grad m + grad u^T m + (div u) m), the momentum-form time derivative."""
    kin = _Kinematics(u, dealias)
    grid = kin.grid
    d = grid.d
    mh = m.coeffs * kin.mask
    m_values = inverse_transform(mh, grid).real
    grad_m = [[inverse_transform(mh[i] * kin.ik[j], grid).real for j in range(d)] for i in range(d)]

    values = np.stack(
        [
            sum(kin.u[j] * grad_m[i][j] for j in range(d))
            + sum(m_values[j] * kin.A[j][i] for j in range(d))
            + kin.div * m_values[i]
            for i in range(d)
        ]
    )
    return kin.field(-kin.to_coeffs(values))
