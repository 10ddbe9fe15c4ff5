import numpy as np
import pytest

from chbesov.ch_operators import (
    advection,
    helmholtz,
    helmholtz_inverse,
    helmholtz_symbol,
    m_form_rhs,
    q_form,
    r_form,
    rhs,
    rhs_terms,
)
from chbesov.initial_data import InitialDataSpec, build_u0
from chbesov.littlewood_paley import dyadic_block, partition_for
from chbesov.spectral_grid import (
    SpectralField,
    TorusGrid,
    dealias_mask,
    forward_transform,
    inverse_transform,
    lattice,
    lp_norm,
    partial,
    product,
    random_band_limited,
    to_spectral,
)


def _cosine_wave(grid) -> SpectralField:
    """u = (cos x1, 0, ...): the system reduces to the classical one-dimensional equation."""
    x1 = grid.coordinates()[0]
    first = np.broadcast_to(np.cos(x1), grid.shape)
    rest = [np.zeros(grid.shape)] * (grid.d - 1)
    return to_spectral(np.stack([first] + rest), grid)


def _first_component_sine(grid, amplitude: float, frequency: float = 2.0) -> SpectralField:
    x1 = grid.coordinates()[0]
    first = np.broadcast_to(amplitude * np.sin(frequency * x1), grid.shape)
    rest = [np.zeros(grid.shape)] * (grid.d - 1)
    return to_spectral(np.stack([first] + rest), grid)


def _direct_q(u: SpectralField) -> SpectralField:
    """Nonlocal stress term written with einsum over the full Jacobian array."""
    grid = u.grid
    d = grid.d
    ik = [1j * xi for xi in lattice(grid).wavenumbers]
    A = np.stack(
        [np.stack([inverse_transform(u.coeffs[i] * ik[j], grid).real for j in range(d)]) for i in range(d)]
    )
    div = np.einsum("ii...->...", A)
    eye = np.eye(d).reshape((d, d) + (1,) * d)
    S = (
        np.einsum("ic...,cj...->ij...", A, A)
        + np.einsum("ic...,jc...->ij...", A, A)
        - np.einsum("ci...,cj...->ij...", A, A)
        - A * div
        + 0.5 * eye * np.einsum("ij...,ij...->...", A, A)
    )
    div_S = np.stack(
        [sum(forward_transform(S[i, j], grid) * ik[j] for j in range(d)) for i in range(d)]
    )
    return SpectralField(grid, -div_S * dealias_mask(grid) / helmholtz_symbol(grid))


class TestHelmholtz:
    def test_symbol_at_origin(self, small_grid):
        assert helmholtz_symbol(small_grid)[0, 0] == 1.0

    def test_cosine(self, line_grid):
        x = line_grid.coordinates()[0]
        f = to_spectral(np.cos(3 * x), line_grid)
        np.testing.assert_allclose(helmholtz(f).coeffs, 10 * f.coeffs, atol=1e-12)
        np.testing.assert_allclose(helmholtz_inverse(f).coeffs, f.coeffs / 10, atol=1e-12)

    def test_inverse_round_trip(self, small_grid, rng):
        f = random_band_limited(small_grid, rng)
        np.testing.assert_allclose(helmholtz_inverse(helmholtz(f)).coeffs, f.coeffs, atol=1e-13)


class TestAdvection:
    def test_constant_field(self, small_grid):
        ones = np.ones(small_grid.shape)
        u = to_spectral(np.stack([ones, 2 * ones]), small_grid)
        assert lp_norm(advection(u), 2) < 1e-13

    def test_shear_flow(self, small_grid):
        # u = (sin x2, 0) moves along its own level sets.
        x2 = small_grid.coordinates()[1]
        u = to_spectral(
            np.stack([np.broadcast_to(np.sin(x2), small_grid.shape), np.zeros(small_grid.shape)]),
            small_grid,
        )
        assert lp_norm(advection(u), 2) < 1e-13

    def test_first_component_only(self, small_grid):
        x1 = small_grid.coordinates()[0]
        f = to_spectral(np.broadcast_to(np.cos(x1) + 0.5 * np.sin(2 * x1), small_grid.shape), small_grid)
        u = SpectralField.stack([f, SpectralField.zeros(small_grid, 1)])
        expected = 0.5 * partial(product(f, f), 0)
        result = advection(u)
        np.testing.assert_allclose(result.coeffs[0], expected.coeffs[0], atol=1e-13)
        assert np.max(np.abs(result.coeffs[1])) < 1e-13

    def test_u0_against_doubled_grid(self):
        # u0 = (f, 0): u . grad u = (f d1 f, 0) = (d1(f^2)/2, 0), and on twice the grid f^2 is alias free.
        spec = InitialDataSpec(k=1, N=3)
        coarse = TorusGrid(d=2, L=24 * np.pi, M=1024, M_perp=64)
        fine = TorusGrid(d=2, L=24 * np.pi, M=2048, M_perp=128)

        f = inverse_transform(build_u0(spec, fine).coeffs[0], fine).real
        oracle = 0.5 * 1j * lattice(fine).wavenumbers[0] * forward_transform(f**2, fine)
        idx = lattice(coarse).indices
        restricted = oracle[np.ix_(idx[0].ravel() % fine.M, idx[1].ravel() % fine.transverse)]
        restricted = restricted * dealias_mask(coarse)

        result = advection(build_u0(spec, coarse))
        np.testing.assert_allclose(
            result.coeffs[0], restricted, atol=1e-10 * np.max(np.abs(restricted))
        )
        assert not np.any(result.coeffs[1])

    def test_rejects_wrong_component_count(self, small_grid):
        with pytest.raises(ValueError, match="component"):
            advection(SpectralField.zeros(small_grid, 1))


class TestNonlocalTerms:
    @pytest.mark.parametrize("form", [q_form, r_form])
    def test_zero_field(self, small_grid, form):
        assert not np.any(form(SpectralField.zeros(small_grid)).coeffs)

    @pytest.mark.parametrize("form", [q_form, r_form])
    def test_constant_field(self, small_grid, form):
        ones = np.ones(small_grid.shape)
        u = to_spectral(np.stack([0.3 * ones, -ones]), small_grid)
        assert lp_norm(form(u), 2) < 1e-13

    @pytest.mark.parametrize("form", [q_form, r_form, advection])
    def test_quadratic_homogeneity(self, small_grid, rng, form):
        u = random_band_limited(small_grid, rng, decay=1.0)
        scaled = form(3.0 * u)
        np.testing.assert_allclose(scaled.coeffs, 9.0 * form(u).coeffs, atol=1e-10)

    @pytest.mark.parametrize("form", [q_form, r_form, advection])
    def test_parallelogram_identity(self, small_grid, rng, form):
        # Quadratic forms of a symmetric bilinear map: F(u + v) + F(u - v) = 2 F(u) + 2 F(v).
        u = random_band_limited(small_grid, rng, decay=1.0)
        v = random_band_limited(small_grid, rng, decay=1.0)
        expected = 2.0 * form(u) + 2.0 * form(v)
        residue = form(u + v) + form(u - v) - expected
        assert lp_norm(residue, 2) <= 1e-11 * lp_norm(expected, 2)

    @pytest.mark.parametrize("form", [q_form, r_form])
    def test_blocks_gain_two_derivatives(self, small_grid, rng, form):
        # Block j lives on 3/4 2^j <= |xi| <= 8/3 2^j, where (1 - Laplacian) acts as a factor 1 + |xi|^2.
        result = form(random_band_limited(small_grid, rng, decay=1.0))
        source = helmholtz(result)
        part = partition_for(small_grid)
        for j in part.indices[1:]:
            block = lp_norm(dyadic_block(result, j, part), 2)
            unsmoothed = lp_norm(dyadic_block(source, j, part), 2)
            upper = unsmoothed / (1 + (0.75 * 2.0**j) ** 2)
            lower = unsmoothed / (1 + (8 / 3 * 2.0**j) ** 2)
            assert block <= upper * (1 + 1e-12) + 1e-15, j
            assert block >= lower * (1 - 1e-12) - 1e-15, j

    def test_one_dimensional_reduction(self, line_grid):
        # For u = cos x the classical equation gives Q = -sin(2x)/10, R = sin(2x)/5.
        u = _cosine_wave(line_grid)
        x = line_grid.coordinates()[0]
        sin2 = to_spectral(np.sin(2 * x), line_grid)
        np.testing.assert_allclose(q_form(u).coeffs, (-0.1 * sin2).coeffs, atol=1e-13)
        np.testing.assert_allclose(r_form(u).coeffs, (0.2 * sin2).coeffs, atol=1e-13)
        np.testing.assert_allclose(rhs(u).coeffs, (0.6 * sin2).coeffs, atol=1e-13)

    def test_planar_wave_in_two_dimensions(self, small_grid):
        u = _cosine_wave(small_grid)
        expected = _first_component_sine(small_grid, 0.6)
        np.testing.assert_allclose(rhs(u).coeffs, expected.coeffs, atol=1e-13)

    def test_q_matches_direct_stress_divergence(self, harmonic_datum):
        np.testing.assert_allclose(
            q_form(harmonic_datum).coeffs, _direct_q(harmonic_datum).coeffs, atol=1e-13
        )

    def test_q_matches_direct_stress_in_three_dimensions(self, rng):
        grid = TorusGrid(d=3, L=2 * np.pi, M=16)
        u = random_band_limited(grid, rng, decay=2.0)
        np.testing.assert_allclose(q_form(u).coeffs, _direct_q(u).coeffs, atol=1e-12)


class TestRightHandSide:
    def test_zero_field(self, small_grid):
        assert not np.any(rhs(SpectralField.zeros(small_grid)).coeffs)

    def test_terms_add_up(self, small_grid, rng):
        u = random_band_limited(small_grid, rng, decay=1.0)
        terms = rhs_terms(u)
        np.testing.assert_allclose(terms.total().coeffs, rhs(u).coeffs, atol=1e-13)
        np.testing.assert_allclose(
            terms.nonlocal_part.coeffs, (q_form(u) + r_form(u)).coeffs, atol=1e-13
        )
        np.testing.assert_allclose(terms.advection.coeffs, advection(u).coeffs, atol=1e-13)

    def test_result_stays_in_band(self, small_grid, rng):
        u = random_band_limited(small_grid, rng)
        assert rhs(u).is_band_limited()

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_momentum_form_agrees(self, small_grid, seed):
        u = random_band_limited(small_grid, np.random.default_rng(seed), decay=2.0)
        transport = rhs(u)
        momentum = helmholtz_inverse(m_form_rhs(helmholtz(u), u))
        assert lp_norm(transport - momentum, 2) <= 1e-8 * lp_norm(transport, 2)

    def test_momentum_form_in_one_dimension(self, line_grid):
        u = _cosine_wave(line_grid)
        momentum = helmholtz_inverse(m_form_rhs(helmholtz(u), u))
        np.testing.assert_allclose(momentum.coeffs, rhs(u).coeffs, atol=1e-13)
