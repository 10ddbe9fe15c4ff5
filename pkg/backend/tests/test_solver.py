import logging
import math

import numpy as np
import pytest

from chbesov._utils import geometric_times, loglog_slope
from chbesov.solver import (
    SolverConfig,
    SolverHaltError,
    convergence_factor,
    difference_constants,
    difference_scaling,
    integrate,
    integrate_m_form,
    rk4_step,
    w_scaling,
)
from chbesov.spectral_grid import SpectralField, TorusGrid, lp_norm, random_band_limited
from chbesov.verification import smooth_datum


@pytest.fixture
def datum(small_grid) -> SpectralField:
    return smooth_datum(small_grid)


def test_rk4_step_matches_taylor_polynomial(small_grid):
    # y' = 1 + y: one step reproduces the degree-four Taylor polynomial of e^h - 1.
    one = SpectralField(small_grid, np.ones((1,) + small_grid.shape))
    stepped = rk4_step(lambda delta: one + delta, SpectralField.zeros(small_grid, 1), 0.1)
    expected = 0.1 + 0.1**2 / 2 + 0.1**3 / 6 + 0.1**4 / 24
    np.testing.assert_allclose(stepped.coeffs.real, expected, rtol=1e-14)


class TestIntegrate:
    def test_zero_time_returns_datum(self, datum):
        trajectory = integrate(datum, SolverConfig(dt=0.1), [0.0])
        assert trajectory.times == [0.0]
        assert not np.any(trajectory.increments[0].coeffs)
        np.testing.assert_array_equal(trajectory.final.coeffs, datum.coeffs)

    def test_default_target_is_cfg_time(self, datum):
        trajectory = integrate(datum, SolverConfig(dt=0.05, T=0.1))
        assert trajectory.times == [0.1]

    def test_snapshots_in_requested_order(self, datum):
        trajectory = integrate(datum, SolverConfig(dt=0.05), [0.1, 0.2, 0.05])
        assert trajectory.times == [0.1, 0.2, 0.05]
        assert len(trajectory) == 3
        np.testing.assert_array_equal(trajectory.at(0.2).coeffs, trajectory.fields[1].coeffs)
        with pytest.raises(KeyError):
            trajectory.at(0.3)

    def test_constant_field_is_stationary(self, small_grid):
        coeffs = np.zeros((2,) + small_grid.shape)
        coeffs[0, 0, 0] = 1.0
        coeffs[1, 0, 0] = 0.5
        trajectory = integrate(SpectralField(small_grid, coeffs), SolverConfig(dt=0.1), [1.0])
        assert not np.any(trajectory.increments[-1].coeffs)

    def test_fourth_order_convergence(self, datum):
        factor = convergence_factor(datum, SolverConfig(dt=0.04), T=0.4)
        assert 12.0 <= factor <= 20.0

    def test_momentum_form_matches_transport_form(self, datum):
        cfg = SolverConfig(dt=0.01)
        transport = integrate(datum, cfg, [0.1]).final
        momentum = integrate_m_form(datum, cfg, [0.1]).final
        assert lp_norm(transport - momentum, 2) <= 1e-10 * lp_norm(datum, 2)

    def test_backward_integration_returns_to_datum(self, datum):
        cfg = SolverConfig(dt=0.01)
        forward = integrate(datum, cfg, [0.2]).final
        back = integrate(forward, cfg, [-0.2]).final
        assert lp_norm(back - datum, 2) <= 1e-7 * lp_norm(datum, 2)

    def test_dealias_band_is_sound(self):
        coarse = TorusGrid(d=2, L=2 * math.pi, M=32)
        fine = TorusGrid(d=2, L=2 * math.pi, M=64)
        cfg = SolverConfig(dt=0.02)
        u_coarse = integrate(smooth_datum(coarse, amplitude=0.3), cfg, [0.2]).final
        u_fine = integrate(smooth_datum(fine, amplitude=0.3), cfg, [0.2]).final
        # Doubling the grid only adds modes that are negligible for this datum.
        low = [0, 1, 2, 3, -3, -2, -1]
        window = np.ix_([0, 1], low, low)
        np.testing.assert_allclose(u_coarse.coeffs[window], u_fine.coeffs[window], atol=1e-8)
        assert lp_norm(u_coarse, 2) == pytest.approx(lp_norm(u_fine, 2), rel=1e-6)

    def test_deterministic(self, datum):
        cfg = SolverConfig(dt=0.05)
        first = integrate(datum, cfg, [0.2]).final
        second = integrate(datum, cfg, [0.2]).final
        np.testing.assert_array_equal(first.coeffs, second.coeffs)

    def test_diagnostics(self, datum):
        trajectory = integrate(datum, SolverConfig(dt=0.01, diagnostics_every=5), [0.2])
        frame = trajectory.diagnostics_frame()
        assert list(frame.columns) == ["t", "l2_norm", "apriori_ratio"]
        assert len(frame) >= 3
        assert frame["apriori_ratio"].between(0.5, 2.0).all()


class TestHalt:
    def test_blow_up_raises_with_last_finite_time(self, small_grid, rng):
        u0 = random_band_limited(small_grid, rng, amplitude=1e3)
        cfg = SolverConfig(dt=1.0, diagnostics_every=1000)
        with pytest.raises(SolverHaltError) as excinfo:
            integrate(u0, cfg, [0.0, 50.0])
        error = excinfo.value
        assert 0.0 <= error.last_finite_time < 50.0
        assert error.trajectory.times == [0.0]
        assert "non-finite" in str(error)

    def test_cfl_advisory_is_logged(self, datum, caplog):
        with caplog.at_level(logging.WARNING, logger="chbesov"):
            integrate(datum, SolverConfig(dt=0.1, cfl=0.01), [0.1])
        assert any("CFL advisory" in message for message in caplog.messages)

    def test_no_advisory_for_small_steps(self, datum, caplog):
        with caplog.at_level(logging.WARNING, logger="chbesov"):
            integrate(datum, SolverConfig(dt=0.001), [0.002])
        assert not any("CFL advisory" in message for message in caplog.messages)


class TestScaling:
    def test_difference_scaling_columns(self, datum):
        frame = difference_scaling(datum, [0.0, 0.01, 0.02], SolverConfig(dt=0.005), sigma=4.5)
        assert list(frame.columns) == [
            "t",
            "diff_s_minus_1",
            "diff_s",
            "diff_s_plus_1",
            "diff_sigma",
        ]
        assert (frame.iloc[0].drop("t") == 0).all()
        # Block -1 sets the embedding constant 2^3.
        assert (frame["diff_s_minus_1"] <= 8 * frame["diff_sigma"] * (1 + 1e-12)).all()

    def test_smooth_datum_slopes(self, datum):
        times = geometric_times(1e-3, 1e-2, 4)
        cfg = SolverConfig(dt=5e-4)
        diffs = difference_scaling(datum, times, cfg, sigma=4.5)
        assert loglog_slope(times, diffs["diff_s"]) == pytest.approx(1.0, abs=0.05)
        assert loglog_slope(times, diffs["diff_s_minus_1"]) == pytest.approx(1.0, abs=0.05)
        w = w_scaling(datum, times, cfg, sigma=4.5)
        assert loglog_slope(times, w["w_norm"]) == pytest.approx(2.0, abs=0.1)

    def test_w_without_correction_is_the_difference(self, datum):
        times = [0.01, 0.02]
        cfg = SolverConfig(dt=0.005)
        w = w_scaling(datum, times, cfg, sigma=4.5, use_v0=False)
        diffs = difference_scaling(datum, times, cfg, sigma=4.5)
        np.testing.assert_allclose(w["w_norm"], diffs["diff_s"], rtol=1e-12)

    def test_difference_constants(self, datum):
        frame = difference_constants(datum, [0.0, 0.01, 0.02], SolverConfig(dt=0.005), sigma=4.5)
        assert list(frame["t"]) == [0.01, 0.02]
        assert set(frame.columns) == {"t", "level_s_minus_1", "level_s", "level_s_plus_1", "w_level"}
        assert np.all(np.isfinite(frame.drop(columns="t").to_numpy()))
        assert (frame.drop(columns="t") > 0).all().all()

    @pytest.mark.slow
    def test_desk_datum_slopes(self, desk_spec, desk_u0):
        scale = 2.0 ** (-desk_spec.k * 2)
        times = geometric_times(1e-4 * scale, 1e-3 * scale, 4)
        cfg = SolverConfig(dt=1e-3)
        diffs = difference_scaling(desk_u0, times, cfg, desk_spec.sigma, desk_spec.p)
        assert 0.85 <= loglog_slope(times, diffs["diff_s"]) <= 1.15
        w = w_scaling(desk_u0, times, cfg, desk_spec.sigma, desk_spec.p)
        assert 1.8 <= loglog_slope(times, w["w_norm"]) <= 2.2
