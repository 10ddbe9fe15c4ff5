"""Fourth-order Runge-Kutta integration of the transport and momentum forms.

The marched state is the increment from the initial datum (u - u0, resp.
m - m0); every stage evaluates the right-hand side at u0 plus the stage
increment. This is the classical scheme written in increment variables, so
u(t) - u0 and w(t) = u(t) - u0 - t v0 carry no cancellation error.
"""

import math
import time
from dataclasses import replace
from typing import Callable, Literal, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from dataclasses_json import DataClassJsonMixin
from pydantic import Field
from pydantic.dataclasses import dataclass

from chbesov.ch_operators import helmholtz, helmholtz_inverse, m_form_rhs, rhs
from chbesov.littlewood_paley import (
    BesovParams,
    DyadicPartition,
    besov_from_blocks,
    besov_norm,
    block_norms,
    partition_for,
)
from chbesov.logger import logger
from chbesov.spectral_grid import DEFAULT_DEALIAS, SpectralField, lp_norm


@dataclass(frozen=True)
class SolverConfig(DataClassJsonMixin):
    # Largest step; each segment between snapshots is split into equal steps
    dt: float = Field(default=1e-3, gt=0)
    # Final time used when no snapshot times are requested
    T: float = 0.0
    # Fraction of the Nyquist band kept by every product
    dealias: float = Field(default=DEFAULT_DEALIAS, gt=0, le=1)
    # Advisory Courant number
    cfl: float = Field(default=0.5, gt=0)
    # Step interval between diagnostic log lines
    diagnostics_every: int = Field(default=10, ge=1)
    integrator: Literal["rk4"] = "rk4"
    # Besov level (s, p) of the a priori ratio diagnostic
    diagnostic_s: float = 2.5
    diagnostic_p: float = Field(default=2.0, ge=1)


class SolverHaltError(RuntimeError):
    """Raised when the state stops being finite."""

    def __init__(self, last_finite_time: float, trajectory: Optional["Trajectory"] = None):
        self.last_finite_time = last_finite_time
        self.trajectory = trajectory
        super().__init__(f"Solver produced non-finite values after t={last_finite_time:.6g}")


class Trajectory:
    """Snapshots of a solution stored as increments from the initial datum."""

    def __init__(
        self,
        u0: SpectralField,
        times: Sequence[float],
        increments: Sequence[SpectralField],
        diagnostics: Sequence[dict],
    ):
        self.u0 = u0
        self.times = list(times)
        self.increments = list(increments)
        self.diagnostics = list(diagnostics)

    @property
    def fields(self) -> list[SpectralField]:
        return [self.u0 + delta for delta in self.increments]

    def increment_at(self, t: float) -> SpectralField:
        for ti, delta in zip(self.times, self.increments):
            if ti == t:
                return delta
        raise KeyError(f"No snapshot recorded at t={t}")

    def at(self, t: float) -> SpectralField:
        return self.u0 + self.increment_at(t)

    @property
    def final(self) -> SpectralField:
        return self.u0 + self.increments[-1]

    def diagnostics_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.diagnostics, columns=["t", "l2_norm", "apriori_ratio"])

    def __len__(self) -> int:
        return len(self.times)


Derivative = Callable[[SpectralField], SpectralField]


def rk4_step(derivative: Derivative, delta: SpectralField, h: float) -> SpectralField:
    k1 = derivative(delta)
    k2 = derivative(delta + (h / 2) * k1)
    k3 = derivative(delta + (h / 2) * k2)
    k4 = derivative(delta + h * k3)
    return delta + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_cfl(u: SpectralField, cfg: SolverConfig, t: float) -> None:
    peak = lp_norm(u, math.inf)
    if peak == 0:
        return
    limit = cfg.cfl * min(u.grid.spacing) / peak
    if cfg.dt > limit:
        logger.warning(
            f"CFL advisory exceeded at t={t:.6g}: dt={cfg.dt:.3g} > {limit:.3g} (max|u|={peak:.3g})"
        )


def _march(
    u0: SpectralField,
    state0: SpectralField,
    derivative: Derivative,
    solution_increment: Callable[[SpectralField], SpectralField],
    cfg: SolverConfig,
    times: Optional[Sequence[float]],
) -> Trajectory:
    targets = [cfg.T] if times is None else [float(t) for t in times]
    part = partition_for(u0.grid)
    params = BesovParams(cfg.diagnostic_s, cfg.diagnostic_p)
    reference = besov_norm(u0, params, part)

    _check_cfl(u0, cfg, 0.0)

    delta = SpectralField.zeros(state0.grid, state0.components)
    t = 0.0
    step = 0
    recorded_times: list[float] = []
    increments: list[SpectralField] = []
    diagnostics: list[dict] = []
    started = time.perf_counter()

    for target in targets:
        span = target - t
        n_steps = math.ceil(abs(span) / cfg.dt) if span else 0
        h = span / n_steps if n_steps else 0.0
        for _ in range(n_steps):
            candidate = rk4_step(derivative, delta, h)
            if not np.all(np.isfinite(candidate.coeffs)):
                raise SolverHaltError(
                    t, Trajectory(u0, recorded_times, increments, diagnostics)
                )
            delta = candidate
            t += h
            step += 1
            if step % cfg.diagnostics_every == 0:
                u = u0 + solution_increment(delta)
                ratio = besov_norm(u, params, part) / reference if reference > 0 else math.nan
                row = {"t": t, "l2_norm": lp_norm(u, 2), "apriori_ratio": ratio}
                diagnostics.append(row)
                logger.debug(
                    f"step={step} t={t:.6g} |u|_L2={row['l2_norm']:.6g} a priori ratio={ratio:.4g}"
                )
                _check_cfl(u, cfg, t)
        t = target
        recorded_times.append(target)
        increments.append(solution_increment(delta))

    logger.debug(f"Integrated {step} steps in {time.perf_counter() - started:.2f}s")
    return Trajectory(u0, recorded_times, increments, diagnostics)


def integrate(
    u0: SpectralField, cfg: SolverConfig, times: Optional[Sequence[float]] = None
) -> Trajectory:
    """RK4 on du/dt = rhs(u) with snapshots at `times` (default: [cfg.T]).

    Times are visited in the given order starting from t = 0 and may be
    negative.
    """

    def derivative(delta: SpectralField) -> SpectralField:
        return rhs(u0 + delta, cfg.dealias)

    return _march(u0, u0, derivative, lambda delta: delta, cfg, times)


def integrate_m_form(
    u0: SpectralField, cfg: SolverConfig, times: Optional[Sequence[float]] = None
) -> Trajectory:
    """RK4 on dm/dt = m_form_rhs(m, u) with u = helmholtz_inverse(m) at every stage."""
    m0 = helmholtz(u0)

    def derivative(delta: SpectralField) -> SpectralField:
        m = m0 + delta
        return m_form_rhs(m, helmholtz_inverse(m), cfg.dealias)

    return _march(u0, m0, derivative, helmholtz_inverse, cfg, times)


def convergence_factor(u0: SpectralField, cfg: SolverConfig, T: float) -> float:
    """Self-convergence ratio |u_h - u_{h/2}| / |u_{h/2} - u_{h/4}| at time T, h = cfg.dt.

    Close to 16 for a fourth-order scheme in its asymptotic range.
    """
    finals = [
        integrate(u0, replace(cfg, dt=cfg.dt / 2**level), [T]).increments[-1]
        for level in range(3)
    ]
    coarse = lp_norm(finals[0] - finals[1], 2)
    fine = lp_norm(finals[1] - finals[2], 2)
    return coarse / fine if fine > 0 else math.inf


class TrajectoryDiff(NamedTuple):
    t: float
    diff_field: SpectralField
    w_field: SpectralField
    # Besov norms of diff_field at s - 1, s, s + 1 and sigma (s = sigma - 2)
    norms: dict
    # ||w||_{B^s}
    w_norm: float


def trajectory_diffs(
    u0: SpectralField,
    times: Sequence[float],
    cfg: SolverConfig,
    sigma: float,
    p: float = 2.0,
    part: Optional[DyadicPartition] = None,
    use_v0: bool = True,
) -> list[TrajectoryDiff]:
    part = part or partition_for(u0.grid)
    s = sigma - 2
    v0 = rhs(u0, cfg.dealias) if use_v0 else SpectralField.zeros(u0.grid, u0.components)
    trajectory = integrate(u0, cfg, times)

    diffs = []
    for t, diff in zip(trajectory.times, trajectory.increments):
        w = diff - t * v0
        blocks = block_norms(diff, p, part)
        norms = {
            "s_minus_1": besov_from_blocks(blocks, s - 1),
            "s": besov_from_blocks(blocks, s),
            "s_plus_1": besov_from_blocks(blocks, s + 1),
            "sigma": besov_from_blocks(blocks, sigma),
        }
        diffs.append(TrajectoryDiff(t, diff, w, norms, besov_norm(w, BesovParams(s, p), part)))
    return diffs


def difference_scaling(
    u0: SpectralField,
    times: Sequence[float],
    cfg: SolverConfig,
    sigma: float,
    p: float = 2.0,
    part: Optional[DyadicPartition] = None,
) -> pd.DataFrame:
    """||u(t) - u0|| at the Besov levels s - 1, s, s + 1 and sigma."""
    rows = []
    for diff in trajectory_diffs(u0, times, cfg, sigma, p, part):
        rows.append(
            {
                "t": diff.t,
                "diff_s_minus_1": diff.norms["s_minus_1"],
                "diff_s": diff.norms["s"],
                "diff_s_plus_1": diff.norms["s_plus_1"],
                "diff_sigma": diff.norms["sigma"],
            }
        )
    return pd.DataFrame(rows)


def w_scaling(
    u0: SpectralField,
    times: Sequence[float],
    cfg: SolverConfig,
    sigma: float,
    p: float = 2.0,
    part: Optional[DyadicPartition] = None,
    use_v0: bool = True,
) -> pd.DataFrame:
    """||u(t) - u0 - t v0||_{B^{sigma-2}}; with use_v0=False the correction is dropped."""
    diffs = trajectory_diffs(u0, times, cfg, sigma, p, part, use_v0=use_v0)
    return pd.DataFrame({"t": [d.t for d in diffs], "w_norm": [d.w_norm for d in diffs]})


def difference_constants(
    u0: SpectralField,
    times: Sequence[float],
    cfg: SolverConfig,
    sigma: float,
    p: float = 2.0,
    part: Optional[DyadicPartition] = None,
) -> pd.DataFrame:
    """Measured differences divided by the right-hand sides of the a priori bounds.

    Columns `level_*` divide ||u(t) - u0||_{B^level} by t times the matching
    product of initial norms; `w_level` divides ||w||_{B^s} by t^2 times the
    cubic combination.
    """
    part = part or partition_for(u0.grid)
    s = sigma - 2
    blocks0 = block_norms(u0, p, part)
    b = {level: besov_from_blocks(blocks0, s + level) for level in (-1, 0, 1, 2)}

    bound_low = b[-1] * b[0]
    bound_mid = b[0] ** 2 + b[-1] * b[1]
    bound_high = b[0] * b[1] + b[-1] * b[2]
    bound_w = b[0] ** 3 + b[-1] * b[0] * b[1] + b[-1] ** 2 * b[2]

    rows = []
    for diff in trajectory_diffs(u0, times, cfg, sigma, p, part):
        if diff.t == 0:
            continue
        t = abs(diff.t)
        rows.append(
            {
                "t": diff.t,
                "level_s_minus_1": diff.norms["s_minus_1"] / (t * bound_low),
                "level_s": diff.norms["s"] / (t * bound_mid),
                "level_s_plus_1": diff.norms["s_plus_1"] / (t * bound_high),
                "w_level": diff.w_norm / (t**2 * bound_w),
            }
        )
    return pd.DataFrame(rows)
