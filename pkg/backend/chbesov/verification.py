"""Desk-scale verification suite.

Each check measures one quantity, compares it with a fixed threshold and
produces a `CheckResult`. `run_verification_suite` runs them all against one
configuration; the report passes only if every check does.
"""

import math
from dataclasses import replace
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
from dataclasses_json import DataClassJsonMixin
from pydantic.dataclasses import dataclass

from chbesov._utils import geometric_times, loglog_slope
from chbesov.ch_operators import helmholtz, helmholtz_inverse, m_form_rhs, rhs
from chbesov.config import ExperimentConfig
from chbesov.experiments import run_inflation_sweep, run_smooth_baseline
from chbesov.initial_data import (
    InadmissibleSpecError,
    InitialDataSpec,
    block_localization,
    block_lower_bound_report,
    build_u0,
    check_admissible,
    f_profile,
    g_profile,
    localized_pairs,
    square_groups,
    square_of,
)
from chbesov.littlewood_paley import (
    BesovParams,
    CutoffPair,
    besov_norm,
    build_cutoffs,
    dyadic_block,
    partition_for,
    partition_square_sum,
    partition_sum,
)
from chbesov.logger import logger
from chbesov.solver import SolverConfig, convergence_factor, trajectory_diffs, w_scaling
from chbesov.spectral_grid import (
    SpectralField,
    TorusGrid,
    lp_norm,
    random_band_limited,
    to_spectral,
)
from chbesov.storage import write_table

Comparison = Literal["at_most", "at_least", "within"]


@dataclass(frozen=True)
class CheckResult(DataClassJsonMixin):
    name: str
    measured: float
    comparison: Comparison
    low: float = -math.inf
    high: float = math.inf

    @property
    def threshold(self) -> str:
        if self.comparison == "at_most":
            return f"<= {self.high:.6g}"
        if self.comparison == "at_least":
            return f">= {self.low:.6g}"
        return f"[{self.low:.6g}, {self.high:.6g}]"

    @property
    def passed(self) -> bool:
        # NaN compares false everywhere, so incomplete measurements fail.
        return bool(self.low <= self.measured <= self.high)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.name:<36} {self.measured:>14.6g}  {self.threshold:<22} {verdict}"


def at_most(name: str, measured: float, limit: float) -> CheckResult:
    return CheckResult(name, float(measured), "at_most", high=limit)


def at_least(name: str, measured: float, limit: float) -> CheckResult:
    return CheckResult(name, float(measured), "at_least", low=limit)


def within(name: str, measured: float, low: float, high: float) -> CheckResult:
    return CheckResult(name, float(measured), "within", low=low, high=high)


class VerificationReport:
    def __init__(self, checks: Optional[List[CheckResult]] = None):
        self.checks = list(checks or [])

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        logger.info(check.line())
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def lines(self) -> List[str]:
        return [c.line() for c in self.checks]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "name": c.name,
                    "measured": c.measured,
                    "threshold": c.threshold,
                    "verdict": "PASS" if c.passed else "FAIL",
                }
                for c in self.checks
            ]
        )


def check_partition(report: VerificationReport, cutoffs: CutoffPair, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    rho = np.concatenate(
        [np.array([0.0, 0.1, 1.0, 17 / 12, 7.3, 1000.0]), 10.0 ** rng.uniform(-3, 4, 10_000)]
    )
    report.add(at_most("partition_identity", np.max(np.abs(partition_sum(cutoffs, rho) - 1)), 1e-12))

    squares = partition_square_sum(cutoffs, rho)
    report.add(at_least("partition_square_lower", np.min(squares), 0.5 - 1e-12))
    report.add(at_most("partition_square_upper", np.max(squares), 1 + 1e-12))


def check_lattice_partition(report: VerificationReport, grid: TorusGrid, cutoffs: CutoffPair) -> None:
    part = partition_for(grid, cutoffs)
    report.add(at_most("lattice_partition_sum", np.max(np.abs(part.lattice_sum() - 1)), 1e-12))


def check_admissibility(
    report: VerificationReport, cfg: ExperimentConfig, grid: TorusGrid
) -> bool:
    """Whether the configured grid carries the datum; also exercises rejection of a tight grid."""
    ok = True
    try:
        check_admissible(cfg.spec, grid, cfg.solver.dealias)
    except InadmissibleSpecError as e:
        logger.error(f"Configured grid is inadmissible: {e}")
        ok = False
    report.add(at_least("grid_admissible", float(ok), 1.0))

    tight_spec = InitialDataSpec(d=cfg.spec.d, k=1, N=cfg.spec.N, sigma=cfg.spec.sigma, p=cfg.spec.p)
    tight_grid = TorusGrid(d=cfg.spec.d, L=grid.L, M=16, M_perp=grid.M_perp)
    try:
        check_admissible(tight_spec, tight_grid, cfg.solver.dealias)
        rejected = False
    except InadmissibleSpecError as e:
        rejected = e.constraint == "band"
    report.add(at_least("tight_grid_rejected", float(rejected), 1.0))
    return ok


def check_localization(
    report: VerificationReport, spec: InitialDataSpec, grid: TorusGrid, band: float
) -> None:
    part = partition_for(grid)

    worst = 0.0
    for n in range(1, spec.N + 1):
        loc = block_localization(f_profile(spec.k, n, grid, band), spec.k * n, part)
        worst = max(worst, loc.in_block, loc.leakage)
    report.add(at_most("f_profile_localization", worst, 1e-10))

    # The n = 0 profile straddles the low blocks.
    f0 = f_profile(spec.k, 0, grid, band)
    low = sum((dyadic_block(f0, j, part) for j in (-1, 0, 1)), SpectralField.zeros(grid))
    report.add(at_most("f0_low_block_confinement", lp_norm(f0 - low, 2) / lp_norm(f0, 2), 1e-10))

    worst = 0.0
    for m, n in localized_pairs(spec):
        for sign in (1, -1):
            loc = block_localization(g_profile(spec.k, m, n, sign, grid, band), spec.k * n, part)
            worst = max(worst, loc.in_block, loc.leakage)
    report.add(at_most("g_profile_localization", worst, 1e-10))


def check_construction(
    report: VerificationReport, spec: InitialDataSpec, u0: SpectralField, band: float
) -> None:
    grid = u0.grid
    part = partition_for(grid)

    normalized = [
        lp_norm(dyadic_block(u0, spec.k * n, part), spec.p) / spec.weight(n)
        for n in range(spec.N + 1)
    ]
    report.add(at_most("u0_block_spread", max(normalized) / min(normalized), 1.1))

    profile_peak = max(lp_norm(f_profile(spec.k, n, grid, band), spec.p) for n in range(spec.N + 1))
    sigma_norm = besov_norm(u0, BesovParams(spec.sigma, spec.p), part)
    report.add(at_most("u0_besov_bound", sigma_norm / profile_peak, 1 + 1e-10))

    blocks = block_lower_bound_report(u0, spec, part, band)
    report.add(at_least("square_block_positive", blocks["block_norm"].min(), 1e-300))
    report.add(
        at_most("square_block_spread", blocks["block_norm"].max() / blocks["block_norm"].min(), 2.0)
    )
    report.add(
        at_most("i2_over_i1", blocks["i2_over_i1"].max(), 2.0 ** (-spec.k * spec.sigma + 1))
    )

    square = square_of(u0, band)
    groups = square_groups(spec, grid, band).total()
    report.add(at_most("square_groups", lp_norm(groups - square, 2) / lp_norm(square, 2), 1e-10))


def _small_grid(d: int, M: int = 32) -> TorusGrid:
    return TorusGrid(d=d, L=2 * math.pi, M=M)


def smooth_datum(grid: TorusGrid, amplitude: float = 0.5) -> SpectralField:
    """A smooth compressible vector field made of a few low harmonics."""
    x = grid.coordinates()
    x1, x2 = x[0], x[1] if grid.d > 1 else 0.0 * x[0]
    shape = grid.shape
    first = np.broadcast_to(np.sin(x2) + 0.5 * np.cos(x1 + x2), shape)
    others = [np.broadcast_to(0.7 * np.cos(x1) + 0.3 * np.sin(xi), shape) for xi in x[1:]]
    return amplitude * to_spectral(np.stack([first] + others), grid)


def check_formulations(report: VerificationReport, d: int, band: float, seed: int = 0) -> None:
    grid = _small_grid(d)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        u = random_band_limited(grid, rng, fraction=band, decay=2.0)
        transport = rhs(u, band)
        momentum = helmholtz_inverse(m_form_rhs(helmholtz(u), u, band))
        worst = max(worst, lp_norm(transport - momentum, 2) / lp_norm(transport, 2))
    report.add(at_most("formulation_equivalence", worst, 1e-8))


def check_convergence(report: VerificationReport, d: int, band: float) -> None:
    u0 = smooth_datum(_small_grid(d))
    factor = convergence_factor(u0, SolverConfig(dt=0.04, dealias=band), T=0.4)
    report.add(within("rk4_convergence_factor", factor, 12.0, 20.0))


def check_scaling_laws(report: VerificationReport, cfg: ExperimentConfig, u0: SpectralField) -> None:
    spec = cfg.spec
    scale = 2.0 ** (-spec.k * cfg.experiment.scaling_n)
    times = geometric_times(1e-4 * scale, 1e-3 * scale, cfg.experiment.scaling_points)
    diffs = trajectory_diffs(u0, times, cfg.solver, spec.sigma, spec.p)

    diff_s = [d.norms["s"] for d in diffs]
    report.add(within("difference_slope", loglog_slope(times, diff_s), 0.85, 1.15))
    report.add(within("w_slope", loglog_slope(times, [d.w_norm for d in diffs]), 1.8, 2.2))
    control = w_scaling(u0, times, cfg.solver, spec.sigma, spec.p, use_v0=False)
    report.add(within("w_control_slope", loglog_slope(times, control["w_norm"]), 0.85, 1.15))


def check_inflation(report: VerificationReport, cfg: ExperimentConfig) -> None:
    sweep = run_inflation_sweep(cfg, write=False).frame()
    report.add(at_most("sweep_incomplete_cells", float((~sweep["complete"]).sum()), 0.0))

    chain = all(
        row.besov_sigma_diff * (1 + 1e-9) >= row.block_norm
        and row.block_norm * (1 + 1e-9) >= row.v0_block - row.w_bound
        for row in sweep.itertuples()
        if row.complete
    )
    report.add(at_least("record_chain", float(chain), 1.0))

    worst = math.inf
    for _, cells in sweep.groupby("eps"):
        per_eps = cells.sort_values("n")
        first = per_eps["block_norm"].iloc[0]
        worst = min(worst, (per_eps["block_norm"] / first).min())
    report.add(at_least("inflation_no_decay", worst, 0.5))

    baseline = run_smooth_baseline(cfg, write=False).frame()
    moving = baseline[baseline["t"] > 0]
    report.add(
        within(
            "baseline_slope",
            loglog_slope(moving["t"], moving["besov_sigma_diff"]),
            0.85,
            1.15,
        )
    )


def run_verification_suite(
    cfg: ExperimentConfig,
    chi_shift: float = 0.0,
    out_dir: Optional[Path] = None,
    experiments: bool = True,
) -> VerificationReport:
    """Run every check against `cfg`.

    A nonzero `chi_shift` corrupts the low-frequency cutoff; the partition
    checks then fail. With `experiments=False` the slow time-integration
    checks are skipped.
    """
    report = VerificationReport()
    cutoffs = build_cutoffs(chi_shift)
    band = cfg.solver.dealias
    spec = cfg.spec

    check_partition(report, cutoffs, cfg.experiment.seed)
    try:
        grid = cfg.build_grid()
    except InadmissibleSpecError as e:
        logger.error(f"No admissible grid for the configured datum: {e}")
        report.add(at_least("grid_admissible", 0.0, 1.0))
        return _finish(report, out_dir)

    check_lattice_partition(report, grid, cutoffs)
    if check_admissibility(report, cfg, grid):
        check_localization(report, spec, grid, band)
        u0 = build_u0(spec, grid, band)
        check_construction(report, spec, u0, band)
        check_formulations(report, spec.d, band, cfg.experiment.seed)
        if experiments:
            check_convergence(report, spec.d, band)
            check_scaling_laws(report, cfg, u0)
            check_inflation(report, replace(cfg, grid=replace(cfg.grid, M=grid.M)))

    return _finish(report, out_dir)


def _finish(report: VerificationReport, out_dir: Optional[Path]) -> VerificationReport:
    if out_dir is not None:
        write_table(report.frame(), Path(out_dir) / "verification.csv")
    verdict = "passed" if report.passed else f"failed ({len(report.failures)} checks)"
    logger.info(f"Verification {verdict}")
    return report
