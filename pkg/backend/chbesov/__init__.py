from chbesov.ch_operators import (
    advection,
    helmholtz,
    helmholtz_inverse,
    m_form_rhs,
    q_form,
    r_form,
    rhs,
    rhs_terms,
)
from chbesov.config import ExperimentConfig, load_config
from chbesov.experiments import ExperimentRecord, run_inflation_sweep, run_smooth_baseline
from chbesov.initial_data import (
    BumpProfile,
    InadmissibleSpecError,
    InitialDataSpec,
    block_lower_bound_report,
    build_u0,
    bump,
    f_profile,
    g_profile,
)
from chbesov.littlewood_paley import (
    BesovParams,
    CutoffPair,
    DyadicPartition,
    bernstein_check,
    besov_norm,
    build_cutoffs,
    dyadic_block,
    partition_for,
)
from chbesov.logger import logger
from chbesov.solver import (
    SolverConfig,
    SolverHaltError,
    Trajectory,
    TrajectoryDiff,
    difference_scaling,
    integrate,
    integrate_m_form,
    w_scaling,
)
from chbesov.spectral_grid import (
    SpectralField,
    TorusGrid,
    hermitian_defect,
    lp_norm,
    to_physical,
    to_spectral,
)
from chbesov.verification import run_verification_suite
from chbesov.version import __version__

__all__ = [
    "__version__",
    "logger",
    "TorusGrid",
    "SpectralField",
    "to_physical",
    "hermitian_defect",
    "to_spectral",
    "lp_norm",
    "CutoffPair",
    "DyadicPartition",
    "BesovParams",
    "build_cutoffs",
    "partition_for",
    "dyadic_block",
    "besov_norm",
    "bernstein_check",
    "BumpProfile",
    "InitialDataSpec",
    "InadmissibleSpecError",
    "bump",
    "f_profile",
    "g_profile",
    "build_u0",
    "block_lower_bound_report",
    "helmholtz",
    "helmholtz_inverse",
    "advection",
    "q_form",
    "r_form",
    "rhs",
    "rhs_terms",
    "m_form_rhs",
    "SolverConfig",
    "SolverHaltError",
    "Trajectory",
    "TrajectoryDiff",
    "integrate",
    "integrate_m_form",
    "difference_scaling",
    "w_scaling",
    "ExperimentConfig",
    "ExperimentRecord",
    "load_config",
    "run_inflation_sweep",
    "run_smooth_baseline",
    "run_verification_suite",
]
