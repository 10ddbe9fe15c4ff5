import math
import os
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Union

import tomli
from dataclasses_json import DataClassJsonMixin
from pydantic import Field, field_validator
from pydantic.dataclasses import dataclass

from chbesov.initial_data import InitialDataSpec, minimal_grid_size
from chbesov.logger import logger
from chbesov.solver import SolverConfig
from chbesov.spectral_grid import TorusGrid
from chbesov.version import __version__

DEFAULT_CONFIG_NAME = "chbesov.toml"

# Default config file created by `chbesov init`
DEFAULT_CONFIG_STR = f"""[grid]
# Spatial dimension (1 to 3)
d = 2
# Period of every axis in units of pi (24 puts the frequencies m/12 on the lattice)
L_over_pi = 24.0
# Grid points along x_1. Leave unset to use the smallest admissible power of two.
# M = 4096
# Grid points along x_2..x_d
M_perp = 64

[initial_data]
d = 2
# Block n of the datum sits at dyadic index k*n
k = 2
# Number of modulated blocks (n = 1..N) beyond the n = 0 block
N = 3
sigma = 4.5
p = 2.0

[solver]
dt = 1e-3
dealias = 0.6666666666666666
cfl = 0.5
diagnostics_every = 10
diagnostic_s = 2.5
diagnostic_p = 2.0

[experiment]
# t = eps * 2^(-kn) for every eps and every n below
eps_list = [0.02, 0.05, 0.1]
n_list = [1, 2, 3]
# Block of the smooth control datum 2^(-k sigma n) f_n
baseline_n = 1
# Block at which the O(t) and O(t^2) laws are fitted
scaling_n = 2
scaling_points = 5
# Seed for every randomised check
seed = 0
# Concurrent sweep cells
workers = 2
out_dir = "chbesov-out"

[meta]
generated_by = "{__version__}"
"""


@dataclass(frozen=True)
class GridSettings(DataClassJsonMixin):
    d: int = Field(default=2, ge=1, le=3)
    L_over_pi: float = Field(default=24.0, gt=0)
    M: Optional[int] = None
    M_perp: Optional[int] = 64

    @property
    def L(self) -> float:
        return self.L_over_pi * math.pi


@dataclass(frozen=True)
class ExperimentSettings(DataClassJsonMixin):
    eps_list: List[float] = Field(default_factory=lambda: [0.02, 0.05, 0.1])
    n_list: List[int] = Field(default_factory=lambda: [1, 2, 3])
    baseline_n: int = Field(default=1, ge=1)
    scaling_n: int = Field(default=2, ge=1)
    scaling_points: int = Field(default=5, ge=2)
    seed: int = 0
    workers: int = Field(default=2, ge=1)
    out_dir: str = "chbesov-out"

    @field_validator("eps_list")
    @classmethod
    def _eps_in_unit_interval(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("eps_list must not be empty")
        for eps in value:
            if not 0 < eps <= 1:
                raise ValueError(f"eps values must lie in (0, 1], got {eps}")
        return value

    @field_validator("n_list")
    @classmethod
    def _positive_blocks(cls, value: List[int]) -> List[int]:
        if not value or min(value) < 1:
            raise ValueError("n_list must hold block indices >= 1")
        return value


@dataclass(frozen=True)
class ExperimentConfig(DataClassJsonMixin):
    spec: InitialDataSpec = Field(default_factory=InitialDataSpec)
    grid: GridSettings = Field(default_factory=GridSettings)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)

    def build_grid(self) -> TorusGrid:
        M = self.grid.M
        if M is None:
            M = minimal_grid_size(self.spec, self.grid.L, self.solver.dealias, self.grid.M_perp)
        return TorusGrid(d=self.grid.d, L=self.grid.L, M=M, M_perp=self.grid.M_perp)

    def check(self) -> None:
        """Cross-section constraints that single sections cannot validate."""
        if self.spec.d != self.grid.d:
            raise ValueError(f"initial_data.d={self.spec.d} differs from grid.d={self.grid.d}")
        too_high = [n for n in self.experiment.n_list if n > self.spec.N]
        if too_high:
            raise ValueError(f"n_list entries {too_high} exceed N={self.spec.N}")
        if self.experiment.baseline_n > self.spec.N or self.experiment.scaling_n > self.spec.N:
            raise ValueError("baseline_n and scaling_n must not exceed N")


def init_config(path: Union[str, Path] = DEFAULT_CONFIG_NAME, log: bool = False) -> Path:
    """Write the default configuration file if it doesn't exist."""
    config_file = Path(path)
    if not config_file.exists():
        config_file.parent.mkdir(parents=True, exist_ok=True)
        config_file.write_text(DEFAULT_CONFIG_STR, encoding="utf-8")
        logger.info(f"Created default config file at {config_file}")
    elif log:
        logger.info(f"Config file already exists at {config_file}")
    return config_file


def _section(toml_dict: dict, name: str) -> dict:
    section = toml_dict.get(name, {})
    if not isinstance(section, dict):
        raise ValueError(f"Config section [{name}] must be a table")
    return section


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Load the configuration, falling back to defaults when no file exists."""
    if path is None:
        path = os.environ.get("CHBESOV_CONFIG", DEFAULT_CONFIG_NAME)
    config_file = Path(path)
    if not config_file.exists():
        logger.debug(f"No config file at {config_file}, using defaults")
        return ExperimentConfig()

    with open(config_file, "rb") as f:
        toml_dict = tomli.load(f)

    meta = toml_dict.get("meta")
    if not meta or not meta.get("generated_by"):
        logger.warning(f"Config file '{config_file}' has no [meta] section, it may be outdated")

    return ExperimentConfig(
        spec=InitialDataSpec(**_section(toml_dict, "initial_data")),
        grid=GridSettings(**_section(toml_dict, "grid")),
        solver=SolverConfig(**_section(toml_dict, "solver")),
        experiment=ExperimentSettings(**_section(toml_dict, "experiment")),
    )


def apply_overrides(
    cfg: ExperimentConfig,
    d: Optional[int] = None,
    k: Optional[int] = None,
    N: Optional[int] = None,
    sigma: Optional[float] = None,
    p: Optional[float] = None,
    grid_m: Optional[int] = None,
    eps: Optional[Sequence[float]] = None,
    n_list: Optional[Sequence[int]] = None,
    out: Optional[str] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    """Return a copy of cfg with command-line flags applied."""
    spec_changes = {
        key: value
        for key, value in {"d": d, "k": k, "N": N, "sigma": sigma, "p": p}.items()
        if value is not None
    }
    grid_changes = {key: value for key, value in {"d": d, "M": grid_m}.items() if value is not None}
    experiment_changes = {
        key: value
        for key, value in {
            "eps_list": list(eps) if eps else None,
            "n_list": list(n_list) if n_list else None,
            "out_dir": out,
            "workers": workers,
        }.items()
        if value is not None
    }
    return replace(
        cfg,
        spec=replace(cfg.spec, **spec_changes),
        grid=replace(cfg.grid, **grid_changes),
        experiment=replace(cfg.experiment, **experiment_changes),
    )
