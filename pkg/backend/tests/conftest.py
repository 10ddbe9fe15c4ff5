import math
from dataclasses import replace

import numpy as np
import pytest

from chbesov.config import ExperimentConfig, ExperimentSettings, GridSettings
from chbesov.initial_data import InitialDataSpec, build_u0
from chbesov.littlewood_paley import partition_for
from chbesov.solver import SolverConfig
from chbesov.spectral_grid import SpectralField, TorusGrid, to_spectral


@pytest.fixture(scope="session")
def desk_spec() -> InitialDataSpec:
    return InitialDataSpec(d=2, k=2, N=3, sigma=4.5, p=2.0)


@pytest.fixture(scope="session")
def desk_grid() -> TorusGrid:
    return TorusGrid(d=2, L=24 * math.pi, M=4096, M_perp=64)


@pytest.fixture(scope="session")
def desk_partition(desk_grid):
    return partition_for(desk_grid)


@pytest.fixture(scope="session")
def desk_u0(desk_spec, desk_grid) -> SpectralField:
    return build_u0(desk_spec, desk_grid)


@pytest.fixture
def small_grid() -> TorusGrid:
    return TorusGrid(d=2, L=2 * math.pi, M=32)


@pytest.fixture
def line_grid() -> TorusGrid:
    return TorusGrid(d=1, L=2 * math.pi, M=64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def harmonic_datum(small_grid) -> SpectralField:
    """Small smooth two-component field built from index-one harmonics."""
    x1, x2 = small_grid.coordinates()
    shape = small_grid.shape
    first = np.broadcast_to(0.5 * np.sin(x2) + 0.25 * np.cos(x1 + x2), shape)
    second = np.broadcast_to(0.35 * np.cos(x1) + 0.15 * np.sin(x2), shape)
    return to_spectral(np.stack([first, second]), small_grid)


@pytest.fixture
def test_config(tmp_path, monkeypatch) -> ExperimentConfig:
    """Desk-scale configuration writing into a temporary directory."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CHBESOV_CONFIG", raising=False)
    return ExperimentConfig(
        spec=InitialDataSpec(),
        grid=GridSettings(M=4096, M_perp=64),
        solver=SolverConfig(dt=1e-3),
        experiment=ExperimentSettings(out_dir=str(tmp_path / "out"), workers=2),
    )


@pytest.fixture
def quick_config(test_config) -> ExperimentConfig:
    """Two-cell sweep on the desk grid."""
    return replace(
        test_config,
        experiment=replace(test_config.experiment, eps_list=[0.05], n_list=[1, 2]),
    )
