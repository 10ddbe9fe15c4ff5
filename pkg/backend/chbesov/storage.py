"""CSV tables, JSON run manifests and raw coefficient snapshots."""

import json
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import numpy as np
import pandas as pd

from chbesov.logger import logger
from chbesov.spectral_grid import SpectralField, TorusGrid
from chbesov.version import __version__

SNAPSHOT_DTYPE = "<f8"
SNAPSHOT_LAYOUT = "interleaved complex (re, im), C order, shape (components, *grid.shape), FFT index order"


class JSONEncoderNumpy(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def write_table(frame: pd.DataFrame, path: Union[str, Path], columns: Iterable[str] = ()) -> Path:
    """Write a table with bit-stable float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns) or list(frame.columns)
    frame.to_csv(path, columns=columns, index=False, float_format="%.17g", na_rep="nan")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a table written by `write_table`; floats come back bit for bit."""
    return pd.read_csv(path, float_precision="round_trip")


def versions() -> Dict[str, str]:
    import dataclasses_json
    import pydantic

    return {
        "chbesov": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
        "dataclasses_json": getattr(dataclasses_json, "__version__", "unknown"),
    }


def write_manifest(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"versions": versions(), **payload}
    path.write_text(
        json.dumps(document, indent=2, sort_keys=True, cls=JSONEncoderNumpy, ensure_ascii=False),
        encoding="utf-8",
    )
    logger.info(f"Wrote manifest to {path}")
    return path


def _snapshot_paths(path: Union[str, Path]) -> tuple[Path, Path]:
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def dump_field(field: SpectralField, path: Union[str, Path]) -> Path:
    """Store coefficients as little-endian doubles with a JSON sidecar."""
    data_path, meta_path = _snapshot_paths(path)
    data_path.parent.mkdir(parents=True, exist_ok=True)

    interleaved = np.ascontiguousarray(field.coeffs).view(np.float64).astype(SNAPSHOT_DTYPE)
    interleaved.tofile(data_path)

    grid = field.grid
    meta = {
        "d": grid.d,
        "L": grid.L,
        "M": grid.M,
        "M_perp": grid.M_perp,
        "components": field.components,
        "dtype": SNAPSHOT_DTYPE,
        "layout": SNAPSHOT_LAYOUT,
        "generated_by": __version__,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Stored field snapshot at {data_path}")
    return data_path


def load_field(path: Union[str, Path]) -> SpectralField:
    data_path, meta_path = _snapshot_paths(path)
    if not meta_path.exists() or not data_path.exists():
        raise FileNotFoundError(f"Snapshot pair {data_path} / {meta_path} not found")

    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    grid = TorusGrid(d=meta["d"], L=meta["L"], M=meta["M"], M_perp=meta.get("M_perp"))
    raw = np.fromfile(data_path, dtype=meta.get("dtype", SNAPSHOT_DTYPE)).astype(np.float64)

    expected = 2 * meta["components"] * grid.size
    if raw.size != expected:
        raise ValueError(f"Snapshot {data_path} holds {raw.size} doubles, expected {expected}")
    coeffs = raw.view(np.complex128).reshape((meta["components"],) + grid.shape)
    return SpectralField(grid, coeffs.copy())
