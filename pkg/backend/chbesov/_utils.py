from typing import Sequence

import numpy as np


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("Need at least two matching (x, y) samples to fit a slope")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("Log-log fit requires strictly positive samples")

    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def geometric_times(start: float, stop: float, count: int) -> list[float]:
    """`count` times spaced evenly in log between start and stop (inclusive)."""
    if start <= 0 or stop <= start or count < 2:
        raise ValueError("Expected 0 < start < stop and count >= 2")
    return [float(t) for t in np.geomspace(start, stop, count)]
