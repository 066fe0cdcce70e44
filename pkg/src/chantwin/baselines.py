"""Reference twins to put the ensemble's numbers in context."""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .grid import SnapshotSeries


def persistence_state(series: SnapshotSeries, t: int) -> np.ndarray:
    """Measured snapshot ``t`` inside the window, the last one beyond it.

    This is the "nothing changes" forecaster: any twin that cannot beat it
    beyond the training window is not modelling the dynamics.
    """
    if t < 0:
        raise DataError(f"time index must be non-negative, got {t}")
    return np.array(series.data[min(t, len(series) - 1)])
