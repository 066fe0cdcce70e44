"""Twin-quality metrics: MSE, PSNR, global SSIM, correlation.

All functions take :class:`~chantwin.grid.RadioMap` objects or plain arrays.
SSIM uses whole-map statistics (one window) with population variances.
PSNR uses ``|max(truth)|^2`` as the peak, as is conventional for these
maps; with negative dB gains this peak is the square of the gain closest to
zero, not of the largest magnitude.
"""

from __future__ import annotations

import numpy as np

from .errors import DegeneratePeak, DegenerateVariance, DimensionMismatch
from .grid import RadioMap


def _pair(truth, twin) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(truth.values if isinstance(truth, RadioMap) else truth, dtype=float)
    b = np.asarray(twin.values if isinstance(twin, RadioMap) else twin, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"maps have shapes {a.shape} and {b.shape}")
    return a, b


def mse(truth, twin) -> float:
    a, b = _pair(truth, twin)
    return float(np.mean((a - b) ** 2))


def psnr(truth, twin) -> float:
    """PSNR in dB; ``inf`` for identical maps."""
    a, _ = _pair(truth, twin)
    peak = abs(float(np.max(a))) ** 2
    if peak == 0:
        raise DegeneratePeak("maximum of the true map is zero")
    err = mse(truth, twin)
    if err == 0:
        return float("inf")
    return float(10.0 * np.log10(peak / err))


def default_stabilizers(truth) -> tuple[float, float]:
    """``c1 = (0.01 D)^2, c2 = (0.03 D)^2`` with ``D`` the truth's dynamic range."""
    a = np.asarray(truth.values if isinstance(truth, RadioMap) else truth, dtype=float)
    D = float(np.ptp(a))
    return (0.01 * D) ** 2, (0.03 * D) ** 2


def ssim(truth, twin, c1: float | None = None, c2: float | None = None) -> float:
    a, b = _pair(truth, twin)
    if c1 is None or c2 is None:
        d1, d2 = default_stabilizers(a)
        c1 = d1 if c1 is None else c1
        c2 = d2 if c2 is None else c2
    mu_a, mu_b = a.mean(), b.mean()
    da, db = a - mu_a, b - mu_b
    var_a, var_b = np.mean(da * da), np.mean(db * db)
    cov = np.mean(da * db)
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    if den == 0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float(num / den)


def correlation(truth, twin) -> float:
    a, b = _pair(truth, twin)
    da = (a - a.mean()).ravel()
    db = (b - b.mean()).ravel()
    na, nb = np.linalg.norm(da), np.linalg.norm(db)
    if na == 0 or nb == 0:
        raise DegenerateVariance("correlation is undefined for a constant map")
    return float(np.clip(da @ db / (na * nb), -1.0, 1.0))


def abs_error_map(truth, twin):
    a, b = _pair(truth, twin)
    err = np.abs(a - b)
    if isinstance(truth, RadioMap):
        return RadioMap(truth.grid, err, truth.time_index)
    return err


def all_metrics(truth, twin) -> dict[str, float]:
    return {
        "mse": mse(truth, twin),
        "psnr": psnr(truth, twin),
        "ssim": ssim(truth, twin),
        "corr": correlation(truth, twin),
    }
