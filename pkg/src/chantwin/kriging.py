"""Ordinary Kriging with fitted variogram models.

The predictor is ``sum_i w_i g_i`` with ``sum_i w_i = 1``; the Lagrange
multiplier of the unbiasedness constraint is returned but never added to the
prediction. Semivariance at zero lag is exactly zero, so with any nugget the
interpolant still honours the samples at their own locations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .errors import DataError, DuplicateLocations, SingularSystem
from .grid import Grid, RadioMap

VARIOGRAM_KINDS = ("exponential", "gaussian", "spherical")
ZERO_LAG = 1e-9
SILL_FLOOR = 1e-12


def _structure(kind: str, h: np.ndarray, range_: float) -> np.ndarray:
    """Unit-sill structure function, 0 at h=0 and rising to 1."""
    x = h / range_
    if kind == "exponential":
        return 1.0 - np.exp(-x)
    if kind == "gaussian":
        return 1.0 - np.exp(-(x**2))
    return np.where(x < 1.0, 1.5 * x - 0.5 * x**3, 1.0)


@dataclass(frozen=True)
class VariogramModel:
    """Isotropic semivariogram ``nugget + sill * f(h / range)`` for ``h > 0``.

    ``sill`` is the partial sill above the nugget.
    """

    kind: str = "exponential"
    nugget: float = 0.0
    sill: float = 1.0
    range: float = 1.0
    degenerate: bool = False

    def __post_init__(self):
        if self.kind not in VARIOGRAM_KINDS:
            raise DataError(f"unknown variogram kind {self.kind!r}")
        if not self.nugget >= 0:
            raise DataError(f"nugget must be non-negative, got {self.nugget}")
        if not self.sill > 0:
            raise DataError(f"sill must be positive, got {self.sill}")
        if not self.range > 0:
            raise DataError(f"range must be positive, got {self.range}")

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        gamma = self.nugget + self.sill * _structure(self.kind, h, self.range)
        return np.where(h < ZERO_LAG, 0.0, gamma)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Scattered measurements ``{(q_i, g_i)}``; locations must be distinct."""

    locations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        locs = np.array(self.locations, dtype=float).reshape(-1, 2)
        vals = np.array(self.values, dtype=float).ravel()
        if locs.shape[0] != vals.shape[0]:
            raise DataError(f"{locs.shape[0]} locations for {vals.shape[0]} values")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(vals))):
            raise DataError("samples must be finite")
        if locs.shape[0] > 1 and cKDTree(locs).query_pairs(ZERO_LAG):
            raise DuplicateLocations("sample locations must be distinct")
        locs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_grid(cls, grid: Grid, values) -> SampleSet:
        return cls(grid.positions(), np.asarray(values, dtype=float).ravel())


class EmpiricalVariogram(NamedTuple):
    """Binned Matheron estimate; empty bins are dropped."""

    lags: np.ndarray
    semivariances: np.ndarray
    counts: np.ndarray


def empirical_variogram(samples: SampleSet, n_bins: int = 15, max_lag: float | None = None) -> EmpiricalVariogram:
    """Matheron estimator ``mean(0.5 (g_i - g_j)^2)`` over distance bins.

    Bins split ``(0, max_lag]`` evenly; ``max_lag`` defaults to half the largest
    pairwise distance. Each bin reports the mean distance of its pairs.
    """
    if len(samples) < 2:
        raise DataError("need at least two samples for a variogram")
    d = pdist(samples.locations)
    if not np.any(d > ZERO_LAG):
        raise DataError("all samples are co-located")
    sq = 0.5 * pdist(samples.values[:, None], "sqeuclidean")
    if max_lag is None:
        max_lag = 0.5 * d.max() if d.size > 1 else d.max()
    edges = np.linspace(0.0, max_lag, n_bins + 1)
    sel = d <= max_lag
    which = np.clip(np.searchsorted(edges, d[sel], side="left") - 1, 0, n_bins - 1)
    counts = np.bincount(which, minlength=n_bins)
    lag_sum = np.bincount(which, weights=d[sel], minlength=n_bins)
    gam_sum = np.bincount(which, weights=sq[sel], minlength=n_bins)
    ok = counts > 0
    return EmpiricalVariogram(lag_sum[ok] / counts[ok], gam_sum[ok] / counts[ok], counts[ok])


def _residuals(params, kind, lags, gam, sqrt_w):
    nugget, sill, range_ = params
    return sqrt_w * (nugget + sill * _structure(kind, lags, range_) - gam)


def fit_variogram(empirical: EmpiricalVariogram, kind: str = "exponential", weighted: bool = True) -> VariogramModel:
    """Least-squares fit of ``(nugget, sill, range)`` to binned semivariances.

    Weights are the bin pair counts unless ``weighted`` is false. The fit is
    started from a few range guesses and the best solution kept, so the
    result depends only on the input bins.
    """
    lags, gam, counts = (np.asarray(a, dtype=float) for a in empirical)
    if lags.size < 3:
        raise DataError(f"need at least 3 non-empty bins, got {lags.size}")
    if kind not in VARIOGRAM_KINDS:
        raise DataError(f"unknown variogram kind {kind!r}")
    top = float(gam.max())
    if top <= SILL_FLOOR:
        return VariogramModel(kind, 0.0, SILL_FLOOR, float(lags.max()), degenerate=True)

    sqrt_w = np.sqrt(counts / counts.sum()) if weighted else np.ones_like(gam) / np.sqrt(gam.size)
    lmax = float(lags.max())
    lower = [0.0, SILL_FLOOR, 1e-3 * lmax]
    upper = [top, 100.0 * top, 100.0 * lmax]
    best = None
    for frac in (0.1, 0.3, 1.0, 3.0):
        x0 = [min(0.1 * float(gam.min()), top), max(top - 0.1 * float(gam.min()), 2 * SILL_FLOOR), frac * lmax]
        x0 = np.clip(x0, lower, upper)
        sol = least_squares(
            _residuals, x0, bounds=(lower, upper), args=(kind, lags, gam, sqrt_w),
            method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000,
        )
        if best is None or sol.cost < best.cost:
            best = sol
    nugget, sill, range_ = (float(v) for v in best.x)
    return VariogramModel(kind, nugget, sill, range_)


def variogram_residual(model: VariogramModel, empirical: EmpiricalVariogram, weighted: bool = True) -> float:
    """Sum of (optionally pair-count weighted) squared bin misfits."""
    lags, gam, counts = (np.asarray(a, dtype=float) for a in empirical)
    w = counts / counts.sum() if weighted else np.ones_like(gam) / gam.size
    fit = model.nugget + model.sill * _structure(model.kind, lags, model.range)
    return float(np.sum(w * (fit - gam) ** 2))


def fit_variogram_to_samples(samples: SampleSet, kind: str = "exponential", n_bins: int = 15) -> VariogramModel:
    return fit_variogram(empirical_variogram(samples, n_bins), kind)


def _system_matrix(locs: np.ndarray, model: VariogramModel) -> np.ndarray:
    m = locs.shape[0]
    S = np.ones((m + 1, m + 1))
    S[:m, :m] = model(cdist(locs, locs))
    S[m, m] = 0.0
    return S


def kriging_weights(sample_locs, target, model: VariogramModel) -> tuple[np.ndarray, float]:
    """Ordinary-Kriging weights for one target and the Lagrange multiplier."""
    locs = np.asarray(sample_locs, dtype=float).reshape(-1, 2)
    if locs.shape[0] < 2:
        raise DataError("need at least two samples")
    rhs = np.ones(locs.shape[0] + 1)
    rhs[:-1] = model(np.linalg.norm(locs - np.asarray(target, dtype=float), axis=1))
    try:
        sol = scipy.linalg.solve(_system_matrix(locs, model), rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularSystem("Kriging system is singular") from exc
    return sol[:-1], float(sol[-1])


class KrigingPlan:
    """Factorised Kriging system for fixed sample and target locations.

    Building the plan costs one ``(M+1)``-square factorisation plus the
    target-to-sample semivariances; each :meth:`predict` is then one solve and
    one matrix-vector product. The solve uses the dual form: the prediction
    at a target equals ``[gamma_t, 1] . S^-1 [g, 0]``.
    """

    def __init__(self, sample_locs, targets, model: VariogramModel):
        self.sample_locs = np.asarray(sample_locs, dtype=float).reshape(-1, 2)
        self.targets = np.asarray(targets, dtype=float).reshape(-1, 2)
        self.model = model
        m = self.sample_locs.shape[0]
        if m < 2:
            raise DataError("need at least two samples")
        S = _system_matrix(self.sample_locs, model)
        self._lu = scipy.linalg.lu_factor(S, check_finite=False)
        if np.min(np.abs(np.diag(self._lu[0]))) <= 1e-14 * np.abs(S).max():
            raise SingularSystem("Kriging system is singular")
        T = np.ones((self.targets.shape[0], m + 1))
        T[:, :m] = model(cdist(self.targets, self.sample_locs))
        self._targets_gamma = T

    def predict(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.sample_locs.shape[0]:
            raise DataError(
                f"{values.size} values for {self.sample_locs.shape[0]} sample locations"
            )
        rhs = np.append(values, 0.0)
        dual = scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)
        return self._targets_gamma @ dual

    def weights(self) -> np.ndarray:
        """Explicit ``(Q, M)`` weight matrix (for checks; memory heavy)."""
        full = scipy.linalg.lu_solve(self._lu, self._targets_gamma.T, check_finite=False)
        return full[:-1].T


def kriging_interpolate(samples: SampleSet, out_grid: Grid, model: VariogramModel, t: int = 0) -> RadioMap:
    plan = KrigingPlan(samples.locations, out_grid.positions(), model)
    return RadioMap(out_grid, plan.predict(samples.values).reshape(out_grid.shape), t)
