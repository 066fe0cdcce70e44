"""Ensemble DMD twin: two DMD branches, Kriging, median-threshold fusion.

Pipeline order for one emitted time index ``t``:

1. evaluate the cDMD and eDMD states at ``t`` on the measurement grid;
2. Krige both to the output grid, giving ``map_c`` and ``map_e``;
3. mask the cells where ``map_e`` is at or above its own median;
4. keep ``map_c`` on the mask and blend ``omega * map_c + (1 - omega) * map_e``
   elsewhere.

The mask is recomputed for every emitted frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .dmd import DmdModel, dmd_state
from .errors import ConfigError, DataError, DimensionMismatch, NumericalError
from .grid import Grid, RadioMap, SnapshotSeries, split_snapshots
from .kriging import VARIOGRAM_KINDS, KrigingPlan, SampleSet, VariogramModel, fit_variogram_to_samples
from .variants import (
    COMPRESSION_KINDS,
    CompressionSpec,
    EdmdModel,
    KernelSpec,
    cdmd_fit,
    default_compressed_dim,
    edmd_fit,
    edmd_state,
)

FUSION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mask:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if not np.all((v == 0) | (v == 1)):
            raise DataError("mask entries must be 0 or 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 - self.values


def median_mask(radio_map: RadioMap) -> tuple[Mask, float]:
    """Mask of cells at or above the map's median, and that median."""
    median = float(np.median(radio_map.values))
    return Mask((radio_map.values >= median).astype(float)), median


@dataclass(frozen=True, eq=False)
class EmitTrace:
    map_c: RadioMap
    map_e: RadioMap
    median: float
    mask: Mask
    fused: RadioMap
    divergent: bool = False


def fuse(map_c: RadioMap, map_e: RadioMap, omega: float) -> tuple[RadioMap, EmitTrace]:
    """Median-threshold fusion of a coarse and a fine map.

    The mask comes from ``map_e``. Inside it the coarse map is kept; outside
    it the two maps are blended with weight ``omega`` on the coarse one.

    Raises
    ------
    DimensionMismatch
        If the maps are on different grids.
    ConfigError
        If ``omega`` is outside ``[0, 1]``.
    """
    if map_c.grid != map_e.grid or map_c.values.shape != map_e.values.shape:
        raise DimensionMismatch("fused maps must share one grid")
    if not 0.0 <= omega <= 1.0:
        raise ConfigError(f"omega must lie in [0, 1], got {omega}")
    mask, median = median_mask(map_e)
    m, m_bar = mask.values, mask.inverse
    c, e = map_c.values, map_e.values
    large = c * m
    small_c = c * m_bar
    small_e = e * m_bar
    fused_values = large + omega * small_c + (1.0 - omega) * small_e

    closed_form = c * m + (omega * c + (1.0 - omega) * e) * m_bar
    if np.max(np.abs(fused_values - closed_form), initial=0.0) > FUSION_TOL:
        raise NumericalError("fusion deviates from its closed form")

    fused = RadioMap(map_c.grid, fused_values, map_c.time_index, map_c.mode)
    return fused, EmitTrace(map_c, map_e, median, mask, fused)


@dataclass(frozen=True)
class TwinConfig:
    """Settings for :func:`twin_fit`.

    ``compression_dim=None`` means ``max(4 * cdmd_rank, 64)`` capped at M;
    ``edmd_rank=None`` means ``N - 2``.
    """

    cdmd_rank: int = 5
    compression_kind: str = "gaussian"
    compression_dim: int | None = None
    compression_seed: int = 0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    edmd_rank: int | None = None
    omega: float = 0.6
    out_shape: tuple[int, int] = (100, 100)
    variogram_kind: str = "exponential"
    variogram_bins: int = 15
    refit_variogram: bool = False

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ConfigError(f"omega must lie in [0, 1], got {self.omega}")
        if self.cdmd_rank < 1:
            raise ConfigError(f"cdmd_rank must be positive, got {self.cdmd_rank}")
        if self.edmd_rank is not None and self.edmd_rank < 1:
            raise ConfigError(f"edmd_rank must be positive, got {self.edmd_rank}")
        if self.compression_kind not in COMPRESSION_KINDS:
            raise ConfigError(f"unknown compression kind {self.compression_kind!r}")
        if self.variogram_kind not in VARIOGRAM_KINDS:
            raise ConfigError(f"unknown variogram kind {self.variogram_kind!r}")
        if self.variogram_bins < 3:
            raise ConfigError(f"variogram_bins must be at least 3, got {self.variogram_bins}")
        if min(self.out_shape) < 2:
            raise ConfigError(f"output grid needs at least 2x2 cells, got {self.out_shape}")

    def with_(self, **changes) -> TwinConfig:
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TwinModel:
    cdmd: DmdModel
    edmd: EdmdModel
    variogram: VariogramModel
    omega: float
    grid_in: Grid
    grid_out: Grid
    config: TwinConfig = field(default_factory=TwinConfig)

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ConfigError(f"omega must lie in [0, 1], got {self.omega}")
        if not self.cdmd.state_dim == self.edmd.state_dim == self.grid_in.size:
            raise DimensionMismatch("both DMD models must live on the input grid")

    @property
    def n_train(self) -> int:
        return self.cdmd.n_train

    @cached_property
    def plan(self) -> KrigingPlan:
        return KrigingPlan(self.grid_in.positions(), self.grid_out.positions(), self.variogram)

    def with_omega(self, omega: float) -> TwinModel:
        twin = replace(self, omega=omega)
        if "plan" in self.__dict__:
            twin.__dict__["plan"] = self.plan
        return twin


def _resolve(config: TwinConfig, n_train: int, m: int):
    rank_c = min(config.cdmd_rank, m, n_train - 1)
    p = config.compression_dim or default_compressed_dim(rank_c, m)
    if config.compression_kind == "identity":
        p = m
    spec = CompressionSpec(p, config.compression_kind, config.compression_seed)
    rank_e = config.edmd_rank if config.edmd_rank is not None else max(1, n_train - 2)
    return rank_c, spec, rank_e


def twin_fit(series: SnapshotSeries, config: TwinConfig = TwinConfig()) -> TwinModel:
    """Fit both DMD branches and the variogram of the first snapshot."""
    if len(series) < 3:
        split_snapshots(series)
    if not series.is_uniform():
        raise DataError("DMD needs uniformly spaced snapshots")
    pair = split_snapshots(series)
    rank_c, spec, rank_e = _resolve(config, len(series), series.grid.size)
    cdmd = cdmd_fit(pair, spec, rank_c)
    edmd = edmd_fit(pair, config.kernel, rank_e)
    samples = SampleSet.from_grid(series.grid, series.data[0])
    variogram = fit_variogram_to_samples(samples, config.variogram_kind, config.variogram_bins)
    grid_out = series.grid.resampled(*config.out_shape)
    return TwinModel(cdmd, edmd, variogram, config.omega, series.grid, grid_out, config)


def emit_mode(model: TwinModel, t: int) -> str:
    return "reconstruction" if t < model.n_train else "prediction"


def krige_state(model: TwinModel, state: np.ndarray, t: int) -> RadioMap:
    """Krige a coarse state vector onto the model's output grid."""
    if model.config.refit_variogram:
        samples = SampleSet.from_grid(model.grid_in, state)
        vario = fit_variogram_to_samples(samples, model.config.variogram_kind, model.config.variogram_bins)
        plan = KrigingPlan(model.grid_in.positions(), model.grid_out.positions(), vario)
    else:
        plan = model.plan
    values = plan.predict(state).reshape(model.grid_out.shape)
    return RadioMap(model.grid_out, values, t, emit_mode(model, t))


def emit_branches(model: TwinModel, t: int) -> tuple[RadioMap, RadioMap]:
    """Kriged cDMD and eDMD maps at time index ``t`` (before fusion)."""
    if t < 0:
        raise DataError(f"time index must be non-negative, got {t}")
    map_c = krige_state(model, dmd_state(model.cdmd, t), t)
    map_e = krige_state(model, edmd_state(model.edmd, t), t)
    return map_c, map_e


def twin_emit(model: TwinModel, t: int) -> tuple[RadioMap, EmitTrace]:
    """Twin radio map at time index ``t`` and the intermediate maps.

    ``t < N`` reconstructs a training frame; ``t >= N`` predicts.
    """
    map_c, map_e = emit_branches(model, t)
    fused, trace = fuse(map_c, map_e, model.omega)
    divergent = model.cdmd.diverges_at(t) or model.edmd.diverges_at(t)
    return fused, replace(trace, divergent=divergent)
