"""Radio-map twinning with compressed and kernel DMD, Kriging and median-mask fusion."""

__version__ = "0.1.0"

from .dmd import DmdModel, dmd_fit, dmd_reconstruct_all, dmd_state, vandermonde
from .ensemble import TwinConfig, TwinModel, fuse, median_mask, twin_emit, twin_fit
from .errors import (
    ChantwinError,
    ConfigError,
    DataError,
    DivergenceWarning,
    NumericalError,
)
from .grid import Grid, RadioMap, SnapshotPair, SnapshotSeries, make_grid, split_snapshots
from .kriging import KrigingPlan, SampleSet, VariogramModel, kriging_interpolate
from .metrics import correlation, mse, psnr, ssim
from .powerapp import AllocationConfig, water_filling
from .synthdata import ChannelParams, Scenario, default_scenario, generate_series
from .variants import CompressionSpec, KernelSpec, cdmd_fit, edmd_fit, edmd_state

__all__ = [
    "AllocationConfig", "ChannelParams", "ChantwinError", "CompressionSpec", "ConfigError",
    "DataError", "DivergenceWarning", "DmdModel", "Grid", "KernelSpec", "KrigingPlan",
    "NumericalError", "RadioMap", "SampleSet", "Scenario", "SnapshotPair", "SnapshotSeries",
    "TwinConfig", "TwinModel", "VariogramModel", "cdmd_fit", "correlation", "default_scenario",
    "dmd_fit", "dmd_reconstruct_all", "dmd_state", "edmd_fit", "edmd_state", "fuse",
    "generate_series", "kriging_interpolate", "make_grid", "median_mask", "mse", "psnr",
    "split_snapshots", "ssim", "twin_emit", "twin_fit", "vandermonde", "water_filling",
]
