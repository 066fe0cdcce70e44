"""Grids, snapshot series and radio maps.

Cells are numbered row-major with x varying fastest::

    index = iy * nx + ix

so a map's value matrix has shape ``(ny, nx)`` and ``values.ravel()`` is the
snapshot vector. The same order is used by every file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionMismatch, TooFewSnapshots

UNIFORM_RTOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice of cell centres.

    Parameters
    ----------
    nx, ny : int
        Number of cells along x and y (both at least 2).
    spacing : float
        Distance between neighbouring cell centres in metres.
    origin : tuple of float
        Position of cell 0.
    """

    nx: int
    ny: int
    spacing: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise DataError(f"grid dimensions must be integers, got {self.nx}x{self.ny}")
        if self.nx < 2 or self.ny < 2:
            raise DataError(f"grid needs at least 2x2 cells, got {self.nx}x{self.ny}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise DataError(f"grid spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of a map's value matrix, ``(ny, nx)``."""
        return (self.ny, self.nx)

    @property
    def extent(self) -> tuple[float, float]:
        """Span of cell centres along x and y."""
        return ((self.nx - 1) * self.spacing, (self.ny - 1) * self.spacing)

    def positions(self) -> np.ndarray:
        """All cell centres as an ``(M, 2)`` array in index order."""
        ix = np.tile(np.arange(self.nx), self.ny)
        iy = np.repeat(np.arange(self.ny), self.nx)
        return np.column_stack(
            (self.origin[0] + ix * self.spacing, self.origin[1] + iy * self.spacing)
        )

    def position_of(self, index: int) -> tuple[float, float]:
        if not 0 <= index < self.size:
            raise IndexError(f"cell index {index} outside grid of {self.size} cells")
        iy, ix = divmod(int(index), self.nx)
        return (self.origin[0] + ix * self.spacing, self.origin[1] + iy * self.spacing)

    def index_of(self, point) -> int:
        """Index of the cell whose centre is nearest to ``point``."""
        ix = int(round((point[0] - self.origin[0]) / self.spacing))
        iy = int(round((point[1] - self.origin[1]) / self.spacing))
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise IndexError(f"point {tuple(point)} lies outside the grid")
        return iy * self.nx + ix

    def resampled(self, nx: int, ny: int) -> Grid:
        """Grid with ``nx`` x ``ny`` cells spanning the same extent.

        The grid keeps square cells, so both axes must imply the same spacing.
        """
        ex, ey = self.extent
        spacing = ex / (nx - 1)
        if not np.isclose(ey / (ny - 1), spacing, rtol=1e-9):
            raise DataError(
                f"cannot resample {self.nx}x{self.ny} to {nx}x{ny} with square cells"
            )
        return Grid(nx, ny, spacing, self.origin)


def make_grid(nx: int, ny: int, spacing: float, origin=(0.0, 0.0)) -> Grid:
    return Grid(nx, ny, spacing, tuple(origin))


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    """Time-ordered stack of vectorised snapshots.

    ``data`` has one row per time instant and one column per grid cell.
    """

    grid: Grid
    times: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        data = _frozen(self.data)
        if data.ndim != 2:
            raise DataError("snapshot data must be a 2-D array")
        if times.ndim != 1 or times.shape[0] != data.shape[0]:
            raise DimensionMismatch(
                f"{times.shape[0]} timestamps for {data.shape[0]} snapshots"
            )
        if data.shape[1] != self.grid.size:
            raise DimensionMismatch(
                f"snapshots have {data.shape[1]} cells, grid has {self.grid.size}"
            )
        if np.any(np.diff(times) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(data)) or not np.all(np.isfinite(times)):
            raise DataError("snapshot data contains non-finite entries")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SnapshotSeries):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.data, other.data)
        )

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[0]

    def is_uniform(self, rtol: float = UNIFORM_RTOL) -> bool:
        steps = np.diff(self.times)
        return steps.size == 0 or bool(np.all(np.abs(steps - steps[0]) <= rtol * abs(steps[0])))

    def head(self, n: int) -> SnapshotSeries:
        """The first ``n`` snapshots."""
        if not 1 <= n <= len(self):
            raise DataError(f"cannot take {n} snapshots from a series of {len(self)}")
        return SnapshotSeries(self.grid, self.times[:n], self.data[:n])

    def snapshot(self, t: int) -> np.ndarray:
        return self.data[t]

    def as_map(self, t: int) -> RadioMap:
        return map_from_vector(self.data[t], self.grid, t)


@dataclass(frozen=True, eq=False)
class SnapshotPair:
    """Column-stacked snapshot matrices ``X = [g1..g_{N-1}]``, ``Xp = [g2..gN]``."""

    X: np.ndarray
    Xp: np.ndarray

    def __post_init__(self):
        if self.X.shape != self.Xp.shape:
            raise DimensionMismatch(f"X is {self.X.shape} but Xp is {self.Xp.shape}")

    @property
    def state_dim(self) -> int:
        return self.X.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.X.shape[1]


def split_snapshots(series: SnapshotSeries) -> SnapshotPair:
    if len(series) < 3:
        raise TooFewSnapshots(f"need at least 3 snapshots, got {len(series)}")
    cols = series.data.T
    return SnapshotPair(_frozen(cols[:, :-1]), _frozen(cols[:, 1:]))


@dataclass(frozen=True, eq=False)
class RadioMap:
    """Gains in dB on ``grid`` at one time index; ``values[iy, ix]``."""

    grid: Grid
    values: np.ndarray
    time_index: int = 0
    mode: str = field(default="", compare=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.shape:
            raise DimensionMismatch(
                f"map values have shape {values.shape}, grid expects {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("radio map contains non-finite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time_index", int(self.time_index))

    def __eq__(self, other):
        if not isinstance(other, RadioMap):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.time_index == other.time_index
            and np.array_equal(self.values, other.values)
        )


def map_from_vector(values, grid: Grid, t: int = 0, mode: str = "") -> RadioMap:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size != grid.size:
        raise DimensionMismatch(
            f"vector of length {values.size} does not fit a {grid.nx}x{grid.ny} grid"
        )
    return RadioMap(grid, values.reshape(grid.shape), t, mode)


def map_to_vector(radio_map: RadioMap) -> np.ndarray:
    return radio_map.values.ravel().copy()
