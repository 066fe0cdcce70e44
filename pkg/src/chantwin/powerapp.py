"""Water-filling power allocation driven by twin radio maps.

Powers are allocated from the twin's gains and the resulting sum rate is
always scored on the true gains; ``rate_oracle`` allocates and scores on the
true gains. Scoring on twin gains would hide every twin error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .grid import Grid, RadioMap


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class AllocationConfig:
    total_power: float = 40.0  # dBm
    noise_power: float = -40.0  # dBm
    bandwidth: float = 50e6  # Hz

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")

    @property
    def total_watts(self) -> float:
        return float(dbm_to_watt(self.total_power))

    @property
    def noise_watts(self) -> float:
        return float(dbm_to_watt(self.noise_power))


def sample_users(grid: Grid, k: int, seed: int) -> np.ndarray:
    """``k`` distinct cell indices, uniform without replacement.

    The selection is the first ``k`` entries of a seeded permutation, so for a
    fixed seed smaller user sets are nested inside larger ones.
    """
    if not 0 <= k <= grid.size:
        raise DataError(f"cannot place {k} users on {grid.size} cells")
    return np.random.default_rng([int(seed), 29]).permutation(grid.size)[:k]


def water_level(gains, total: float, noise: float) -> float:
    """Level ``mu`` with ``sum max(0, mu - noise/g_i) = total`` (exact).

    Channels are sorted by their floor ``noise/g``; the active set is the
    longest prefix whose floors all lie below the level implied by sharing
    ``total`` among them.
    """
    g = np.asarray(gains, dtype=float)
    if not np.any(g > 0):
        raise DataError("water-filling needs at least one positive gain")
    floors = np.sort(noise / g[g > 0])
    csum = np.cumsum(floors)
    k = np.arange(1, floors.size + 1)
    levels = (total + csum) / k
    active = int(np.nonzero(levels > floors)[0].max()) + 1
    return float(levels[active - 1])


def water_filling(gains, config: AllocationConfig = AllocationConfig(), *, total=None, noise=None) -> np.ndarray:
    """Optimal powers (W) maximising ``sum log2(1 + p_i g_i / n)``.

    ``total`` and ``noise`` in watts override the config values.
    """
    g = np.asarray(gains, dtype=float)
    total = config.total_watts if total is None else float(total)
    noise = config.noise_watts if noise is None else float(noise)
    mu = water_level(g, total, noise)
    with np.errstate(divide="ignore"):
        floors = np.where(g > 0, noise / np.where(g > 0, g, 1.0), np.inf)
    return np.maximum(0.0, mu - floors)


def sum_rate(powers, gains, config: AllocationConfig = AllocationConfig(), *, noise=None) -> float:
    """Shannon sum rate in bit/s."""
    noise = config.noise_watts if noise is None else float(noise)
    p = np.asarray(powers, dtype=float)
    g = np.asarray(gains, dtype=float)
    return float(config.bandwidth * np.sum(np.log2(1.0 + p * g / noise)))


def evaluate_allocation(truth: RadioMap, twin: RadioMap, users, config: AllocationConfig = AllocationConfig()) -> tuple[float, float]:
    """Sum rates ``(rate_twin, rate_oracle)`` for the given user cells."""
    if truth.grid != twin.grid:
        raise DataError("truth and twin maps live on different grids")
    users = np.asarray(users, dtype=int)
    if users.size and (users.min() < 0 or users.max() >= truth.grid.size):
        raise DataError("user index outside the map grid")
    g_true = db_to_linear(truth.values.ravel()[users])
    g_twin = db_to_linear(twin.values.ravel()[users])
    rate_twin = sum_rate(water_filling(g_twin, config), g_true, config)
    rate_oracle = sum_rate(water_filling(g_true, config), g_true, config)
    return rate_twin, rate_oracle


def allocation_trials(truth: RadioMap, twin: RadioMap, ks, n_trials: int, seed: int = 0,
                      config: AllocationConfig = AllocationConfig()) -> list[dict]:
    """One row ``{seed, k, rate_twin, rate_oracle}`` per (trial, k)."""
    rows = []
    for trial in range(n_trials):
        s = seed + trial
        for k in ks:
            users = sample_users(truth.grid, k, s)
            rt, ro = evaluate_allocation(truth, twin, users, config)
            rows.append({"seed": s, "k": int(k), "rate_twin": rt, "rate_oracle": ro})
    return rows
