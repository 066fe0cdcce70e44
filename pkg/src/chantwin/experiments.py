"""Seeded parameter sweeps on synthetic scenarios.

Each trial generates a scenario, fits the twin on the first ``n_train`` noisy
snapshots and scores emitted maps against the *Kriged clean* snapshot: the
clean coarse field interpolated to the output grid with a variogram fitted on
the clean first snapshot. The generator has no ground truth at output
resolution, so this is the best available reference.

Rows are plain dicts so they can go straight to CSV.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import persistence_state
from .ensemble import TwinConfig, TwinModel, emit_branches, emit_mode, fuse, twin_fit
from .errors import ConfigError, DegenerateVariance
from .grid import RadioMap, SnapshotSeries
from .kriging import KrigingPlan, SampleSet, fit_variogram_to_samples
from .metrics import all_metrics, mse, psnr, ssim
from .synthdata import Scenario, default_scenario, generate_series

RECONSTRUCTION_T = 14
PREDICTION_T = 24
SWEEP_PARAMETERS = ("omega", "noise_variance", "edmd_rank", "horizon")


def truth_plan(clean: SnapshotSeries, grid_out, config: TwinConfig = TwinConfig()) -> KrigingPlan:
    samples = SampleSet.from_grid(clean.grid, clean.data[0])
    vario = fit_variogram_to_samples(samples, config.variogram_kind, config.variogram_bins)
    return KrigingPlan(clean.grid.positions(), grid_out.positions(), vario)


@dataclass(frozen=True, eq=False)
class Trial:
    """One fitted twin with its reference data."""

    scenario: Scenario
    clean: SnapshotSeries
    noisy: SnapshotSeries
    model: TwinModel
    plan: KrigingPlan
    fit_seconds: float
    _branches: dict = field(default_factory=dict, repr=False)

    @property
    def n_train(self) -> int:
        return self.model.n_train

    def truth(self, t: int) -> RadioMap:
        values = self.plan.predict(self.clean.data[t]).reshape(self.model.grid_out.shape)
        return RadioMap(self.model.grid_out, values, t)

    def branches(self, t: int):
        """Kriged cDMD and eDMD maps at ``t`` plus the seconds they took."""
        if t not in self._branches:
            start = time.perf_counter()
            maps = emit_branches(self.model, t)
            self._branches[t] = (maps, time.perf_counter() - start)
        return self._branches[t]

    def persistence(self, t: int) -> RadioMap:
        state = persistence_state(self.noisy.head(self.n_train), t)
        values = self.model.plan.predict(state).reshape(self.model.grid_out.shape)
        return RadioMap(self.model.grid_out, values, t)

    def evaluate(self, t: int, omega: float | None = None) -> dict:
        """Metrics of the fused map and of each branch at time index ``t``."""
        omega = self.model.omega if omega is None else omega
        (map_c, map_e), emit_seconds = self.branches(t)
        start = time.perf_counter()
        fused, _ = fuse(map_c, map_e, omega)
        fuse_seconds = time.perf_counter() - start
        truth = self.truth(t)
        row = {"seed": self.scenario.seed, "t": t, "mode": emit_mode(self.model, t)}
        row.update(_metrics(truth, fused))
        row["mse_cdmd"], row["ssim_cdmd"] = mse(truth, map_c), ssim(truth, map_c)
        row["mse_edmd"], row["ssim_edmd"] = mse(truth, map_e), ssim(truth, map_e)
        persist = self.persistence(t)
        row["mse_persist"], row["ssim_persist"] = mse(truth, persist), ssim(truth, persist)
        row["wall_time"] = self.fit_seconds + emit_seconds + fuse_seconds
        return row


def _metrics(truth, twin) -> dict:
    """All four metrics; ``corr`` is NaN when a map is constant."""
    try:
        return all_metrics(truth, twin)
    except DegenerateVariance:
        return {"mse": mse(truth, twin), "psnr": psnr(truth, twin), "ssim": ssim(truth, twin), "corr": float("nan")}


def prepare_trial(scenario: Scenario, config: TwinConfig = TwinConfig(), n_train: int | None = None,
                  t_max: int | None = None) -> Trial:
    """Generate ``scenario`` far enough to score ``t_max`` and fit on ``n_train``.

    ``n_train`` defaults to the scenario's snapshot count. Extending the
    scenario for the reference frames leaves the training snapshots unchanged.
    """
    n_train = scenario.n_snapshots if n_train is None else n_train
    t_max = n_train - 1 if t_max is None else t_max
    length = max(n_train, t_max + 1)
    clean, noisy = generate_series(scenario.with_(n_snapshots=length))
    start = time.perf_counter()
    model = twin_fit(noisy.head(n_train), config)
    fit_seconds = time.perf_counter() - start
    return Trial(scenario, clean, noisy, model, truth_plan(clean, model.grid_out, config), fit_seconds)


def _base(base: Scenario | None, seed: int) -> Scenario:
    return default_scenario(seed) if base is None else base.with_(seed=seed)


def sweep_omega(seeds, omegas, t: int = RECONSTRUCTION_T, base: Scenario | None = None,
                config: TwinConfig = TwinConfig()) -> list[dict]:
    """One row per (seed, omega); the twin is fitted once per seed."""
    rows = []
    for seed in seeds:
        trial = prepare_trial(_base(base, seed), config, t_max=t)
        for omega in omegas:
            rows.append({"parameter": "omega", "value": float(omega), **trial.evaluate(t, float(omega))})
    return rows


def sweep_noise(seeds, variances, t: int = PREDICTION_T, base: Scenario | None = None,
                config: TwinConfig = TwinConfig()) -> list[dict]:
    rows = []
    for seed in seeds:
        for var in variances:
            scenario = _base(base, seed).with_(noise_variance=float(var))
            trial = prepare_trial(scenario, config, t_max=t)
            rows.append({"parameter": "noise_variance", "value": float(var), **trial.evaluate(t)})
    return rows


def sweep_edmd_rank(seeds, ranks, t: int = RECONSTRUCTION_T, base: Scenario | None = None,
                    config: TwinConfig = TwinConfig()) -> list[dict]:
    rows = []
    for seed in seeds:
        for rank in ranks:
            trial = prepare_trial(_base(base, seed), config.with_(edmd_rank=int(rank)), t_max=t)
            rows.append({"parameter": "edmd_rank", "value": int(rank), **trial.evaluate(t)})
    return rows


def sweep_horizon(seeds, horizon: int = 30, base: Scenario | None = None,
                  config: TwinConfig = TwinConfig()) -> list[dict]:
    """Rows for ``t = N .. N + horizon``; ``value`` is the steps past the window."""
    rows = []
    for seed in seeds:
        scenario = _base(base, seed)
        n = scenario.n_snapshots
        trial = prepare_trial(scenario, config, t_max=n + horizon)
        for t in range(n, n + horizon + 1):
            rows.append({"parameter": "horizon", "value": t - n, **trial.evaluate(t)})
    return rows


def run_sweep(parameter: str, values, seeds, base: Scenario | None = None,
              config: TwinConfig = TwinConfig(), t: int | None = None) -> list[dict]:
    """Dispatch to the sweep named ``parameter``.

    For ``horizon`` the ``values`` are step offsets past the training window
    and only their maximum matters.
    """
    if parameter == "omega":
        return sweep_omega(seeds, values, RECONSTRUCTION_T if t is None else t, base, config)
    if parameter == "noise_variance":
        return sweep_noise(seeds, values, PREDICTION_T if t is None else t, base, config)
    if parameter == "edmd_rank":
        return sweep_edmd_rank(seeds, values, RECONSTRUCTION_T if t is None else t, base, config)
    if parameter == "horizon":
        return sweep_horizon(seeds, int(max(values)), base, config)
    raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")


def mean_by_value(rows: list[dict], key: str) -> tuple[np.ndarray, np.ndarray]:
    """Sorted sweep values and the across-seed mean of ``key`` at each."""
    values = np.array(sorted({r["value"] for r in rows}), dtype=float)
    means = np.array([np.mean([r[key] for r in rows if r["value"] == v]) for v in values])
    return values, means
