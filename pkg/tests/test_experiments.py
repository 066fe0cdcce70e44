import numpy as np
import pytest

from chantwin.baselines import persistence_state
from chantwin.ensemble import TwinConfig, twin_emit
from chantwin.errors import ConfigError, DataError
from chantwin.experiments import mean_by_value, prepare_trial, run_sweep
from chantwin.grid import make_grid
from chantwin.kriging import SampleSet, kriging_interpolate
from chantwin.metrics import mse
from chantwin.synthdata import default_scenario

BASE = default_scenario(grid=make_grid(10, 10, 5.0), tx_start=(20.0, 25.0), n_snapshots=12)
CFG = TwinConfig(out_shape=(19, 19))


@pytest.fixture(scope="module")
def trial():
    return prepare_trial(BASE, CFG, t_max=20)


def test_training_window_untouched_by_extension(trial):
    assert trial.n_train == 12 and len(trial.clean) == 21
    from chantwin.synthdata import generate_series

    _, short = generate_series(BASE)
    np.testing.assert_array_equal(trial.noisy.data[:12], short.data)


def test_truth_is_kriged_clean_snapshot(trial):
    samples = SampleSet.from_grid(trial.clean.grid, trial.clean.data[0])
    from chantwin.kriging import fit_variogram_to_samples

    vario = fit_variogram_to_samples(samples)
    ref = kriging_interpolate(SampleSet.from_grid(trial.clean.grid, trial.clean.data[7]), trial.model.grid_out, vario)
    np.testing.assert_allclose(trial.truth(7).values, ref.values, atol=1e-9)


def test_evaluate_row(trial):
    row = trial.evaluate(15)
    assert row["mode"] == "prediction" and row["t"] == 15 and row["seed"] == BASE.seed
    fused = twin_emit(trial.model, 15)[0]
    assert row["mse"] == pytest.approx(mse(trial.truth(15), fused), rel=1e-12)
    assert row["wall_time"] > 0
    for key in ("mse_cdmd", "ssim_edmd", "mse_persist", "psnr", "corr"):
        assert np.isfinite(row[key])


def test_omega_endpoint_matches_cdmd(trial):
    row = trial.evaluate(5, omega=1.0)
    assert row["mse"] == pytest.approx(row["mse_cdmd"], rel=1e-12)


def test_persistence_baseline(trial):
    last = trial.noisy.head(12)
    np.testing.assert_array_equal(persistence_state(last, 30), last.data[-1])
    np.testing.assert_array_equal(persistence_state(last, 3), last.data[3])
    with pytest.raises(DataError):
        persistence_state(last, -1)


def test_sweep_shapes():
    rows = run_sweep("omega", [0.0, 0.5, 1.0], [0, 1], BASE, CFG)
    assert len(rows) == 6 and {r["t"] for r in rows} == {14}
    values, means = mean_by_value(rows, "mse")
    assert values.tolist() == [0.0, 0.5, 1.0] and means.shape == (3,)
    rows = run_sweep("horizon", [0, 4], [3], BASE, CFG)
    assert [r["t"] for r in rows] == list(range(12, 17)) and [r["value"] for r in rows] == [0, 1, 2, 3, 4]
    rows = run_sweep("noise_variance", [1, 10], [0], BASE, CFG, t=13)
    assert [r["value"] for r in rows] == [1.0, 10.0] and rows[0]["mode"] == "prediction"
    rows = run_sweep("edmd_rank", [4, 8], [0], BASE, CFG, t=5)
    assert [r["value"] for r in rows] == [4, 8]


def test_sweep_is_deterministic_apart_from_timing():
    a = run_sweep("omega", [0.3], [2], BASE, CFG)
    b = run_sweep("omega", [0.3], [2], BASE, CFG)
    for row in (a[0], b[0]):
        row.pop("wall_time")
    assert a == b


def test_unknown_parameter():
    with pytest.raises(ConfigError):
        run_sweep("gamma", [1], [0], BASE, CFG)
