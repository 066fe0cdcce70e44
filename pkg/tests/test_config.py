from pathlib import Path

import pytest

from chantwin.config import load_config, parse_config, parse_config_text, render_config
from chantwin.ensemble import TwinConfig
from chantwin.errors import ConfigError
from chantwin.synthdata import default_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_shipped_default_matches_library_defaults():
    cfg = load_config(CONFIGS / "default.cfg")
    assert cfg.scenario == default_scenario()
    assert cfg.twin == TwinConfig()
    assert cfg.train_length == 20 and cfg.scenario.grid.size == 900


def test_prediction_config():
    cfg = load_config(CONFIGS / "predict.cfg")
    assert cfg.scenario.n_snapshots == 25 and cfg.train_length == 20


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\nomega = 0.4   # trailing\nseed=7\n")
    assert cfg.twin.omega == 0.4 and cfg.scenario.seed == 7


def test_repeatable_keys():
    cfg = parse_config("obstacle = 0, 0, 10, 10, 15\nobstacle = 20, 20, 30, 30, 5\nextra_tx = 1, 2, 3, 4\n")
    assert len(cfg.scenario.obstacles) == 2
    assert cfg.scenario.extra_transmitters[0].velocity == (3.0, 4.0)


def test_optional_values():
    cfg = parse_config("compression_dim = 100\nedmd_rank = none\nkernel_bandwidth = 12.5\n")
    assert cfg.twin.compression_dim == 100 and cfg.twin.edmd_rank is None
    assert cfg.twin.kernel.bandwidth == 12.5


@pytest.mark.parametrize("text, fragment", [
    ("colour = red\n", "'colour'"),
    ("omega = 0.2\nomega = 0.3\n", "already set on line 1"),
    ("nx = thirty\n", "'nx'"),
    ("just words\n", "expected 'key = value'"),
    ("obstacle = 1, 2, 3\n", "'obstacle'"),
    ("refit_variogram = maybe\n", "'refit_variogram'"),
])
def test_parse_errors_name_line_and_key(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, "run.cfg")
    assert "run.cfg:" in str(info.value) and fragment in str(info.value)


@pytest.mark.parametrize("text", [
    "omega = 1.5\n", "nx = 0\n", "compression_kind = dct\n", "n_train = 2\n",
    "n_snapshots = 10\nn_train = 11\n", "noise_variance = -1\n",
])
def test_invalid_values_are_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_render_round_trip():
    text = ("seed = 4\nomega = 0.3\nn_snapshots = 25\nn_train = 20\nbbox = 0, 0, 100, 100\n"
            "obstacle = 0, 0, 10, 10, 15\nextra_tx = 1, 2, 3, 4\nrefit_variogram = yes\n")
    cfg = parse_config(text)
    again = parse_config(render_config(cfg))
    assert again.scenario == cfg.scenario and again.twin == cfg.twin and again.n_train == cfg.n_train
    assert render_config(again) == render_config(cfg)


def test_digest_ignores_layout():
    a = parse_config("omega = 0.3\nseed = 2\n")
    b = parse_config("# comment\nseed=2\n\nomega   =   0.3\n")
    assert a.digest == b.digest
    assert a.digest != parse_config("omega = 0.4\nseed = 2\n").digest
