from pathlib import Path

import numpy as np
import pytest

from ftsheat.config import (
    DEFAULT_RECORD_EVERY, DEFAULT_T_END, config_hash, config_to_dict, dump_config, load_config,
    loads_config,
)
from ftsheat.errors import ConfigError
from ftsheat.feedback import NonlinearFeedback, SignFeedback

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_minimal_config_defaults():
    cfg = load_config(CONFIGS / "minimal.toml")
    assert cfg.grid.n_interior == 200 and cfg.dt == 1e-4
    assert cfg.t_end == DEFAULT_T_END and cfg.record_every == DEFAULT_RECORD_EVERY
    assert cfg.settle_tol == 1e-12
    assert isinstance(cfg.control, SignFeedback) and cfg.control.rho == 1.0
    assert cfg.f_inf == 0.0 and cfg.initial == {"kind": "parabola5"}


def test_gain_below_disturbance_rejected():
    text = '[control]\nkind = "sign"\nrho = 0.4\n[disturbance]\nkind = "constant"\nvalue = 0.5\n'
    with pytest.raises(ConfigError, match=r"rho > \|\|f\|\|_inf"):
        loads_config(text)


def test_parse_error_reports_location():
    with pytest.raises(ConfigError, match=r"line 3"):
        loads_config('[control]\nkind = "sign"\nrho = = 1\n')


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1\n",
    '[control]\nkind = "sign"\nrho = 1\ngain = 2\n',
    '[control]\nkind = "pid"\n',
    '[control]\nkind = "nonlinear"\n',
    '[control]\nkind = "sign"\nrho = 1\n[disturbance]\nkind = "noise"\n',
    '[control]\nkind = "sign"\nrho = 1\n[grid]\nn = 0\n',
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        loads_config(text)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
def test_round_trip(name):
    cfg = load_config(CONFIGS / name)
    again = loads_config(dump_config(cfg))
    assert config_to_dict(again) == config_to_dict(cfg)
    assert dump_config(again) == dump_config(cfg)
    assert config_hash(again) == config_hash(cfg)


def test_shipped_heat_config():
    cfg = load_config(CONFIGS / "heat_nonlinear.toml")
    assert isinstance(cfg.control, NonlinearFeedback) and cfg.control.mu == 0.8
    g = cfg.grid
    np.testing.assert_allclose(cfg.gain_profile().values, g.nodes**2 + 0.01)
    assert cfg.initial == {"kind": "parabola5"}
    assert cfg.t_end == 5.0 and cfg.snapshot_times == (0.0, 0.05, 0.1, 0.2, 0.3)


def test_overrides():
    cfg = load_config(CONFIGS / "minimal.toml", {"dt": 1e-3, "n": 50, "t_end": 0.2})
    assert (cfg.dt, cfg.grid.n_interior, cfg.t_end) == (1e-3, 50, 0.2)
    same = load_config(CONFIGS / "minimal.toml", {"dt": None})
    assert same.dt == 1e-4


def test_hash_changes_with_content():
    a = load_config(CONFIGS / "minimal.toml")
    b = load_config(CONFIGS / "minimal.toml", {"dt": 2e-4})
    assert config_hash(a) != config_hash(b)
