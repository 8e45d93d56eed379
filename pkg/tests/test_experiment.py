import csv
import json

import numpy as np
import pytest

from ftsheat.certify import bound_reports
from ftsheat.config import load_config, loads_config
from ftsheat.errors import ConfigError
from ftsheat.experiment import SweepError, mu_dirname, run_experiment, sweep_mu
from ftsheat.trajectory import SNAPSHOT_HEADER, TRAJECTORY_HEADER, read_trajectory_csv

SIGN = """
[grid]
n = 40
[time]
dt = 1e-3
t_end = 1.0
record_every = 5
[control]
kind = "sign"
rho = 2.0
[disturbance]
kind = "constant"
value = 0.5
[output]
snapshot_times = [0.0, 0.1]
"""

SCALAR_NL = """
[grid]
n = 1
x_lo = -1.0
x_hi = 1.0
diffusion = false
[time]
dt = 1e-3
t_end = 6.0
record_every = 1
[control]
kind = "nonlinear"
mu = 0.5
reaction = false
[initial]
kind = "constant"
value = 1.0
"""


def header(path):
    with open(path, newline="") as fh:
        return tuple(next(csv.reader(fh)))


def test_outputs_written(tmp_path):
    s = run_experiment(loads_config(SIGN), tmp_path)
    for name in ("trajectory.csv", "snapshots.csv", "config.toml", "summary.json"):
        assert (tmp_path / name).exists()
    assert header(tmp_path / "trajectory.csv") == TRAJECTORY_HEADER
    assert header(tmp_path / "snapshots.csv") == SNAPSHOT_HEADER
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["config_hash"] == s.config_hash and data["steps"] == s.steps
    assert s.all_satisfied
    again = load_config(tmp_path / "config.toml")
    assert run_experiment(again, tmp_path / "rerun").config_hash == s.config_hash


def test_deterministic_outputs(tmp_path, backend):
    cfg = loads_config(SIGN)
    run_experiment(cfg, tmp_path / "a", backend)
    run_experiment(cfg, tmp_path / "b", backend)
    for name in ("trajectory.csv", "snapshots.csv", "config.toml"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_zero_initial_state(tmp_path):
    # no disturbance: the control would otherwise cancel it on the zero state
    text = SIGN.replace('kind = "constant"\nvalue = 0.5', 'kind = "zero"')
    cfg = loads_config(text + '[initial]\nkind = "constant"\nvalue = 0.0\n')
    s = run_experiment(cfg, tmp_path)
    assert s.settled_at == 0.0
    tr = read_trajectory_csv(tmp_path / "trajectory.csv")
    assert np.all(tr.control_l2 == 0.0)


def test_reports_recomputable_from_csv(tmp_path):
    cfg = loads_config(SIGN)
    s = run_experiment(cfg, tmp_path)
    tr = read_trajectory_csv(tmp_path / "trajectory.csv", config=cfg)
    assert [r.to_dict() for r in bound_reports(tr)] == s.reports


def test_single_mu_sweep_matches_run(tmp_path):
    base = loads_config(SCALAR_NL)
    (row,) = sweep_mu(base, [0.5], tmp_path / "sweep", workers=1)
    s = run_experiment(base, tmp_path / "single")
    assert row["t_numeric"] == s.reports[0]["t_numeric"]
    assert row["t_bound_thm4"] == s.reports[0]["t_bound"] == 2.0
    assert abs(row["t_numeric"] - 2.0) <= 5 * base.dt
    assert ((tmp_path / "sweep" / mu_dirname(0.5) / "trajectory.csv").read_bytes()
            == (tmp_path / "single" / "trajectory.csv").read_bytes())
    assert header(tmp_path / "sweep" / "sweep.csv") == ("mu", "t_numeric", "t_bound_thm4", "satisfied")


def test_parallel_sweep_orders_rows(tmp_path):
    rows = sweep_mu(loads_config(SCALAR_NL), [0.8, 0.2], tmp_path, workers=2)
    assert [r["mu"] for r in rows] == [0.8, 0.2]
    assert rows[0]["t_numeric"] < rows[1]["t_numeric"]


def test_sweep_collects_failures(tmp_path):
    with pytest.raises(SweepError) as info:
        sweep_mu(loads_config(SCALAR_NL), [0.5, 1.5], tmp_path, workers=1)
    assert [mu for mu, _ in info.value.failures] == [1.5]
    assert isinstance(info.value.failures[0][1], ConfigError)
    with open(tmp_path / "sweep.csv") as fh:
        assert len(fh.readlines()) == 3


def test_sweep_rejects_sign_control(tmp_path):
    with pytest.raises(ValueError):
        sweep_mu(loads_config(SIGN), [0.5], tmp_path)


@pytest.mark.parametrize("control", [
    '[control]\nkind = "sign"\nrho = 2.0\n',
    '[control]\nkind = "nonlinear"\nmu = 0.5\n[profile]\nkind = "quadratic_plus"\n',
    '[control]\nkind = "open_loop"\n',
])
def test_lyapunov_column_is_squared_norm(tmp_path, control):
    cfg = loads_config('[grid]\nn = 60\n[time]\ndt = 1e-3\nt_end = 0.5\n' + control)
    run_experiment(cfg, tmp_path)
    tr = read_trajectory_csv(tmp_path / "trajectory.csv")
    np.testing.assert_allclose(tr.V, tr.norm_l2**2, rtol=1e-12, atol=0)
