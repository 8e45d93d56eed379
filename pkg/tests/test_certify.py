import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftsheat.certify import (
    THM2_CASE1, THM4, BoundReport, barrier_margin, beta_from_profile, bound_reports,
    bound_theorem2, bound_theorem2_delayed, bound_theorem4, certificates, detect_settling,
    lyapunov_envelope_check, stepwise_barrier_violation,
)
from ftsheat.feedback import NonlinearFeedback, SignFeedback
from ftsheat.grid import build_grid, sample_profile, scalar_grid
from ftsheat.stepper import SimConfig, simulate
from ftsheat.trajectory import TrajectoryRecord

pos = st.floats(1e-3, 1e3)


def record(times, l2, linf=None, V=None):
    l2 = np.asarray(l2, dtype=float)
    linf = l2 if linf is None else linf
    V = l2**2 if V is None else V
    n = len(times)
    return TrajectoryRecord(times, l2, linf, V, np.zeros(n), np.zeros(n, bool))


def test_bound_examples():
    assert bound_theorem2(1.25, 2.0, 0.5) == pytest.approx(0.83333, abs=1e-5)
    assert bound_theorem2(1.0, 1.0, 0.999) == pytest.approx(1000.0, rel=1e-9)
    assert bound_theorem2_delayed(0.1, 0.4, 2.0, 0.5) == pytest.approx(0.36667, abs=1e-5)
    assert bound_theorem4(1.0, 1.0, 0.5) == 2.0
    assert bound_theorem4(0.91287, 0.01, 0.8) == pytest.approx(18.42, abs=0.01)
    assert bound_theorem2(0.0, 2.0, 0.5) == 0.0
    assert bound_theorem4(0.0, 1.0, 0.5) == 0.0


@pytest.mark.parametrize("call", [
    lambda: bound_theorem2(1.0, 0.5, 0.5),
    lambda: bound_theorem2(1.0, 1.0, -0.1),
    lambda: bound_theorem2_delayed(0.0, 1.0, 2.0, 0.5),
    lambda: bound_theorem4(1.0, 0.0, 0.5),
    lambda: bound_theorem4(1.0, 1.0, 1.0),
])
def test_bound_domain_errors(call):
    with pytest.raises(ValueError):
        call()


@settings(max_examples=200, database=None)
@given(pos, pos, st.floats(0, 0.99), pos)
def test_sign_bound_monotone(y0, rho, frac, k):
    f = frac * rho
    b = bound_theorem2(y0, rho, f)
    assert bound_theorem2(y0 * (1 + k), rho, f) >= b
    assert bound_theorem2(y0, rho * (1 + k), f) <= b


@settings(max_examples=200, database=None)
@given(pos, pos, st.floats(0.01, 0.99), pos)
def test_nonlinear_bound_monotone(y0, beta, mu, k):
    b = bound_theorem4(y0, beta, mu)
    assert bound_theorem4(y0 * (1 + k), beta, mu) >= b
    assert bound_theorem4(y0, beta * (1 + k), mu) <= b


def test_beta_from_profile():
    g = build_grid(200)
    quad = sample_profile({"kind": "quadratic_plus", "scale": 1.0, "offset": 0.01}, g, positive=True)
    assert beta_from_profile(quad) == pytest.approx(0.01)
    assert beta_from_profile(sample_profile([3.0, 2.0, 5.0], build_grid(3))) == 2.0
    with pytest.raises(ValueError):
        beta_from_profile(sample_profile([1.0, 0.0, 1.0], build_grid(3)))


def test_detect_settling_dip_and_reexceed():
    t = np.arange(6) * 0.1
    assert detect_settling(record(t, [1, 0, 1, 0, 0, 0]), 0.0) == pytest.approx(0.3)
    assert detect_settling(record(t, [1, 1, 1, 1, 1, 0]), 0.0) == pytest.approx(0.5)
    assert detect_settling(record(t, [1, 0, 0, 0, 0, 1]), 0.0) is None
    assert detect_settling(record(t, np.zeros(6)), 0.0) == 0.0
    assert detect_settling(record(t, [1, 1e-13, 1e-13, 0, 0, 0]), 1e-12) == pytest.approx(0.1)


def test_detect_settling_idempotent_on_tail():
    t = np.arange(10) * 0.1
    tr = record(t, [3, 2, 1, 0, 0, 0, 0, 0, 0, 0])
    T = detect_settling(tr, 0.0)
    k = int(round(T / 0.1))
    tail = record(t[k:], tr.norm_l2[k:])
    assert detect_settling(tail, 0.0) == T


def test_barrier_margin_and_stepwise():
    t = np.array([0.0, 0.5, 1.0])
    assert barrier_margin(t, [1.0, 0.25, 0.0], 2.0, 0.5, 1.0) == pytest.approx(0.0)
    assert barrier_margin(t, [1.0, 0.5, 0.0], 2.0, 0.5, 1.0) == pytest.approx(-0.25)
    assert stepwise_barrier_violation([0.85, 0.7], 1.0, 0.1, 2.0, 0.5) == pytest.approx(0.0)
    assert stepwise_barrier_violation([0.9], 1.0, 0.1, 2.0, 0.5) == pytest.approx(0.05)
    assert stepwise_barrier_violation([], 1.0, 0.1, 2.0, 0.5) == 0.0


def test_lyapunov_zero_state_passes():
    tr = record(np.arange(4) * 0.1, np.zeros(4))
    ok, worst = lyapunov_envelope_check(tr, 1.0, 0.5, 1e-3)
    assert ok and worst == -math.inf


def test_lyapunov_detects_slow_decay():
    tr = record(np.linspace(0, 1, 11), np.ones(11))
    ok, worst = lyapunov_envelope_check(tr, 1.0, 0.5, 1e-4)
    assert not ok and worst == pytest.approx(0.5)


def test_bound_report_build():
    r = BoundReport.build(THM4, 2.0, 1.5)
    assert r.satisfied and r.margin == 0.5
    r = BoundReport.build(THM4, 2.0, None)
    assert not r.satisfied and r.margin is None


def test_reports_on_simulated_runs(backend):
    cfg = SimConfig(scalar_grid(), 3.0, NonlinearFeedback(0.5, reaction=False),
                    initial={"kind": "constant", "value": 1.0}, diffusion=False, dt=1e-3)
    tr = simulate(cfg, backend)
    (rep,) = bound_reports(tr)
    assert rep.theorem == THM4 and rep.t_bound == 2.0
    # the bound is exact here, so the discrete settling time may land one step past it
    assert abs(rep.t_numeric - 2.0) <= 5 * cfg.dt
    assert certificates(tr)["lyapunov_envelope_ok"]
    cfg = SimConfig(build_grid(50), 1.0, SignFeedback(2.0), initial="parabola5", dt=1e-3)
    tr = simulate(cfg, backend)
    (rep,) = bound_reports(tr)
    assert rep.theorem == THM2_CASE1 and rep.satisfied
    assert certificates(tr)["barrier_margin"] >= -1e-12
