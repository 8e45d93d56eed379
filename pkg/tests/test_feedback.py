import math

import numpy as np
import pytest

from ftsheat.diffusion import eigenmode
from ftsheat.feedback import (
    ConstantDisturbance, NonlinearFeedback, SignFeedback, SinusoidDisturbance, ZeroDisturbance,
    b_star, default_zero_tol, delayed_gate, disturbance_values, g_operator, multiply_by_sqrt_a,
    nonlinear_control, reaction_f, reaction_term, sign_gain_control,
)
from ftsheat.grid import build_grid, norm_l2, sample_profile


def test_sign_gain_control_examples():
    g = build_grid(1)
    assert sign_gain_control(g.field([0.5]), sample_profile(2.0, g), 1.0).values[0] == -0.5
    assert sign_gain_control(g.field([-3.0]), sample_profile(1.0, g), 2.0).values[0] == 2.0
    assert sign_gain_control(g.field([0.0]), sample_profile(1.0, g), 2.0).values[0] == 0.0


def test_sign_gain_control_selection_is_admissible():
    g = build_grid(20)
    rng = np.random.default_rng(4)
    a = sample_profile(rng.uniform(0.1, 3, 20), g)
    u = sign_gain_control(g.field(rng.standard_normal(20)), a, 1.5).values
    assert np.all(np.abs(a.values * u) <= 1.5 * (1 + 1e-15))


def test_sign_gain_control_rejects_zero_gain():
    g = build_grid(2)
    with pytest.raises(ValueError):
        sign_gain_control(g.field([1.0, 1.0]), sample_profile([1.0, 0.0], g), 1.0)


@pytest.mark.parametrize("t, theta, on", [(0.1, 0.5, False), (0.6, 0.5, True), (0.5, 0.5, False)])
def test_delayed_gate(t, theta, on):
    assert delayed_gate(t, theta) is on


def test_b_star_examples():
    g = build_grid(3)
    y = g.field([0.5, -1.0, 2.0])
    assert b_star(y, sample_profile(1.0, g)).values.tolist() == y.values.tolist()
    assert b_star(g.field([0.5] * 3), sample_profile(4.0, g)).values.tolist() == [1.0] * 3
    assert multiply_by_sqrt_a is b_star


def test_nonlinear_control_homogeneity():
    g = build_grid(50)
    one = sample_profile(1.0, g)
    assert np.all(nonlinear_control(g.zeros(), one, 0.5, 1e-14).values == 0.0)
    _, phi = eigenmode(1, g)
    y = g.field(4.0 * phi.values / norm_l2(phi))
    assert norm_l2(nonlinear_control(y, one, 0.5, 1e-14)) == pytest.approx(2.0, rel=1e-12)
    small = g.field(0.01 * phi.values)
    assert norm_l2(nonlinear_control(small, one, 0.5, 1e-14)) == pytest.approx(
        math.sqrt(norm_l2(small)), rel=1e-12)


def test_g_operator_and_consistency():
    g = build_grid(30)
    rng = np.random.default_rng(5)
    y = g.field(rng.standard_normal(30))
    one = sample_profile(1.0, g)
    assert norm_l2(g_operator(y, one, 0.3, 1e-14)) == pytest.approx(norm_l2(y) ** 0.7, rel=1e-12)
    a = sample_profile(rng.uniform(0.01, 2, 30), g, positive=True)
    total = g_operator(y, a, 0.4, 1e-14).values + b_star(nonlinear_control(y, a, 0.4, 1e-14), a).values
    np.testing.assert_allclose(total, 0.0, atol=1e-13)
    assert np.all(g_operator(g.zeros(), a, 0.4, 1e-14).values == 0.0)


def test_reaction_examples():
    g = build_grid(1, -1.0, 1.0)  # h = 1, so s = |y| for a = 1
    one = sample_profile(1.0, g)
    assert reaction_f(g.zeros(), one, 0.5, 1e-14) == 0.0
    assert reaction_f(g.field([1.0]), one, 0.5, 1e-14) == pytest.approx(-0.5)
    assert reaction_f(g.field([4.0]), one, 0.5, 1e-14) == pytest.approx(-0.5 / 17)
    assert reaction_term(g.field([4.0]), one, 0.5, 1e-14).values[0] == pytest.approx(-2.0 / 17)


def test_mu_is_checked():
    g = build_grid(2)
    for mu in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            nonlinear_control(g.zeros(), sample_profile(1.0, g), mu, 0.0)
        with pytest.raises(ValueError):
            NonlinearFeedback(mu)


def test_control_spec_validation():
    with pytest.raises(ValueError):
        SignFeedback(0.0)
    with pytest.raises(ValueError):
        SignFeedback(1.0, -0.1)
    with pytest.raises(ValueError):
        NonlinearFeedback(0.5, zero_tol=-1.0)


def test_disturbances():
    t = np.linspace(0, 1, 11)
    assert np.all(disturbance_values(ZeroDisturbance(), t) == 0.0)
    assert np.all(disturbance_values(ConstantDisturbance(0.5), t) == 0.5)
    s = SinusoidDisturbance(0.5, 2.0, 0.3)
    np.testing.assert_allclose(disturbance_values(s, t), 0.5 * np.sin(4 * math.pi * t + 0.3))
    assert s.value(0.0) == pytest.approx(0.5 * math.sin(0.3))
    assert ZeroDisturbance().sup_bound == 0.0
    assert ConstantDisturbance(-0.7).sup_bound == 0.7
    assert s.sup_bound == 0.5
    with pytest.raises(ValueError):
        SinusoidDisturbance(1.0, 0.0)


def test_default_zero_tol_scales_with_length():
    assert default_zero_tol(build_grid(5, 0.0, 2.0)) == 2 * default_zero_tol(build_grid(5))
