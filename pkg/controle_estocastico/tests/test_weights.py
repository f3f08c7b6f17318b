import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.services.weights import (
    WeightParams,
    build_weights,
    delta_schedule,
    h1_threshold,
    scaling_probe,
    theta,
    theta_bounds,
    validate_regime,
)
from src.utils.errors import InvalidArgumentError, WeightConfigurationError


def make_params(**overrides):
    values = dict(T=1.0, lam=2.0, mu=1.5, delta=0.25, omega0=(0.4, 0.6), omega=(0.3, 0.7))
    values.update(overrides)
    return WeightParams(**values)


def test_default_weights_accepted():
    w = build_weights(make_params())
    assert w.params.x0 == 0.5
    assert float(w.dpsi(0.0)) == pytest.approx(1.0)
    assert float(w.dpsi(1.0)) == pytest.approx(-1.0)
    assert float(w.psi(0.0)) == pytest.approx(1.75)


def test_critical_point_on_boundary_rejected():
    with pytest.raises(WeightConfigurationError) as info:
        build_weights(make_params(x0=0.0))
    assert info.value.condition == "dpsi-left"


def test_omega0_must_sit_inside_omega():
    with pytest.raises(WeightConfigurationError) as info:
        build_weights(make_params(omega0=(0.2, 0.6)))
    assert info.value.condition == "omega0-inside-omega"


def test_psi_must_be_positive():
    with pytest.raises(WeightConfigurationError) as info:
        build_weights(make_params(K=0.1))
    assert info.value.condition == "psi-positive"


@pytest.mark.parametrize("field,value", [("lam", 1.0), ("mu", 0.5), ("delta", 0.5), ("delta", 0.0), ("eps0", 1.5)])
def test_parameter_ranges(field, value):
    with pytest.raises(InvalidArgumentError):
        make_params(**{field: value})


def test_r_times_rho_is_one():
    w = build_weights(make_params(mu=1.1))
    x = np.linspace(0.0, 1.0, 101)
    for t in np.linspace(0.0, 1.0, 11):
        assert np.max(np.abs(w.r(t, x) * w.rho(t, x) - 1.0)) <= 1e-14


def test_phi_negative_and_r_monotone_in_psi():
    w = build_weights(make_params(mu=1.1))
    x = np.linspace(-0.1, 1.1, 241)
    assert np.all(w.phi(x) < 0)
    order = np.argsort(w.psi(x))
    r = w.r(0.5, x)[order]
    assert np.all(np.diff(r) >= 0)


def test_theta_values():
    w = build_weights(make_params())
    assert theta(w, 0.0) == pytest.approx(3.2)
    assert theta(w, 0.0) == pytest.approx(theta(w, 1.0))
    assert theta(w, 0.5) == pytest.approx(1.0 / 0.5625)
    grid = np.linspace(0.0, 1.0, 1001)
    assert np.min(w.theta(grid)) == pytest.approx(theta(w, 0.5))


@given(st.floats(min_value=0.0, max_value=1.0))
def test_theta_symmetry(t):
    w = build_weights(make_params())
    assert theta(w, t) == pytest.approx(theta(w, 1.0 - t), rel=1e-12)


@pytest.mark.parametrize("t", [-0.01, 1.01])
def test_theta_outside_horizon(t):
    with pytest.raises(InvalidArgumentError):
        theta(build_weights(make_params()), t)


def test_regime_examples():
    accept = validate_regime(build_weights(make_params(lam=10.0)), 0.01)
    assert accept.accepted and accept.ratio == pytest.approx(0.4)
    assert accept.margin == pytest.approx(0.6)
    reject = validate_regime(build_weights(make_params(lam=100.0)), 0.05)
    assert not reject.accepted and reject.ratio == pytest.approx(20.0)
    boundary = validate_regime(build_weights(make_params()), 0.125)
    assert boundary.accepted and boundary.ratio == 1.0


def test_delta_schedule_examples():
    h1 = h1_threshold(8.0, 1.0, 0.25, 1.0)
    assert h1 == pytest.approx(1.0 / 32)
    assert delta_schedule(h1, h1, 0.25) == 0.25
    assert delta_schedule(h1 / 2, h1, 0.25) == pytest.approx(0.125)
    w = build_weights(make_params(lam=8.0, delta=delta_schedule(1.0 / 64, h1, 0.25)))
    assert validate_regime(w, 1.0 / 64).ratio == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        delta_schedule(2 * h1, h1, 0.25)


@settings(max_examples=25)
@given(st.floats(min_value=0.01, max_value=0.49))
def test_theta_bounds_hold(delta):
    assert theta_bounds(build_weights(make_params(delta=delta))).holds


def test_scaling_probe_bounded_along_schedule():
    rows = scaling_probe(make_params(), [1.0 / 16, 1.0 / 32, 1.0 / 64], delta0=0.25)
    assert [row.delta for row in rows] == pytest.approx([0.125, 0.0625, 0.03125])
    base = rows[0]
    for row in rows:
        assert np.isfinite(row.laplacian_ratio) and np.isfinite(row.gradient_ratio)
        assert row.laplacian_ratio <= 10 * base.laplacian_ratio
        assert row.gradient_ratio <= 10 * base.gradient_ratio
