import numpy as np
import pytest

from src.discretization.discrete_calc import laplacian_matrix, solve_drift_implicit
from src.discretization.mesh import build_mesh
from src.stochastic.coefficients import build_coefficients, check_dominance, constant_coefficients, zero_coefficients
from src.stochastic.forward_solver import (
    ControlPair,
    energy_growth_rate,
    forward_step,
    region_mask,
    solve_forward,
)
from src.stochastic.noise_tree import AdaptedField, build_tree, expectation, random_adapted_field
from src.utils.errors import ConfigurationError, InvalidArgumentError


def random_controls(tree, mesh, mask, rng):
    last = tree.depth - 1
    return ControlPair.localized(random_adapted_field(tree, mesh.N, rng, last),
                                 random_adapted_field(tree, mesh.N, rng, last), mask)


def test_zero_state_stays_zero():
    mesh = build_mesh(5)
    zero = np.zeros((1, 5))
    out = forward_step(mesh, 0.1, zero, zero, zero, zero, zero, np.ones(5), 0.3)
    assert np.all(out == 0.0)


def test_heat_step_is_contraction():
    mesh = build_mesh(10)
    rng = np.random.default_rng(1)
    y = rng.standard_normal((1, 10))
    zero = np.zeros((1, 10))
    out = forward_step(mesh, 0.05, y, zero, zero, zero, zero, np.ones(10), 0.2)
    assert np.sum(out ** 2) <= np.sum(y ** 2)


def test_single_diffusion_source():
    mesh = build_mesh(6)
    dt, c, dB = 0.1, 2.0, -0.3
    v = np.zeros((1, 6))
    v[0, 2] = c
    zero = np.zeros((1, 6))
    out = forward_step(mesh, dt, zero, zero, v, zero, zero, np.ones(6), dB)
    expected = np.linalg.solve(np.eye(6) - dt * laplacian_matrix(mesh), c * dB * np.eye(6)[2])
    np.testing.assert_allclose(out[0], expected, rtol=1e-12, atol=1e-15)


def test_control_must_vanish_outside_region():
    mesh = build_mesh(8)
    tree = build_tree(2, 1.0)
    mask = region_mask(mesh, (0.3, 0.7))
    u = AdaptedField.deterministic(tree, np.ones(8), last_level=1)
    with pytest.raises(InvalidArgumentError):
        ControlPair(u, AdaptedField.zeros(tree, 8, 1), mask)
    assert np.all(ControlPair.localized(u, AdaptedField.zeros(tree, 8, 1), mask).u.leaves[:, mask == 0] == 0)


def test_superposition(small_setup, rng):
    mesh, tree, coeffs, mask = small_setup
    y0 = rng.standard_normal(mesh.N)
    controls = random_controls(tree, mesh, mask, rng)
    zero = ControlPair.zero(tree, mesh, mask)
    full = solve_forward(y0, controls, coeffs, tree, mesh).state
    free = solve_forward(y0, zero, coeffs, tree, mesh).state
    driven = solve_forward(np.zeros(mesh.N), controls, coeffs, tree, mesh).state
    for k in range(tree.depth + 1):
        scale = np.max(np.abs(full.level(k))) + 1.0
        assert np.max(np.abs(free.level(k) + driven.level(k) - full.level(k))) <= 1e-12 * scale


def test_first_mode_decay():
    mesh = build_mesh(9)
    tree = build_tree(1, 0.5)
    mode = np.sin(np.pi * mesh.interior)
    y = solve_forward(mode, ControlPair.zero(tree, mesh, np.ones(9)), zero_coefficients(mesh, tree), tree, mesh)
    lam1 = 4.0 / mesh.h ** 2 * np.sin(np.pi * mesh.h / 2) ** 2
    for leaf in y.terminal:
        np.testing.assert_allclose(leaf, mode / (1.0 + tree.dt * lam1), rtol=1e-12)


def test_multiplicative_noise_spreads_leaves():
    mesh = build_mesh(5)
    tree = build_tree(2, 1.0)
    coeffs = constant_coefficients(mesh, tree, 0.0, 2.0)
    y = solve_forward(np.ones(5), ControlPair.zero(tree, mesh, np.ones(5)), coeffs, tree, mesh)
    assert np.var(y.terminal, axis=0).max() > 0


def test_mean_dynamics_match_deterministic_scheme(rng):
    mesh = build_mesh(6)
    tree = build_tree(5, 1.0)
    coeffs = constant_coefficients(mesh, tree, 0.5, 0.0)
    mask = region_mask(mesh, (0.2, 0.8))
    u = random_adapted_field(tree, mesh.N, rng, tree.depth - 1).masked(mask)
    controls = ControlPair(u, AdaptedField.zeros(tree, mesh.N, tree.depth - 1), mask)
    y0 = rng.standard_normal(mesh.N)
    y = solve_forward(y0, controls, coeffs, tree, mesh).state
    mean = y0.copy()
    for k in range(tree.depth):
        u_mean = expectation(tree, k, u.level(k))
        mean = solve_drift_implicit(mesh, tree.dt, 0.5, mean + tree.dt * mask * u_mean)
        np.testing.assert_allclose(expectation(tree, k + 1, y.level(k + 1)), mean, rtol=1e-10, atol=1e-12)


def test_adaptedness_under_future_perturbation(small_setup, rng):
    mesh, tree, coeffs, mask = small_setup
    y0 = rng.standard_normal(mesh.N)
    controls = random_controls(tree, mesh, mask, rng)
    base = solve_forward(y0, controls, coeffs, tree, mesh).state
    v = controls.v.copy()
    v.values[2] = v.values[2] + 1.0
    perturbed = solve_forward(y0, ControlPair(controls.u, v, mask), coeffs, tree, mesh).state
    for k in range(3):
        np.testing.assert_array_equal(base.level(k), perturbed.level(k))
    assert np.max(np.abs(base.level(3) - perturbed.level(3))) > 0


def test_dominance_violation_detected():
    mesh = build_mesh(4)
    tree = build_tree(1, 1.0)
    with pytest.raises(ConfigurationError):
        check_dominance(tree.dt, constant_coefficients(mesh, tree, 1.5, 0.0))
    with pytest.raises(ConfigurationError):
        build_coefficients("constant", (2.0, 0.0), mesh, tree)


def test_coefficient_sup_norm():
    mesh = build_mesh(7)
    tree = build_tree(3, 1.0)
    coeffs = build_coefficients("sinusoid", (0.5, 0.25), mesh, tree)
    assert coeffs.sup_norm <= 0.75
    assert coeffs.steps == 3
    with pytest.raises(InvalidArgumentError):
        build_coefficients("adapted-random", (0.5, 0.5), mesh, tree)


def test_energy_growth_rate_finite(small_setup, rng):
    mesh, tree, coeffs, mask = small_setup
    y = solve_forward(rng.standard_normal(mesh.N), ControlPair.zero(tree, mesh, mask), coeffs, tree, mesh)
    assert 0.0 <= energy_growth_rate(y, coeffs, mesh.h) < np.inf
