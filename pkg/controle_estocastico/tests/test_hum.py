import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.discretization.mesh import build_mesh
from src.services.hum_service import (
    HumProblem,
    HumSolver,
    epsilon_from_scale,
    gramian_apply,
    report_bounds,
    solve_hum,
)
from src.stochastic.backward_solver import duality_residual
from src.stochastic.coefficients import build_coefficients
from src.stochastic.forward_solver import region_mask, solve_forward
from src.stochastic.noise_tree import build_tree
from src.utils.errors import ConvergenceError, InvalidArgumentError


def _problem(small_setup, rng, epsilon=1e-2, **kwargs):
    mesh, tree, coeffs, mask = small_setup
    return HumProblem(mesh, tree, coeffs, mask, rng.standard_normal(mesh.N), epsilon, **kwargs)


def test_epsilon_from_scale():
    assert epsilon_from_scale(0.125, 1.0) == pytest.approx(np.exp(-8.0))


def test_problem_rejects_invalid_inputs(small_setup):
    mesh, tree, coeffs, mask = small_setup
    with pytest.raises(InvalidArgumentError):
        HumProblem(mesh, tree, coeffs, mask, np.ones(mesh.N), 0.0)
    with pytest.raises(InvalidArgumentError):
        HumProblem(mesh, tree, coeffs, np.zeros(mesh.N), np.ones(mesh.N), 1e-3)
    with pytest.raises(InvalidArgumentError):
        HumProblem(mesh, tree, coeffs, mask, np.ones(mesh.N + 1), 1e-3)


def test_gramian_is_symmetric_positive_semidefinite(small_setup, rng):
    solver = HumSolver(_problem(small_setup, rng))
    gram = solver.assemble_gramian()
    scale = np.max(np.abs(gram))
    assert np.max(np.abs(gram - gram.T)) <= 1e-10 * scale
    assert np.min(np.linalg.eigvalsh(0.5 * (gram + gram.T))) >= -1e-10 * scale


def test_matrix_free_application_matches_dense_columns(small_setup, rng):
    problem = _problem(small_setup, rng)
    solver = HumSolver(problem)
    gram = solver.assemble_gramian()
    zT = rng.standard_normal(problem.leaf_shape)
    applied = gramian_apply(zT, problem).ravel()
    np.testing.assert_allclose(applied, gram @ zT.ravel(), atol=1e-12 * max(np.max(np.abs(applied)), 1.0))


def test_gramian_quadratic_form_is_observation_energy(small_setup, rng):
    problem = _problem(small_setup, rng)
    solver = HumSolver(problem)
    zT = rng.standard_normal(problem.leaf_shape)
    quadratic = solver.leaf_inner(solver.gramian_apply(zT), zT)
    assert quadratic == pytest.approx(sum(solver.observation_energy(solver.backward(zT))), rel=1e-10)


def test_conjugate_gradient_matches_dense_solve(small_setup, rng):
    problem = _problem(small_setup, rng, epsilon=1e-3, cg_tol=1e-12, cg_maxiter=2000)
    solver = HumSolver(problem)
    solution = solver.solve()
    assert solution.method == "cg"
    dense = solver.dense_solve()
    iterative = solution.zT_star
    assert np.linalg.norm(iterative - dense) <= 1e-8 * np.linalg.norm(dense)


def test_gradient_matches_central_differences(small_setup, rng):
    problem = _problem(small_setup, rng)
    solver = HumSolver(problem)
    zT = rng.standard_normal(problem.leaf_shape)
    grad = solver.gradient(zT)
    step = 1e-3
    for _ in range(20):
        d = rng.standard_normal(problem.leaf_shape)
        finite = (solver.functional_value(zT + step * d) - solver.functional_value(zT - step * d)) / (2 * step)
        exact = solver.leaf_inner(grad, d)
        assert abs(finite - exact) <= 1e-6 * max(abs(exact), 1.0)


def test_gradient_vanishes_at_minimizer(small_setup, rng):
    problem = _problem(small_setup, rng, cg_tol=1e-12, cg_maxiter=2000)
    solver = HumSolver(problem)
    sol = solver.solve()
    grad = solver.gradient(sol.zT_star)
    assert np.sqrt(solver.leaf_inner(grad, grad)) <= 1e-8 * max(sol.b_norm, 1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=3, max_value=8),
       st.integers(min_value=2, max_value=5), st.sampled_from([1e-1, 1e-2, 1e-4]))
def test_optimality_closure(seed, N, depth, epsilon):
    rng = np.random.default_rng(seed)
    mesh, tree = build_mesh(N), build_tree(depth, 1.0)
    coeffs = build_coefficients("adapted-random", (0.5, 0.5), mesh, tree, rng)
    problem = HumProblem(mesh, tree, coeffs, region_mask(mesh, (0.2, 0.8)), rng.standard_normal(N),
                         epsilon, cg_tol=1e-10, cg_maxiter=5000)
    sol = solve_hum(problem)
    assert sol.closure_error <= 10 * max(sol.cg_residual, problem.cg_tol) * max(sol.b_norm, 1.0)


def test_optimal_controls_satisfy_duality(small_setup, rng):
    problem = _problem(small_setup, rng)
    solver = HumSolver(problem)
    sol = solver.solve()
    controls = solver.controls_from(sol.backward, -1.0)
    forward = solve_forward(problem.y0, controls, problem.coeffs, problem.tree, problem.mesh)
    np.testing.assert_allclose(forward.terminal, sol.yT, rtol=1e-14)
    assert duality_residual(problem.y0, forward, controls, sol.backward, problem.mesh).relative_residual <= 1e-10
    assert np.all(sol.u_star.level(0)[:, problem.mask == 0.0] == 0.0)


def test_residual_history_decreases_to_tolerance(small_setup, rng):
    sol = solve_hum(_problem(small_setup, rng))
    assert sol.residual_history[0] == pytest.approx(1.0)
    assert sol.residual_history[-1] <= 1e-10
    assert len(sol.residual_history) == sol.cg_iterations + 1


def test_convergence_error_when_iterations_run_out(small_setup, rng):
    problem = _problem(small_setup, rng, epsilon=1e-8, cg_tol=1e-14, cg_maxiter=1)
    with pytest.raises(ConvergenceError) as info:
        solve_hum(problem)
    assert len(info.value.residuals) == 2


def test_zero_initial_state_gives_zero_control(small_setup):
    mesh, tree, coeffs, mask = small_setup
    problem = HumProblem(mesh, tree, coeffs, mask, np.zeros(mesh.N), 1e-3)
    sol = solve_hum(problem)
    assert sol.cg_iterations == 0
    assert np.all(sol.zT_star == 0.0)
    bounds = report_bounds(sol, problem)
    assert bounds.cost_ratio == 0.0 and bounds.terminal_ratio == 0.0


def test_control_cost_and_terminal_bounds(small_setup, rng):
    problem = _problem(small_setup, rng, epsilon=1e-3)
    sol = solve_hum(problem)
    bounds = report_bounds(sol, problem)
    assert bounds.terminal_energy == pytest.approx(problem.epsilon ** 2 * bounds.zT_energy, rel=1e-4)
    assert sol.J_value <= 0.0
    assert bounds.cost_ratio >= 0.0


def test_sharp_constant_bounds_every_terminal_datum(small_setup, rng):
    problem = _problem(small_setup, rng)
    solver = HumSolver(problem)
    sharp = solver.sharp_observability_constant()
    for _ in range(20):
        zT = rng.standard_normal(problem.leaf_shape)
        sol = solver.backward(zT)
        lhs = problem.mesh.h * float(np.dot(sol.z0, sol.z0))
        rhs = sum(solver.observation_energy(sol)) + problem.epsilon * solver.leaf_inner(zT, zT)
        assert lhs <= sharp * rhs * (1 + 1e-6)


@pytest.mark.parametrize("epsilon", [1e-2, 1e-6])
def test_penalized_operator_is_coercive(small_setup, rng, epsilon):
    solver = HumSolver(_problem(small_setup, rng, epsilon=epsilon))
    gram = solver.assemble_gramian()
    operator = 0.5 * (gram + gram.T) + epsilon * np.eye(gram.shape[0])
    assert np.min(np.linalg.eigvalsh(operator)) >= epsilon - 1e-10


def test_dense_fallback_when_cg_stagnates(small_setup, rng):
    problem = _problem(small_setup, rng, epsilon=1e-4, cg_tol=1e-14, cg_maxiter=2, dense_limit=10_000)
    solver = HumSolver(problem)
    sol = solver.solve()
    assert sol.method == "dense"
    assert sol.cg_iterations == 2
    assert sol.cg_residual <= 1e-8
    assert sol.closure_error <= 1e-8 * max(sol.b_norm, 1.0)


def test_dense_fallback_respects_size_limit(small_setup, rng):
    size = 2 ** small_setup[1].depth * small_setup[0].N
    problem = _problem(small_setup, rng, epsilon=1e-8, cg_tol=1e-14, cg_maxiter=1, dense_limit=size - 1)
    with pytest.raises(ConvergenceError):
        solve_hum(problem)
