import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.discretization.mesh import boundary_samples, build_mesh, dual_of, integrate
from src.utils.errors import InvalidArgumentError


def test_build_mesh_three_points():
    m = build_mesh(3)
    assert m.h == 0.25
    np.testing.assert_allclose(m.interior, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(m.closure, [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(m.boundary, [0.0, 1.0])


def test_build_mesh_two_points():
    m = build_mesh(2)
    assert m.h == pytest.approx(1.0 / 3.0)
    np.testing.assert_allclose(m.interior, [1.0 / 3.0, 2.0 / 3.0])


@pytest.mark.parametrize("N", [1, 0, -3])
def test_build_mesh_rejects_small_N(N):
    with pytest.raises(InvalidArgumentError):
        build_mesh(N)


def test_dual_mesh_three_points():
    d = dual_of(build_mesh(3))
    np.testing.assert_allclose(d.star, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(d.prime, [0.375, 0.625])


def test_dual_mesh_two_points():
    d = dual_of(build_mesh(2))
    np.testing.assert_allclose(d.star, [1.0 / 6.0, 0.5, 5.0 / 6.0])
    np.testing.assert_allclose(d.prime, [0.5])


@given(st.integers(min_value=2, max_value=200))
def test_dual_cardinalities_and_regularity(N):
    m = build_mesh(N)
    d = dual_of(m)
    assert len(d.star_index) == N + 1
    assert len(d.prime_index) == N - 1
    assert d.prime_index <= d.star_index
    assert m.is_regular()


@given(st.integers(min_value=2, max_value=50))
def test_star_points_are_closure_midpoints(N):
    m = build_mesh(N)
    np.testing.assert_allclose(dual_of(m).star, 0.5 * (m.closure[1:] + m.closure[:-1]))


def test_outward_normals_and_trace():
    m = build_mesh(3)
    left, right = boundary_samples(m)
    assert (left.point, left.normal) == (0.0, -1)
    assert (right.point, right.normal) == (1.0, 1)
    v = [10.0, 20.0, 30.0, 40.0]
    assert left.trace_of(v) == 10.0
    assert right.trace_of(v) == 40.0


def test_integrate_examples():
    m = build_mesh(3)
    assert integrate(m, np.ones(3)) == pytest.approx(0.75)
    assert integrate(m, np.zeros(3)) == 0.0
    assert integrate(m, [2.0, 3.0], "boundary") == 5.0


def test_integrate_length_mismatch():
    with pytest.raises(InvalidArgumentError):
        integrate(build_mesh(3), np.ones(4))


@settings(max_examples=50)
@given(st.integers(min_value=2, max_value=40),
       st.floats(min_value=-10, max_value=10), st.floats(min_value=-10, max_value=10),
       st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_integrate_is_linear(N, alpha, beta, seed):
    m = build_mesh(N)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(N), rng.standard_normal(N)
    lhs = integrate(m, alpha * u + beta * v)
    rhs = alpha * integrate(m, u) + beta * integrate(m, v)
    scale = (abs(alpha) + abs(beta) + 1.0) * m.h * N * (np.max(np.abs(u)) + np.max(np.abs(v)))
    assert abs(lhs - rhs) <= 1e-14 * scale + 1e-300
