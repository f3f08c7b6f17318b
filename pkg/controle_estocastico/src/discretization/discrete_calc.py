"""
Operadores de diferença D_h e média A_h, o laplaciano discreto D_h², as
identidades de Leibniz e de integração por partes discretas, e o passo
implícito tridiagonal usado na marcha no tempo.

As funções que operam em `np.ndarray` tratam o último eixo como o eixo
espacial, para poderem ser aplicadas a todos os nós de um nível da árvore
de uma vez.
"""
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..utils.errors import InvalidArgumentError, SingularSystemError
from .mesh import Mesh, boundary_samples, integrate
from .tridiagonal import ZeroPivotError, thomas_solve, tridiagonal_matvec


@dataclass(frozen=True)
class GridFunction:
    mesh: Mesh
    values: np.ndarray
    support: str = "closure"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        expected = self.mesh.N + 2 if self.support == "closure" else self.mesh.N
        if self.support not in ("closure", "interior") or values.shape != (expected,):
            raise InvalidArgumentError(
                f"GridFunction({self.support}) precisa de {expected} valores, recebeu {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, mesh: Mesh, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(mesh, np.asarray(f(mesh.closure), dtype=float) * np.ones(mesh.N + 2))

    @classmethod
    def from_interior(cls, mesh: Mesh, values: Sequence[float]) -> "GridFunction":
        return cls(mesh, extend_dirichlet(np.asarray(values, dtype=float)))

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1] if self.support == "closure" else self.values


@dataclass(frozen=True)
class DualGridFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.N + 1,):
            raise InvalidArgumentError(
                f"DualGridFunction precisa de {self.mesh.N + 1} valores, recebeu {values.shape}"
            )
        object.__setattr__(self, "values", values)


def extend_dirichlet(interior: np.ndarray) -> np.ndarray:
    pad = [(0, 0)] * (interior.ndim - 1) + [(1, 1)]
    return np.pad(interior, pad)


# kernels em arrays: primal (N+2) -> dual (N+1) -> interior (N)

def dh(u: np.ndarray, h: float) -> np.ndarray:
    return (u[..., 1:] - u[..., :-1]) / h


def ah(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u[..., 1:] + u[..., :-1])


def dh2(u: np.ndarray, h: float) -> np.ndarray:
    return (u[..., 2:] - 2.0 * u[..., 1:-1] + u[..., :-2]) / (h * h)


def apply_Dh(u: GridFunction) -> DualGridFunction:
    return DualGridFunction(u.mesh, dh(_closure_values(u), u.mesh.h))


def apply_Ah(u: GridFunction) -> DualGridFunction:
    return DualGridFunction(u.mesh, ah(_closure_values(u)))


def apply_Dh_dual(v: DualGridFunction) -> GridFunction:
    return GridFunction(v.mesh, dh(v.values, v.mesh.h), support="interior")


def apply_Ah_dual(v: DualGridFunction) -> GridFunction:
    return GridFunction(v.mesh, ah(v.values), support="interior")


def apply_Dh2(u: GridFunction) -> GridFunction:
    return GridFunction(u.mesh, dh2(_closure_values(u), u.mesh.h), support="interior")


def _closure_values(u: GridFunction) -> np.ndarray:
    if u.support != "closure":
        raise InvalidArgumentError("Operador exige a função definida no fecho 𝓚")
    return u.values


def laplacian_matrix(m: Mesh) -> np.ndarray:
    n = m.N
    lap = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1))
    return lap / (m.h * m.h)


def leibniz_residuals(u: GridFunction, v: GridFunction) -> tuple[float, float, float]:
    h = u.mesh.h
    uu, vv = _closure_values(u), _closure_values(v)
    du, dv, au, av = dh(uu, h), dh(vv, h), ah(uu), ah(vv)
    product = uu * vv
    r_diff = np.max(np.abs(dh(product, h) - (du * av + au * dv)))
    r_avg = np.max(np.abs(ah(product) - (au * av + 0.25 * h * h * du * dv)))
    r_inv = np.max(np.abs(uu[1:-1] - (ah(ah(uu)) - 0.25 * h * h * dh2(uu, h))))
    return float(r_diff), float(r_avg), float(r_inv)


def ibp_residuals(u: GridFunction, v: DualGridFunction) -> tuple[float, float]:
    m = u.mesh
    uu = _closure_values(u)
    boundary = boundary_samples(m)
    u_at = {b.index: uu[0] if b.index == 0 else uu[-1] for b in boundary}

    lhs_diff = integrate(m, uu[1:-1] * dh(v.values, m.h))
    rhs_diff = -integrate(m, dh(uu, m.h) * v.values, "star") + integrate(
        m, [u_at[b.index] * b.trace_of(v.values) * b.normal for b in boundary], "boundary"
    )
    lhs_avg = integrate(m, uu[1:-1] * ah(v.values))
    rhs_avg = integrate(m, ah(uu) * v.values, "star") - 0.5 * m.h * integrate(
        m, [u_at[b.index] * b.trace_of(v.values) for b in boundary], "boundary"
    )
    return abs(lhs_diff - rhs_diff), abs(lhs_avg - rhs_avg)


def drift_implicit_diagonals(m: Mesh, dt: float, a1: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    off = np.full(m.N - 1, -dt / (m.h * m.h))
    diag = 1.0 + 2.0 * dt / (m.h * m.h) - dt * np.asarray(a1, dtype=float)
    return off, diag, off


def solve_drift_implicit(m: Mesh, dt: float, a1: np.ndarray, rhs: np.ndarray,
                         transpose: bool = False) -> np.ndarray:
    if dt < 0:
        raise InvalidArgumentError(f"dt deve ser ≥ 0, recebeu {dt}")
    rhs = np.asarray(rhs, dtype=float)
    if dt == 0:
        return rhs.copy()
    a1 = np.broadcast_to(np.asarray(a1, dtype=float), rhs.shape)
    lower, diag, upper = drift_implicit_diagonals(m, dt, a1)
    if transpose:
        lower, upper = upper, lower
    try:
        return thomas_solve(lower, diag, upper, rhs)
    except ZeroPivotError as err:
        raise SingularSystemError(dt, m.h, float(np.max(np.abs(a1), initial=0.0)), err.index) from err


def apply_drift_implicit(m: Mesh, dt: float, a1: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a1 = np.broadcast_to(np.asarray(a1, dtype=float), x.shape)
    return tridiagonal_matvec(*drift_implicit_diagonals(m, dt, a1), x)


# Consistência de A_h^m D_h^n sobre funções suaves de ℝ

def shifted_operator(f: Callable[[np.ndarray], np.ndarray], m: int, n: int,
                     h: float) -> Callable[[np.ndarray], np.ndarray]:
    op = f
    for _ in range(n):
        op = (lambda g: lambda x: (g(x + 0.5 * h) - g(x - 0.5 * h)) / h)(op)
    for _ in range(m):
        op = (lambda g: lambda x: 0.5 * (g(x + 0.5 * h) + g(x - 0.5 * h)))(op)
    return op


@dataclass(frozen=True)
class ConsistencyProbe:
    m: int
    n: int
    h_values: tuple[float, ...]
    errors: tuple[float, ...]

    @property
    def orders(self) -> tuple[float, ...]:
        return tuple(
            float(np.log(self.errors[i] / self.errors[i + 1]) / np.log(self.h_values[i] / self.h_values[i + 1]))
            for i in range(len(self.errors) - 1)
        )


def consistency_probe(m: int, n: int, h_values: Sequence[float],
                      f: Callable[[np.ndarray], np.ndarray] = lambda x: np.sin(np.pi * x),
                      derivative: Callable[[np.ndarray], np.ndarray] | None = None,
                      window: tuple[float, float] = (0.25, 0.75), samples: int = 33) -> ConsistencyProbe:
    if derivative is None:
        derivative = _sine_derivative(n)
    x = np.linspace(window[0], window[1], samples)
    errors = tuple(
        float(np.max(np.abs(shifted_operator(f, m, n, h)(x) - derivative(x)))) for h in h_values
    )
    return ConsistencyProbe(m, n, tuple(float(h) for h in h_values), errors)


def _sine_derivative(n: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.pi ** n * np.sin(np.pi * x + n * np.pi / 2.0)
