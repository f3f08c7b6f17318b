"""
Equação backward na árvore, definida como a adjunta algébrica exata
do passo de `forward_solver` para o produto interno E⟨·,·⟩_𝓜.

Passo do nível k+1 para o nível k, em cada nó:
    w± = M_kᵀ⁻¹ z_{k+1}(±)
    ζ_k = (w₊ + w₋)/2,   Z_k = (w₊ − w₋)/(2√dt)
    z_k = ζ_k + dt·a2·Z_k − dt·f_k
Com f = 0 a dualidade discreta vale exatamente:
    E⟨y(T), z_T⟩ − ⟨y0, z(0)⟩ = Σ dt·E⟨χ_ω u_k, ζ_k⟩ + Σ dt·E⟨v_k, Z_k⟩
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..discretization.discrete_calc import solve_drift_implicit
from ..discretization.mesh import Mesh, build_mesh
from ..utils.errors import InvalidArgumentError
from ..utils.logging_config import get_logger
from .coefficients import Coefficients, check_dominance, zero_coefficients
from .forward_solver import ControlPair, ForwardSolution
from .noise_tree import (
    AdaptedField,
    ScenarioTree,
    build_tree,
    inner,
    level_energy,
    martingale_coeff,
    split_children,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class BackwardSolution:
    z: AdaptedField
    zeta: AdaptedField
    Z: AdaptedField

    @property
    def z0(self) -> np.ndarray:
        return self.z.level(0)[0]

    @property
    def zT(self) -> np.ndarray:
        return self.z.leaves

    def energy(self, h: float) -> np.ndarray:
        return level_energy(self.z.tree, self.z.values, h)


def backward_step(mesh: Mesh, dt: float, z_next: np.ndarray, a1_k: np.ndarray, a2_k: np.ndarray,
                  f_k: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    plus, minus = split_children(z_next)
    w_plus = solve_drift_implicit(mesh, dt, a1_k, plus, transpose=True)
    w_minus = solve_drift_implicit(mesh, dt, a1_k, minus, transpose=True)
    zeta, Z = martingale_coeff(w_plus, w_minus, dt)
    z_k = zeta + dt * a2_k * Z
    if f_k is not None:
        z_k = z_k - dt * f_k
    return z_k, zeta, Z


def solve_backward(zT: np.ndarray, coeffs: Coefficients, tree: ScenarioTree, mesh: Mesh,
                   source: AdaptedField | None = None) -> BackwardSolution:
    zT = np.asarray(zT, dtype=float)
    if zT.shape != (2 ** tree.depth, mesh.N):
        raise InvalidArgumentError(
            f"z_T deve ter forma {(2 ** tree.depth, mesh.N)}, recebeu {zT.shape}"
        )
    if coeffs.steps != tree.depth:
        raise InvalidArgumentError(
            f"Coeficientes com {coeffs.steps} passos para uma árvore de profundidade {tree.depth}"
        )
    check_dominance(tree.dt, coeffs)
    z_levels: list[np.ndarray] = [np.empty(0)] * (tree.depth + 1)
    zeta_levels: list[np.ndarray] = [np.empty(0)] * tree.depth
    Z_levels: list[np.ndarray] = [np.empty(0)] * tree.depth
    z_levels[tree.depth] = zT.copy()
    for k in range(tree.depth - 1, -1, -1):
        a1_k, a2_k = coeffs.at(k)
        f_k = None if source is None else source.level(k)
        z_levels[k], zeta_levels[k], Z_levels[k] = backward_step(
            mesh, tree.dt, z_levels[k + 1], a1_k, a2_k, f_k
        )
    return BackwardSolution(
        AdaptedField(tree, mesh.N, z_levels),
        AdaptedField(tree, mesh.N, zeta_levels),
        AdaptedField(tree, mesh.N, Z_levels),
    )


@dataclass(frozen=True)
class DualityCheck:
    lhs: float
    rhs: float
    scale: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale if self.scale > 0 else self.residual


def duality_residual(y0: np.ndarray, forward: ForwardSolution, controls: ControlPair,
                     backward: BackwardSolution, mesh: Mesh) -> DualityCheck:
    tree = backward.z.tree
    h, dt = mesh.h, tree.dt
    terminal = inner(tree, tree.depth, forward.terminal, backward.zT, h)
    initial = h * float(np.dot(y0, backward.z0))
    drift_terms = [dt * inner(tree, k, controls.mask * controls.u.level(k), backward.zeta.level(k), h)
                   for k in range(tree.depth)]
    noise_terms = [dt * inner(tree, k, controls.v.level(k), backward.Z.level(k), h)
                   for k in range(tree.depth)]
    scale = abs(terminal) + abs(initial) + sum(abs(t) for t in drift_terms + noise_terms)
    return DualityCheck(terminal - initial, float(sum(drift_terms) + sum(noise_terms)), scale)


def gronwall_constant(solution: BackwardSolution, h: float) -> float:
    energy = solution.energy(h)
    best = 0.0
    for j in range(len(energy)):
        if energy[j] > 0.0:
            best = max(best, float(np.max(energy[: j + 1])) / energy[j])
    return best


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    depth: int
    error: float


def convergence_probe(grid: Sequence[tuple[int, int]], T: float = 0.1) -> list[ConvergenceRow]:
    """Distância de z(0) ao valor contínuo e^{−π²T}·sin(πx) com z_T = sin(πx)."""
    rows = []
    for N, depth in grid:
        mesh = build_mesh(N)
        tree = build_tree(depth, T)
        profile = np.sin(np.pi * mesh.interior)
        zT = np.tile(profile, (2 ** depth, 1))
        solution = solve_backward(zT, zero_coefficients(mesh, tree), tree, mesh)
        exact = np.exp(-np.pi ** 2 * T) * profile
        rows.append(ConvergenceRow(N, depth, float(np.sqrt(mesh.h * np.sum((solution.z0 - exact) ** 2)))))
        logger.debug("sonda de convergência N=%d m=%d erro=%.3e", N, depth, rows[-1].error)
    return rows
