"""
Sistema controlado na árvore de cenários, por Euler–Maruyama
implícito na deriva:

    (I − dt·(D_h² + a1)) y_{k+1} = y_k + dt·χ_ω u_k + (a2·y_k + v_k)·ΔB
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..discretization.discrete_calc import solve_drift_implicit
from ..discretization.mesh import Mesh
from ..utils.errors import InvalidArgumentError
from ..utils.logging_config import get_logger
from .coefficients import Coefficients, check_dominance
from .noise_tree import AdaptedField, ScenarioTree, join_children, level_energy

logger = get_logger(__name__)


def region_mask(mesh: Mesh, interval: Sequence[float]) -> np.ndarray:
    a, b = interval
    x = mesh.interior
    return ((x > a) & (x < b)).astype(float)


@dataclass(frozen=True)
class ControlPair:
    u: AdaptedField
    v: AdaptedField
    mask: np.ndarray

    def __post_init__(self) -> None:
        for k, level in enumerate(self.u.values):
            if np.any(level[:, self.mask == 0.0] != 0.0):
                raise InvalidArgumentError(f"Controle u não se anula fora de ω no nível {k}")

    @classmethod
    def localized(cls, u: AdaptedField, v: AdaptedField, mask: np.ndarray) -> "ControlPair":
        return cls(u.masked(mask), v, mask)

    @classmethod
    def zero(cls, tree: ScenarioTree, mesh: Mesh, mask: np.ndarray) -> "ControlPair":
        last = tree.depth - 1
        return cls(AdaptedField.zeros(tree, mesh.N, last), AdaptedField.zeros(tree, mesh.N, last), mask)


@dataclass(frozen=True)
class ForwardSolution:
    state: AdaptedField

    @property
    def terminal(self) -> np.ndarray:
        return self.state.leaves

    def energy(self, h: float) -> np.ndarray:
        return level_energy(self.state.tree, self.state.values, h)


def forward_step(mesh: Mesh, dt: float, y_k: np.ndarray, u_k: np.ndarray, v_k: np.ndarray,
                 a1_k: np.ndarray, a2_k: np.ndarray, mask: np.ndarray, dB: float | np.ndarray) -> np.ndarray:
    dB = np.asarray(dB, dtype=float)
    if dB.ndim == 1:
        dB = dB[:, None]
    rhs = y_k + dt * mask * u_k + (a2_k * y_k + v_k) * dB
    return solve_drift_implicit(mesh, dt, a1_k, rhs)


def advance_level(mesh: Mesh, tree: ScenarioTree, y_k: np.ndarray, u_k: np.ndarray, v_k: np.ndarray,
                  a1_k: np.ndarray, a2_k: np.ndarray, mask: np.ndarray) -> np.ndarray:
    plus = forward_step(mesh, tree.dt, y_k, u_k, v_k, a1_k, a2_k, mask, tree.sqrt_dt)
    minus = forward_step(mesh, tree.dt, y_k, u_k, v_k, a1_k, a2_k, mask, -tree.sqrt_dt)
    return join_children(plus, minus)


def solve_forward(y0: np.ndarray, controls: ControlPair, coeffs: Coefficients, tree: ScenarioTree,
                  mesh: Mesh) -> ForwardSolution:
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (mesh.N,):
        raise InvalidArgumentError(f"y0 deve ter {mesh.N} valores interiores, recebeu {y0.shape}")
    if coeffs.steps != tree.depth:
        raise InvalidArgumentError(
            f"Coeficientes com {coeffs.steps} passos para uma árvore de profundidade {tree.depth}"
        )
    check_dominance(tree.dt, coeffs)
    levels = [y0[None, :].copy()]
    for k in range(tree.depth):
        a1_k, a2_k = coeffs.at(k)
        levels.append(advance_level(mesh, tree, levels[k], controls.u.level(k), controls.v.level(k),
                                    a1_k, a2_k, controls.mask))
    return ForwardSolution(AdaptedField(tree, mesh.N, levels))


def energy_growth_rate(solution: ForwardSolution, coeffs: Coefficients, h: float) -> float:
    """Menor c com E‖y(t_k)‖² ≤ e^{c(1+A)t_k}·E‖y0‖² ao longo da árvore."""
    energy = solution.energy(h)
    if energy[0] == 0.0:
        return 0.0
    times = solution.state.tree.times()[1:]
    rates = np.log(np.maximum(energy[1:], np.finfo(float).tiny) / energy[0]) / ((1.0 + coeffs.sup_norm) * times)
    return float(max(np.max(rates), 0.0))
