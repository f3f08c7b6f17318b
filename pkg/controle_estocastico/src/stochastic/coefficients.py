from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..discretization.mesh import Mesh
from ..utils.errors import ConfigurationError, InvalidArgumentError
from ..utils.logging_config import get_logger
from .noise_tree import ScenarioTree

logger = get_logger(__name__)

COEFFICIENT_KINDS = ("zero", "constant", "sinusoid", "adapted-random")


@dataclass(frozen=True)
class Coefficients:
    """a₁, a₂ amostrados na extremidade esquerda de cada passo: um array
    (2^k ou 1, N) por nível k = 0..m−1."""
    a1: tuple[np.ndarray, ...]
    a2: tuple[np.ndarray, ...]

    @property
    def a1_sup(self) -> float:
        return max(float(np.max(np.abs(level), initial=0.0)) for level in self.a1)

    @property
    def a2_sup(self) -> float:
        return max(float(np.max(np.abs(level), initial=0.0)) for level in self.a2)

    @property
    def sup_norm(self) -> float:
        return self.a1_sup + self.a2_sup

    @property
    def steps(self) -> int:
        return len(self.a1)

    def at(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.a1[k], self.a2[k]


def zero_coefficients(mesh: Mesh, tree: ScenarioTree) -> Coefficients:
    return constant_coefficients(mesh, tree, 0.0, 0.0)


def constant_coefficients(mesh: Mesh, tree: ScenarioTree, c1: float, c2: float) -> Coefficients:
    a1 = tuple(np.full((1, mesh.N), float(c1)) for _ in range(tree.depth))
    a2 = tuple(np.full((1, mesh.N), float(c2)) for _ in range(tree.depth))
    return Coefficients(a1, a2)


def build_coefficients(kind: str, magnitudes: Sequence[float], mesh: Mesh, tree: ScenarioTree,
                       rng: np.random.Generator | None = None) -> Coefficients:
    c1, c2 = (float(c) for c in magnitudes)
    x = mesh.interior
    if kind == "zero":
        coeffs = zero_coefficients(mesh, tree)
    elif kind == "constant":
        coeffs = constant_coefficients(mesh, tree, c1, c2)
    elif kind == "sinusoid":
        a1 = tuple((c1 * np.sin(2.0 * np.pi * x))[None, :] for _ in range(tree.depth))
        a2 = tuple((c2 * np.cos(np.pi * x))[None, :] for _ in range(tree.depth))
        coeffs = Coefficients(a1, a2)
    elif kind == "adapted-random":
        if rng is None:
            raise InvalidArgumentError("Coeficientes aleatórios adaptados exigem um gerador semeado")
        a1 = tuple(rng.uniform(-c1, c1, (2 ** k, mesh.N)) for k in range(tree.depth))
        a2 = tuple(rng.uniform(-c2, c2, (2 ** k, mesh.N)) for k in range(tree.depth))
        coeffs = Coefficients(a1, a2)
    else:
        raise InvalidArgumentError(f"Família de coeficientes desconhecida: {kind}")
    check_dominance(tree.dt, coeffs)
    logger.debug("coeficientes '%s': |a1|∞=%.3g, |a2|∞=%.3g", kind, coeffs.a1_sup, coeffs.a2_sup)
    return coeffs


def check_dominance(dt: float, coeffs: Coefficients) -> None:
    if dt * coeffs.a1_sup >= 1.0:
        raise ConfigurationError([
            f"dt·|a1|∞ = {dt * coeffs.a1_sup:.6g} ≥ 1: a matriz implícita deixa de ser "
            "diagonalmente dominante"
        ])
