"""
Modelo finito e exato do movimento browniano: árvore binária de cenários
com incrementos ±√dt e probabilidade ½ em cada aresta.

O nível k tem 2^k nós; os filhos do nó n são 2n (incremento +√dt) e 2n+1
(incremento −√dt). Um campo adaptado guarda um array (2^k, N) por nível,
de modo que o valor no nível k só depende dos k primeiros sinais.
"""
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ..utils.errors import InvalidArgumentError, ResourceLimitError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_DEPTH_CAP = 16


@dataclass(frozen=True)
class ScenarioTree:
    depth: int
    T: float

    @property
    def dt(self) -> float:
        return self.T / self.depth

    @property
    def sqrt_dt(self) -> float:
        return float(np.sqrt(self.dt))

    def level_size(self, k: int) -> int:
        self._check_level(k)
        return 2 ** k

    def probability(self, k: int) -> float:
        self._check_level(k)
        return 2.0 ** (-k)

    def probabilities(self, k: int) -> np.ndarray:
        return np.full(self.level_size(k), self.probability(k))

    def increments(self, k: int) -> np.ndarray:
        if not 0 <= k < self.depth:
            raise InvalidArgumentError(f"Nível de passo {k} fora de [0, {self.depth})")
        return np.tile(np.array([self.sqrt_dt, -self.sqrt_dt]), 2 ** k)

    def times(self) -> np.ndarray:
        return np.arange(self.depth + 1) * self.dt

    def _check_level(self, k: int) -> None:
        if not 0 <= k <= self.depth:
            raise InvalidArgumentError(f"Nível {k} fora de [0, {self.depth}]")


def build_tree(m: int, T: float, cap: int = DEFAULT_DEPTH_CAP) -> ScenarioTree:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"Profundidade da árvore deve ser ≥ 1, recebeu {m!r}")
    if m > cap:
        raise ResourceLimitError(
            f"Profundidade {m} excede o limite {cap} (memória cresce como 2^m)"
        )
    if not T > 0:
        raise InvalidArgumentError(f"T deve ser positivo, recebeu {T!r}")
    logger.debug("árvore de cenários: m=%d, T=%g, %d folhas", m, T, 2 ** m)
    return ScenarioTree(int(m), float(T))


def expectation(tree: ScenarioTree, k: int, values: np.ndarray) -> np.ndarray | float:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != tree.level_size(k):
        raise InvalidArgumentError(
            f"Esperados {tree.level_size(k)} valores no nível {k}, recebeu {values.shape[0]}"
        )
    total = np.sum(values, axis=0) * tree.probability(k)
    return float(total) if np.ndim(total) == 0 else total


def martingale_coeff(z_plus: np.ndarray, z_minus: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Representação exata z_filho = média + Z·ΔB nos dois filhos de um nó."""
    z_plus = np.asarray(z_plus, dtype=float)
    z_minus = np.asarray(z_minus, dtype=float)
    return 0.5 * (z_plus + z_minus), (z_plus - z_minus) / (2.0 * np.sqrt(dt))


def split_children(level_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return level_values[0::2], level_values[1::2]


def join_children(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    out = np.empty((2 * plus.shape[0],) + plus.shape[1:])
    out[0::2] = plus
    out[1::2] = minus
    return out


@dataclass
class AdaptedField:
    tree: ScenarioTree
    n_points: int
    values: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        for k, level in enumerate(self.values):
            if level.shape != (2 ** k, self.n_points):
                raise InvalidArgumentError(
                    f"Nível {k} com forma {level.shape}, esperado {(2 ** k, self.n_points)}"
                )

    @classmethod
    def zeros(cls, tree: ScenarioTree, n_points: int, last_level: int | None = None) -> "AdaptedField":
        last = tree.depth if last_level is None else last_level
        return cls(tree, n_points, [np.zeros((2 ** k, n_points)) for k in range(last + 1)])

    @classmethod
    def deterministic(cls, tree: ScenarioTree, profile: np.ndarray,
                      last_level: int | None = None) -> "AdaptedField":
        profile = np.asarray(profile, dtype=float)
        last = tree.depth if last_level is None else last_level
        return cls(tree, profile.shape[-1],
                   [np.tile(profile, (2 ** k, 1)) for k in range(last + 1)])

    @property
    def last_level(self) -> int:
        return len(self.values) - 1

    @property
    def leaves(self) -> np.ndarray:
        return self.values[-1]

    def level(self, k: int) -> np.ndarray:
        return self.values[k]

    def count(self) -> int:
        return sum(level.size for level in self.values)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.values)

    def copy(self) -> "AdaptedField":
        return AdaptedField(self.tree, self.n_points, [level.copy() for level in self.values])

    def scaled(self, alpha: float) -> "AdaptedField":
        return AdaptedField(self.tree, self.n_points, [alpha * level for level in self.values])

    def combine(self, other: "AdaptedField", alpha: float = 1.0, beta: float = 1.0) -> "AdaptedField":
        return AdaptedField(self.tree, self.n_points,
                            [alpha * a + beta * b for a, b in zip(self.values, other.values)])

    def masked(self, mask: np.ndarray) -> "AdaptedField":
        return AdaptedField(self.tree, self.n_points, [level * mask for level in self.values])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(level), initial=0.0)) for level in self.values)


def random_adapted_field(tree: ScenarioTree, n_points: int, rng: np.random.Generator,
                         last_level: int | None = None, scale: float = 1.0) -> AdaptedField:
    last = tree.depth if last_level is None else last_level
    return AdaptedField(tree, n_points,
                        [scale * rng.standard_normal((2 ** k, n_points)) for k in range(last + 1)])


def tower_residual(tree: ScenarioTree, level_next: np.ndarray, k: int) -> float:
    plus, minus = split_children(level_next)
    cond_mean = 0.5 * (plus + minus)
    lhs = expectation(tree, k, cond_mean)
    rhs = expectation(tree, k + 1, level_next)
    return float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))


def level_energy(tree: ScenarioTree, levels: Sequence[np.ndarray], h: float) -> np.ndarray:
    return np.array([expectation(tree, k, h * np.sum(level * level, axis=-1))
                     for k, level in enumerate(levels)])


def inner(tree: ScenarioTree, k: int, a: np.ndarray, b: np.ndarray, h: float) -> float:
    return float(expectation(tree, k, h * np.sum(np.asarray(a) * np.asarray(b), axis=-1)))
