"""
Malha uniforme de (0,1) e suas malhas duais.

Os pontos são guardados como índices inteiros em meio-passo: o ponto primal
x_i corresponde ao índice 2i e o ponto dual x_i ± h/2 ao índice 2i ± 1. As
operações de conjunto (τ₊, τ₋, união, interseção) ficam exatas.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, Sequence

import numpy as np

from ..utils.errors import InvalidArgumentError

PointSet = FrozenSet[int]


def shift(points: PointSet, sign: int) -> PointSet:
    return frozenset(p + sign for p in points)


def star(points: PointSet) -> PointSet:
    return shift(points, +1) | shift(points, -1)


def prime(points: PointSet) -> PointSet:
    return shift(points, +1) & shift(points, -1)


def bar(points: PointSet) -> PointSet:
    return star(star(points))


def ring(points: PointSet) -> PointSet:
    return prime(prime(points))


@dataclass(frozen=True)
class Mesh:
    N: int

    @property
    def h(self) -> float:
        return 1.0 / (self.N + 1)

    @cached_property
    def interior_index(self) -> PointSet:
        return frozenset(2 * i for i in range(1, self.N + 1))

    @cached_property
    def closure_index(self) -> PointSet:
        return frozenset(2 * i for i in range(0, self.N + 2))

    @property
    def boundary_index(self) -> PointSet:
        return self.closure_index - self.interior_index

    @cached_property
    def interior(self) -> np.ndarray:
        return self.coordinates(self.interior_index)

    @cached_property
    def closure(self) -> np.ndarray:
        return self.coordinates(self.closure_index)

    @property
    def boundary(self) -> np.ndarray:
        return self.coordinates(self.boundary_index)

    def coordinates(self, points: PointSet) -> np.ndarray:
        return np.array(sorted(points), dtype=float) * (self.h / 2.0)

    def is_regular(self) -> bool:
        return ring(bar(self.interior_index)) == self.interior_index


@dataclass(frozen=True)
class DualMesh:
    mesh: Mesh
    star_index: PointSet
    prime_index: PointSet

    @property
    def star(self) -> np.ndarray:
        return self.mesh.coordinates(self.star_index)

    @property
    def prime(self) -> np.ndarray:
        return self.mesh.coordinates(self.prime_index)


@dataclass(frozen=True)
class BoundarySample:
    point: float
    normal: int
    index: int
    mesh: Mesh

    def trace_of(self, v: Sequence[float]) -> float:
        values = np.asarray(v, dtype=float)
        if values.shape != (self.mesh.N + 1,):
            raise InvalidArgumentError(
                f"Função dual deve ter {self.mesh.N + 1} valores, recebeu {values.shape}"
            )
        star_sorted = sorted(star(self.mesh.interior_index))
        if self.normal == 1:
            return float(values[star_sorted.index(self.index - 1)])
        if self.normal == -1:
            return float(values[star_sorted.index(self.index + 1)])
        return 0.0


def build_mesh(N: int) -> Mesh:
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool) or N < 2:
        raise InvalidArgumentError(f"N deve ser inteiro ≥ 2, recebeu {N!r}")
    return Mesh(int(N))


def dual_of(m: Mesh) -> DualMesh:
    return DualMesh(m, star(m.interior_index), prime(m.interior_index))


def outward_normal(m: Mesh, point: int) -> int:
    dual_star = star(m.interior_index)
    inside_minus = (point - 1) in dual_star
    inside_plus = (point + 1) in dual_star
    if inside_minus and not inside_plus:
        return 1
    if inside_plus and not inside_minus:
        return -1
    return 0


def boundary_samples(m: Mesh) -> tuple[BoundarySample, ...]:
    return tuple(
        BoundarySample(point=p * m.h / 2.0, normal=outward_normal(m, p), index=p, mesh=m)
        for p in sorted(m.boundary_index)
    )


_PART_SIZES = {
    "interior": lambda m: m.N,
    "closure": lambda m: m.N + 2,
    "star": lambda m: m.N + 1,
    "prime": lambda m: m.N - 1,
    "boundary": lambda m: 2,
}


def integrate(m: Mesh, u: Sequence[float], part: str = "interior") -> float:
    """h·Σu sobre a parte indicada; sobre o bordo ∂𝓜 a soma não leva o fator h."""
    if part not in _PART_SIZES:
        raise InvalidArgumentError(f"Parte de malha desconhecida: {part}")
    values = np.asarray(u, dtype=float)
    expected = _PART_SIZES[part](m)
    if values.shape[-1] != expected:
        raise InvalidArgumentError(
            f"Comprimento {values.shape[-1]} incompatível com a parte '{part}' ({expected} pontos)"
        )
    total = np.sum(values, axis=-1)
    if part == "boundary":
        return total if np.ndim(total) else float(total)
    scaled = m.h * total
    return scaled if np.ndim(scaled) else float(scaled)
