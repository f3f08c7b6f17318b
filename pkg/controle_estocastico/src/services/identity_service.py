"""
Bateria de verificações do comando `identities`: álgebra da malha,
identidades de Leibniz e de integração por partes, ordem de consistência,
exatidão da árvore, dualidade discreta e simetria do Gramiano.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..discretization.discrete_calc import (
    DualGridFunction,
    GridFunction,
    consistency_probe,
    ibp_residuals,
    laplacian_matrix,
    leibniz_residuals,
)
from ..discretization.mesh import boundary_samples, build_mesh, dual_of
from ..stochastic.backward_solver import duality_residual, solve_backward
from ..stochastic.coefficients import build_coefficients
from ..stochastic.forward_solver import ControlPair, region_mask, solve_forward
from ..stochastic.noise_tree import build_tree, expectation, random_adapted_field, tower_residual
from ..utils.logging_config import get_logger
from .hum_service import HumProblem, HumSolver

logger = get_logger(__name__)

IDENTITY_SIZES = (3, 8, 16, 64)
CONSISTENCY_PAIRS = ((0, 1), (0, 2), (1, 1), (2, 0))


@dataclass(frozen=True)
class CheckResult:
    group: str
    name: str
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tolerance


class IdentityService:
    def __init__(self, seed: int = 12345, pairs: int = 100, duality_instances: int = 50) -> None:
        self.seed = seed
        self.pairs = pairs
        self.duality_instances = duality_instances

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed).spawn(stream + 1)[stream])

    def mesh_checks(self) -> list[CheckResult]:
        results = []
        for N in IDENTITY_SIZES:
            m = build_mesh(N)
            dual = dual_of(m)
            regular = 0.0 if m.is_regular() else 1.0
            sizes = abs(len(dual.star_index) - (N + 1)) + abs(len(dual.prime_index) - (N - 1))
            normals = [b.normal for b in boundary_samples(m)]
            results.append(CheckResult("malha", f"regularidade N={N}", regular, 0.0))
            results.append(CheckResult("malha", f"cardinalidades duais N={N}", float(sizes), 0.0))
            results.append(CheckResult("malha", f"normais N={N}", 0.0 if normals == [-1, 1] else 1.0, 0.0,
                                       f"ν = {normals}"))
        return results

    def calculus_checks(self) -> list[CheckResult]:
        rng = self._rng(0)
        results = []
        for N in IDENTITY_SIZES:
            m = build_mesh(N)
            worst_leibniz = [0.0, 0.0, 0.0]
            worst_ibp = [0.0, 0.0]
            for _ in range(self.pairs):
                u_vals = rng.standard_normal(N + 2)
                v_vals = rng.standard_normal(N + 2)
                w_vals = rng.standard_normal(N + 1)
                scale = (1.0 + np.max(np.abs(u_vals))) * (1.0 + np.max(np.abs(v_vals))) / m.h
                u = GridFunction(m, u_vals)
                residuals = leibniz_residuals(u, GridFunction(m, v_vals))
                worst_leibniz = [max(a, r / scale) for a, r in zip(worst_leibniz, residuals)]
                ibp_scale = (1.0 + np.max(np.abs(u_vals))) * (1.0 + np.max(np.abs(w_vals))) / m.h
                ibp = ibp_residuals(u, DualGridFunction(m, w_vals))
                worst_ibp = [max(a, r / ibp_scale) for a, r in zip(worst_ibp, ibp)]
            for label, value in zip(("D_h(uv)", "A_h(uv)", "u = A_h²u − h²/4·D_h²u"), worst_leibniz):
                results.append(CheckResult("cálculo", f"Leibniz {label} N={N}", value, 1e-12))
            for label, value in zip(("∫uD_hv", "∫uA_hv"), worst_ibp):
                results.append(CheckResult("cálculo", f"partes {label} N={N}", value, 1e-12))
            lap = laplacian_matrix(m)
            results.append(CheckResult("cálculo", f"simetria D_h² N={N}",
                                       float(np.max(np.abs(lap - lap.T))) * m.h ** 2, 1e-12))
        return results

    def consistency_checks(self) -> list[CheckResult]:
        h_values = [1.0 / 16 / 2 ** j for j in range(5)]
        results = []
        for m, n in CONSISTENCY_PAIRS:
            probe = consistency_probe(m, n, h_values)
            deviation = max(abs(order - 2.0) for order in probe.orders)
            results.append(CheckResult("consistência", f"A_h^{m} D_h^{n}", deviation, 0.15,
                                       "ordens " + ", ".join(f"{o:.3f}" for o in probe.orders)))
        return results

    def tree_checks(self) -> list[CheckResult]:
        rng = self._rng(1)
        results = []
        for depth in range(1, 11):
            tree = build_tree(depth, 1.0)
            prob = max(abs(float(np.sum(tree.probabilities(k))) - 1.0) for k in range(depth + 1))
            mean = max(abs(expectation(tree, k + 1, tree.increments(k))) for k in range(depth))
            square = max(float(np.max(np.abs(tree.increments(k) ** 2 - tree.dt))) for k in range(depth))
            field = random_adapted_field(tree, 4, rng)
            tower = max(tower_residual(tree, field.level(k + 1), k) for k in range(depth))
            residual = max(prob, mean, square, tower)
            results.append(CheckResult("árvore", f"exatidão m={depth}", residual, 1e-14))
        return results

    def duality_checks(self) -> list[CheckResult]:
        rng = self._rng(2)
        worst = 0.0
        for _ in range(self.duality_instances):
            N = int(rng.integers(2, 17))
            depth = int(rng.integers(1, 11))
            mesh = build_mesh(N)
            tree = build_tree(depth, 1.0)
            mask = region_mask(mesh, (0.3, 0.7))
            coeffs = build_coefficients("adapted-random", (0.5, 0.5), mesh, tree, rng)
            last = depth - 1
            controls = ControlPair.localized(random_adapted_field(tree, N, rng, last),
                                             random_adapted_field(tree, N, rng, last), mask)
            y0 = rng.standard_normal(N)
            forward = solve_forward(y0, controls, coeffs, tree, mesh)
            backward = solve_backward(rng.standard_normal((2 ** depth, N)), coeffs, tree, mesh)
            worst = max(worst, duality_residual(y0, forward, controls, backward, mesh).relative_residual)
        return [CheckResult("dualidade", f"{self.duality_instances} instâncias aleatórias", worst, 1e-10)]

    def gramian_checks(self) -> list[CheckResult]:
        rng = self._rng(3)
        mesh = build_mesh(4)
        tree = build_tree(4, 1.0)
        coeffs = build_coefficients("adapted-random", (0.5, 0.5), mesh, tree, rng)
        problem = HumProblem(mesh, tree, coeffs, region_mask(mesh, (0.3, 0.7)), rng.standard_normal(4), 1e-3)
        gram = HumSolver(problem).assemble_gramian()
        scale = max(float(np.max(np.abs(gram))), 1e-300)
        eigenvalues = np.linalg.eigvalsh(0.5 * (gram + gram.T))
        penalized = np.linalg.eigvalsh(0.5 * (gram + gram.T) + problem.epsilon * np.eye(gram.shape[0]))[0]
        return [
            CheckResult("gramiano", "simetria N=4 m=4", float(np.max(np.abs(gram - gram.T))) / scale, 1e-10),
            CheckResult("gramiano", "semidefinido N=4 m=4", max(0.0, -float(eigenvalues[0])) / scale, 1e-10),
            CheckResult("gramiano", "Λ + ε coercivo N=4 m=4",
                        max(0.0, problem.epsilon - float(penalized)) / problem.epsilon, 1e-8),
        ]

    def run(self) -> list[CheckResult]:
        suites: list[Callable[[], list[CheckResult]]] = [
            self.mesh_checks, self.calculus_checks, self.consistency_checks,
            self.tree_checks, self.duality_checks, self.gramian_checks,
        ]
        results = [check for suite in suites for check in suite()]
        failed = sum(1 for r in results if not r.passed)
        logger.info("identidades: %d verificações, %d falhas", len(results), failed)
        return results


def run_identities(seed: int = 12345) -> list[CheckResult]:
    return IdentityService(seed).run()
