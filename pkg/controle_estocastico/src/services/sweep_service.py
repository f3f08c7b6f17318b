"""
Varredura em h: para cada N, δ pelo agendamento, ε = e^{−C_eps/h},
controle HUM e constante de observabilidade ajustada.
"""
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import stats

from ..config.experiment import ExperimentConfig
from ..discretization.mesh import Mesh, build_mesh
from ..stochastic.coefficients import build_coefficients
from ..stochastic.forward_solver import region_mask
from ..stochastic.noise_tree import build_tree
from ..utils.errors import ControlError
from ..utils.logging_config import get_logger
from .hum_service import HumProblem, HumSolver, epsilon_from_scale
from .inequality_service import observability_sample, ordered_map, random_terminal_family
from .weights import build_weights, delta_schedule, h1_threshold, validate_regime

logger = get_logger(__name__)


def standard_initial_state(mesh: Mesh) -> np.ndarray:
    return np.sin(np.pi * mesh.interior)


def build_problem(config: ExperimentConfig, N: int, depth: int, rng: np.random.Generator,
                  cg_maxiter: int | None = None) -> HumProblem:
    """Problema HUM da configuração: y0 = sin(πx), ε direto ou e^{−C_eps/h}."""
    mesh = build_mesh(N)
    tree = build_tree(depth, config.tree.T, config.tree.depth_cap)
    coeffs = build_coefficients(config.coefficients.kind, config.coefficients.magnitudes, mesh, tree, rng)
    eps = config.hum.epsilon if config.hum.epsilon is not None else epsilon_from_scale(mesh.h, config.weights.c_eps)
    return HumProblem(mesh, tree, coeffs, region_mask(mesh, config.region.omega), standard_initial_state(mesh),
                      eps, config.hum.cg_tol, config.hum.cg_maxiter if cg_maxiter is None else cg_maxiter,
                      config.hum.dense_limit)


@dataclass(frozen=True)
class SweepRow:
    h: float
    delta: float
    lam: float
    mu: float
    N: int
    depth: int
    eps: float
    obs_C: float
    term_ratio: float
    cost_ratio: float
    cg_iters: int | None
    closure_err: float
    skipped: bool = False
    reason: str = ""

    def as_csv_row(self) -> dict[str, Any]:
        return {
            "h": self.h, "delta": self.delta, "lambda": self.lam, "mu": self.mu, "N": self.N,
            "depth": self.depth, "eps": self.eps, "obs_C": self.obs_C, "term_ratio": self.term_ratio,
            "cost_ratio": self.cost_ratio, "cg_iters": self.cg_iters, "closure_err": self.closure_err,
            "skipped": self.skipped, "reason": self.reason,
        }


@dataclass(frozen=True)
class SweepSummary:
    completed: int
    skipped: int
    monotone: bool
    slope: float
    max_cost_ratio: float


class SweepService:
    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config

    def _skipped(self, N: int, h: float, delta: float, eps: float, reason: str) -> SweepRow:
        w = self.config.weights
        logger.warning("varredura: N=%d ignorado (%s)", N, reason)
        return SweepRow(h, delta, w.lam, w.mu, N, self.config.sweep.depth, eps,
                        math.nan, math.nan, math.nan, None, math.nan, True, reason)

    def run_point(self, N: int, seed_seq: np.random.SeedSequence) -> SweepRow:
        c = self.config
        w = c.weights
        mesh = build_mesh(N)
        h = mesh.h
        eps = c.hum.epsilon if c.hum.epsilon is not None else epsilon_from_scale(h, w.c_eps)
        h1 = h1_threshold(w.lam, w.eps0, w.delta0, c.tree.T)
        if h > h1 * (1.0 + 1e-12):
            return self._skipped(N, h, math.nan, eps, f"h={h:.6g} > h1={h1:.6g}")
        delta = delta_schedule(h, h1, w.delta0)
        coeff_seq, sample_seq = seed_seq.spawn(2)
        try:
            weights = build_weights(c.weight_params(h))
            decision = validate_regime(weights, h)
            if not decision.accepted:
                return self._skipped(N, h, delta, eps, f"regime: razão {decision.ratio:.6g} > ε₀")
            problem = build_problem(c, N, c.sweep.depth, np.random.default_rng(coeff_seq), c.sweep.cg_maxiter)
            solver = HumSolver(problem)
            solution = solver.solve()
            bounds = solver.report_bounds(solution)
            family = random_terminal_family(problem.tree, mesh, c.sweep.samples, sample_seq)
            report = observability_sample(family, problem, weights, sharp=False)
        except ControlError as error:
            return self._skipped(N, h, delta, eps, str(error))
        logger.info("varredura: N=%d h=%.4g ε=%.3e razão terminal=%.3e", N, h, eps, bounds.terminal_ratio)
        return SweepRow(h, delta, w.lam, w.mu, N, c.sweep.depth, eps, report.exponential.constant,
                        bounds.terminal_ratio, bounds.cost_ratio, solution.cg_iterations,
                        solution.closure_error)

    def run(self, N_values: Sequence[int] | None = None) -> list[SweepRow]:
        c = self.config
        N_values = c.sweep.N_values if N_values is None else tuple(N_values)
        children = np.random.SeedSequence(c.seed).spawn(len(N_values))
        return ordered_map(lambda item: self.run_point(*item), list(zip(N_values, children)), c.threads)


def h_sweep(config: ExperimentConfig, N_values: Sequence[int] | None = None) -> list[SweepRow]:
    return SweepService(config).run(N_values)


def summarize(rows: Sequence[SweepRow]) -> SweepSummary:
    done = sorted((r for r in rows if not r.skipped), key=lambda r: r.h, reverse=True)
    ratios = [r.term_ratio for r in done]
    monotone = all(b <= a for a, b in zip(ratios, ratios[1:]))
    slope = math.nan
    if len(done) >= 2 and all(r > 0 for r in ratios):
        slope = float(stats.linregress([1.0 / r.h for r in done], np.log(ratios)).slope)
    max_cost = max((r.cost_ratio for r in done), default=math.nan)
    return SweepSummary(len(done), len(rows) - len(done), monotone, slope, max_cost)
