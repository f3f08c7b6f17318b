"""
Avaliação numérica dos dois lados da estimativa de Carleman e da
desigualdade de observabilidade, com ajuste empírico da constante C.

Integrais E∫dt usam a regra da extremidade esquerda (peso dt no nível k),
a mesma amostragem dos coeficientes no solver. Os pesos e^{2sφ} entram
divididos por e^{c}, c = máximo do expoente na grade; as razões LHS/RHS
não dependem de c.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from ..discretization.discrete_calc import apply_drift_implicit, dh, extend_dirichlet
from ..discretization.mesh import Mesh, build_mesh, dual_of
from ..stochastic.backward_solver import BackwardSolution, solve_backward
from ..stochastic.coefficients import zero_coefficients
from ..stochastic.forward_solver import region_mask
from ..stochastic.noise_tree import (
    DEFAULT_DEPTH_CAP,
    AdaptedField,
    ScenarioTree,
    build_tree,
    expectation,
    random_adapted_field,
)
from ..utils.errors import InvalidArgumentError, RegimeError
from ..utils.logging_config import get_logger
from .hum_service import HumProblem, HumSolver
from .weights import CarlemanWeights, validate_regime

logger = get_logger(__name__)

HOLDOUT_RTOL = 1e-8
SPAN_RTOL = 1e-10
SHARP_RTOL = 1e-6


@dataclass(frozen=True)
class SourcePair:
    f: AdaptedField
    g: AdaptedField


@dataclass(frozen=True)
class CarlemanTerms:
    state: float
    gradient: float
    omega: float
    diffusion: float
    source: float
    initial: float
    terminal: float
    log_shift: float

    @property
    def lhs(self) -> float:
        return self.state + self.gradient

    @property
    def rhs(self) -> float:
        return self.omega + self.diffusion + self.source + self.initial + self.terminal

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0

    def as_dict(self) -> dict[str, float]:
        return {
            "state": self.state, "gradient": self.gradient, "omega": self.omega,
            "diffusion": self.diffusion, "source": self.source, "initial": self.initial,
            "terminal": self.terminal,
        }


def carleman_sample(mesh: Mesh, tree: ScenarioTree, rng: np.random.Generator,
                    scale: float = 1.0) -> tuple[BackwardSolution, SourcePair]:
    """Solução de dw + D_h²w dt = f dt + g dB a partir de w_T e f aleatórios.

    A equação é integrada de T para 0 (direção estável). Nos filhos de um
    nó, w_{k+1}(±) − E_k w_{k+1} = ±√dt·(I − dt·D_h²)Z_k, logo g_k = (I − dt·D_h²)Z_k.
    """
    f = random_adapted_field(tree, mesh.N, rng, last_level=tree.depth - 1, scale=scale)
    wT = scale * rng.standard_normal((2 ** tree.depth, mesh.N))
    sol = solve_backward(wT, zero_coefficients(mesh, tree), tree, mesh, source=f)
    g = AdaptedField(tree, mesh.N, [apply_drift_implicit(mesh, tree.dt, 0.0, level) for level in sol.Z])
    return sol, SourcePair(f, g)


def carleman_terms(w: BackwardSolution, sources: SourcePair, weights: CarlemanWeights, tree: ScenarioTree,
                   mesh: Mesh, mask: np.ndarray) -> CarlemanTerms:
    decision = validate_regime(weights, mesh.h)
    if not decision.accepted:
        raise RegimeError(decision.ratio, decision.eps0)
    h, dt = mesh.h, tree.dt
    times = tree.times()
    s = np.asarray(weights.s(times), dtype=float)
    log_int = weights.log_weight(times, mesh.interior)
    log_star = weights.log_weight(times, dual_of(mesh).star)
    shift = float(max(np.max(log_int), np.max(log_star)))
    e_int = np.exp(log_int - shift)
    e_star = np.exp(log_star - shift)

    def integral(k: int, density: np.ndarray) -> float:
        return float(expectation(tree, k, h * np.sum(density, axis=-1)))

    state = gradient = omega = diffusion = source = 0.0
    for k in range(tree.depth):
        w_k = w.z.level(k)
        grad_k = dh(extend_dirichlet(w_k), h)
        state += dt * integral(k, s[k] ** 3 * e_int[k] * w_k ** 2)
        gradient += dt * integral(k, s[k] * e_star[k] * grad_k ** 2)
        omega += dt * integral(k, mask * s[k] ** 3 * e_int[k] * w_k ** 2)
        diffusion += dt * integral(k, s[k] ** 2 * e_int[k] * sources.g.level(k) ** 2)
        source += dt * integral(k, e_int[k] * sources.f.level(k) ** 2)
    initial = integral(0, e_int[0] * w.z.level(0) ** 2) / h ** 2
    terminal = integral(tree.depth, e_int[tree.depth] * w.z.leaves ** 2) / h ** 2
    return CarlemanTerms(state, gradient, omega, diffusion, source, initial, terminal, shift)


@dataclass(frozen=True)
class CarlemanFit:
    samples: int
    ratios: tuple[float, ...]
    constant: float
    h: float
    delta: float


Seed = int | np.random.SeedSequence


def spawn_rngs(seed: Seed, count: int) -> list[np.random.Generator]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(count)]


def ordered_map(func: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def carleman_family(weights: CarlemanWeights, tree: ScenarioTree, mesh: Mesh, mask: np.ndarray,
                    count: int, seed: Seed, threads: int = 1) -> CarlemanFit:
    def run(rng: np.random.Generator) -> float:
        sol, sources = carleman_sample(mesh, tree, rng)
        return carleman_terms(sol, sources, weights, tree, mesh, mask).ratio

    ratios = tuple(ordered_map(run, spawn_rngs(seed, count), threads))
    logger.info("Carleman: %d amostras, h=%.4g, max LHS/RHS=%.4g", count, mesh.h, max(ratios))
    return CarlemanFit(count, ratios, float(max(ratios)), mesh.h, weights.params.delta)


def carleman_refinement_fit(weights: CarlemanWeights, N: int, depth: int, T: float,
                            omega: tuple[float, float], count: int, seed: Seed, threads: int = 1,
                            level: int = 0, depth_cap: int = DEFAULT_DEPTH_CAP) -> CarlemanFit:
    """Família de Carleman com h e dt divididos por 2^level (dt/h fixo)."""
    mesh = build_mesh(2 ** level * (N + 1) - 1)
    tree = build_tree(2 ** level * depth, T, depth_cap)
    return carleman_family(weights, tree, mesh, region_mask(mesh, omega), count, seed, threads)


@dataclass(frozen=True)
class ObservabilitySample:
    lhs: float
    z_term: float
    omega_term: float
    terminal: float
    # ‖observed‖² = z_term + omega_term, ‖terminal_vec‖² = terminal, ‖initial_vec‖² = lhs
    observed: np.ndarray = field(repr=False, compare=False)
    terminal_vec: np.ndarray = field(repr=False, compare=False)
    initial_vec: np.ndarray = field(repr=False, compare=False)

    def rhs(self, terminal_weight: float) -> float:
        return self.z_term + self.omega_term + terminal_weight * self.terminal


@dataclass(frozen=True)
class FittedConstant:
    samples: int
    excluded: int
    train_ratios: tuple[float, ...]
    holdout_ratios: tuple[float, ...]
    constant: float
    holdout_violations: int
    terminal_weight: float
    sharp: float | None = None
    sharp_violations: int | None = None
    train_max: float = 0.0


@dataclass(frozen=True)
class ObservabilityReport:
    exponential: FittedConstant
    scaled: FittedConstant
    delta: float | None


def _fit(samples: Sequence[ObservabilitySample], excluded: int, n_train: int, weight: float,
         sharp: float | None) -> FittedConstant:
    ratios = [s.lhs / s.rhs(weight) for s in samples]
    train, holdout = ratios[:n_train], ratios[n_train:]
    train_max = max(train) if train else 0.0
    constant = max(train_max, span_constant(samples[:n_train], weight)) if train else 0.0
    violations = sum(1 for r in holdout if r > constant * (1.0 + HOLDOUT_RTOL))
    sharp_violations = None
    if sharp is not None:
        sharp_violations = sum(1 for r in ratios if r > sharp * (1.0 + SHARP_RTOL))
    return FittedConstant(len(samples), excluded, tuple(train), tuple(holdout), float(constant),
                          violations, weight, sharp, sharp_violations, float(train_max))


def span_constant(samples: Sequence[ObservabilitySample], weight: float) -> float:
    """Maior razão LHS/RHS sobre combinações lineares dos z_T das amostras.

    Com O, T, P as matrizes dos vetores observados, terminais e iniciais,
    é o maior autovalor de Pᵀ(OOᵀ + c·TTᵀ)⁺P.
    """
    observed = np.array([s.observed for s in samples])
    terminal = np.array([s.terminal_vec for s in samples])
    initial = np.array([s.initial_vec for s in samples])
    gram = observed @ observed.T + weight * (terminal @ terminal.T)
    projected = initial.T @ scipy.linalg.pinvh(gram, rtol=SPAN_RTOL) @ initial
    return float(scipy.linalg.eigvalsh(0.5 * (projected + projected.T))[-1])


def observability_sample(zT_family: Iterable[np.ndarray], problem: HumProblem,
                         weights: CarlemanWeights | None = None, sharp: bool = True,
                         threads: int = 1, train: int | None = None) -> ObservabilityReport:
    """Ajusta C em E‖z(0)‖² ≤ C(ΣdtE‖Z‖² + ΣdtE‖χζ‖² + c·E‖z_T‖²).

    c = ε = e^{−C/h} ou a variante reescalada h⁻²ε.
    As `train` primeiras amostras (metade, por padrão) treinam C pela razão
    máxima no espaço que geram (ver `span_constant`); as demais contam violações.
    Amostras com ambos os lados nulos são excluídas.
    """
    family = [np.asarray(z, dtype=float) for z in zT_family]
    if len(family) < 2:
        raise InvalidArgumentError("A amostra de observabilidade precisa de pelo menos 2 dados terminais")
    n_train = (len(family) + 1) // 2 if train is None else train
    if not 1 <= n_train < len(family):
        raise InvalidArgumentError(f"Treino com {n_train} de {len(family)} amostras deixa um dos lados vazio")
    delta = None
    if weights is not None:
        decision = validate_regime(weights, problem.mesh.h)
        if not decision.accepted:
            raise RegimeError(decision.ratio, decision.eps0)
        delta = weights.params.delta
    solver = HumSolver(problem)
    h = problem.mesh.h

    def measure(zT: np.ndarray) -> ObservabilitySample:
        sol = solver.backward(zT)
        z_term, omega_term = solver.observation_energy(sol)
        tree = problem.tree
        scales = [np.sqrt(tree.dt * h / 2 ** k) for k in range(tree.depth)]
        observed = np.concatenate(
            [(c * sol.Z.level(k)).ravel() for k, c in enumerate(scales)]
            + [(c * problem.mask * sol.zeta.level(k)).ravel() for k, c in enumerate(scales)]
        )
        return ObservabilitySample(h * float(np.dot(sol.z0, sol.z0)), z_term, omega_term,
                                   solver.leaf_inner(zT, zT), observed,
                                   np.sqrt(h / 2 ** tree.depth) * zT.ravel(), np.sqrt(h) * sol.z0)

    measured = ordered_map(measure, family, threads)
    nontrivial = [i for i, m in enumerate(measured) if m.lhs > 0.0 or m.rhs(problem.epsilon) > 0.0]
    kept = [measured[i] for i in nontrivial]
    excluded = len(measured) - len(kept)
    n_train_kept = sum(1 for i in nontrivial if i < n_train)

    weight_exp = problem.epsilon
    weight_scaled = problem.epsilon / h ** 2
    sharp_exp = solver.sharp_observability_constant() if sharp else None
    sharp_scaled = solver.sharp_observability_constant(weight_scaled) if sharp else None
    report = ObservabilityReport(
        _fit(kept, excluded, n_train_kept, weight_exp, sharp_exp),
        _fit(kept, excluded, n_train_kept, weight_scaled, sharp_scaled),
        delta,
    )
    logger.info("observabilidade: C=%.4g (h⁻² variante %.4g), %d violações no holdout",
                report.exponential.constant, report.scaled.constant, report.exponential.holdout_violations)
    return report


def random_terminal_family(tree: ScenarioTree, mesh: Mesh, count: int, seed: Seed) -> list[np.ndarray]:
    return [rng.standard_normal((2 ** tree.depth, mesh.N)) for rng in spawn_rngs(seed, count)]
