"""
HUM penalizado: minimiza

    J(z_T) = ½ΣdtE‖Z‖² + ½ΣdtE‖χ_ω ζ‖² + (ε/2)E‖z_T‖² − ⟨y0, z(0)⟩

resolvendo (Λ + εI) z_T = y_livre(T) por gradientes conjugados sem matriz.
Λ: z_T ↦ y(T; 0, χ_ω ζ, Z) é uma varredura backward seguida de uma forward.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from ..discretization.mesh import Mesh
from ..stochastic.backward_solver import BackwardSolution, solve_backward
from ..stochastic.coefficients import Coefficients
from ..stochastic.forward_solver import ControlPair, ForwardSolution, solve_forward
from ..stochastic.noise_tree import AdaptedField, ScenarioTree, inner
from ..utils.errors import ConvergenceError, InvalidArgumentError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)


def epsilon_from_scale(h: float, c_eps: float) -> float:
    return math.exp(-c_eps / h)


@dataclass(frozen=True)
class HumProblem:
    mesh: Mesh
    tree: ScenarioTree
    coeffs: Coefficients
    mask: np.ndarray
    y0: np.ndarray
    epsilon: float
    cg_tol: float = 1e-10
    cg_maxiter: int = 500
    dense_limit: int = 0

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"ε deve ser positivo, recebeu {self.epsilon}")
        if not np.any(self.mask):
            raise InvalidArgumentError("ω∩𝓜 é vazio: nenhum ponto interior na região de controle")
        if np.shape(self.y0) != (self.mesh.N,):
            raise InvalidArgumentError(f"y0 deve ter {self.mesh.N} valores interiores")

    @property
    def leaf_shape(self) -> tuple[int, int]:
        return 2 ** self.tree.depth, self.mesh.N


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)
    true_residual: float = 0.0


@dataclass(frozen=True)
class HumSolution:
    zT_star: np.ndarray
    backward: BackwardSolution
    u_star: AdaptedField
    v_star: AdaptedField
    yT: np.ndarray
    b_norm: float
    J_value: float
    cg_iterations: int
    residual_history: tuple[float, ...]
    cg_residual: float
    closure_error: float
    method: str = "cg"


@dataclass(frozen=True)
class HumBounds:
    control_cost: float
    initial_energy: float
    cost_ratio: float
    terminal_energy: float
    terminal_ratio: float
    terminal_over_eps: float
    zT_energy: float


class HumSolver:
    def __init__(self, problem: HumProblem) -> None:
        self.problem = problem
        p = problem
        self._zero_controls = ControlPair.zero(p.tree, p.mesh, p.mask)
        self._zero_y0 = np.zeros(p.mesh.N)
        self._gramian: np.ndarray | None = None

    # produtos internos na folha (nível m) e nos níveis de controle

    def leaf_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return inner(self.problem.tree, self.problem.tree.depth, a, b, self.problem.mesh.h)

    def observation_energy(self, sol: BackwardSolution) -> tuple[float, float]:
        p = self.problem
        dt, h = p.tree.dt, p.mesh.h
        z_term = sum(dt * inner(p.tree, k, sol.Z.level(k), sol.Z.level(k), h) for k in range(p.tree.depth))
        omega_term = sum(
            dt * inner(p.tree, k, p.mask * sol.zeta.level(k), p.mask * sol.zeta.level(k), h)
            for k in range(p.tree.depth)
        )
        return float(z_term), float(omega_term)

    def backward(self, zT: np.ndarray) -> BackwardSolution:
        p = self.problem
        return solve_backward(zT, p.coeffs, p.tree, p.mesh)

    def forward(self, y0: np.ndarray, controls: ControlPair) -> ForwardSolution:
        p = self.problem
        return solve_forward(y0, controls, p.coeffs, p.tree, p.mesh)

    def controls_from(self, sol: BackwardSolution, sign: float = 1.0) -> ControlPair:
        mask = self.problem.mask
        return ControlPair(sol.zeta.masked(mask).scaled(sign), sol.Z.scaled(sign), mask)

    def free_terminal(self, y0: np.ndarray | None = None) -> np.ndarray:
        y0 = self.problem.y0 if y0 is None else y0
        return self.forward(y0, self._zero_controls).terminal

    def gramian_apply(self, zT: np.ndarray) -> np.ndarray:
        sol = self.backward(zT)
        return self.forward(self._zero_y0, self.controls_from(sol)).terminal

    def operator_apply(self, zT: np.ndarray) -> np.ndarray:
        return self.gramian_apply(zT) + self.problem.epsilon * zT

    def conjugate_gradient(self, b: np.ndarray) -> CgResult:
        p = self.problem
        b_norm = math.sqrt(self.leaf_inner(b, b))
        x = np.zeros_like(b)
        if b_norm == 0.0:
            return CgResult(x, 0, [0.0], 0.0)
        r = b.copy()
        d = r.copy()
        rr = self.leaf_inner(r, r)
        history = [math.sqrt(rr) / b_norm]
        iterations = 0
        while history[-1] > p.cg_tol:
            if iterations >= p.cg_maxiter:
                raise ConvergenceError(
                    f"Gradientes conjugados não atingiram tol={p.cg_tol:g} em {p.cg_maxiter} iterações "
                    f"(resíduo {history[-1]:.3e})",
                    history,
                )
            Ad = self.operator_apply(d)
            alpha = rr / self.leaf_inner(d, Ad)
            x += alpha * d
            r -= alpha * Ad
            rr_new = self.leaf_inner(r, r)
            d = r + (rr_new / rr) * d
            rr = rr_new
            iterations += 1
            history.append(math.sqrt(rr) / b_norm)
        true_r = b - self.operator_apply(x)
        true_residual = math.sqrt(self.leaf_inner(true_r, true_r)) / b_norm
        logger.debug("CG: %d iterações, resíduo %.3e (verdadeiro %.3e)", iterations, history[-1], true_residual)
        return CgResult(x, iterations, history, true_residual)

    def solve_system(self, b: np.ndarray) -> tuple[CgResult, str]:
        """(Λ + ε)x = b por CG; sistema denso se o CG estagnar e couber em `dense_limit`.

        Depois da primeira montagem de Λ as chamadas seguintes usam direto a matriz densa.
        """
        p = self.problem
        history: list[float] = []
        if self._gramian is None:
            try:
                return self.conjugate_gradient(b), "cg"
            except ConvergenceError as error:
                size = int(np.prod(p.leaf_shape))
                if size > p.dense_limit:
                    raise
                logger.warning("CG estagnou em %.3e; resolvendo o sistema denso (%d incógnitas)",
                               error.residuals[-1], size)
                history = error.residuals
        return self._dense_result(b, history), "dense"

    def functional_value(self, zT: np.ndarray) -> float:
        p = self.problem
        sol = self.backward(zT)
        z_term, omega_term = self.observation_energy(sol)
        coupling = p.mesh.h * float(np.dot(p.y0, sol.z0))
        return 0.5 * z_term + 0.5 * omega_term + 0.5 * p.epsilon * self.leaf_inner(zT, zT) - coupling

    def gradient(self, zT: np.ndarray) -> np.ndarray:
        """ε·z_T − y(T; y0, −χ_ω ζ, −Z), o gradiente de J em E⟨·,·⟩."""
        sol = self.backward(zT)
        controlled = self.forward(self.problem.y0, self.controls_from(sol, -1.0)).terminal
        return self.problem.epsilon * zT - controlled

    def solve(self) -> HumSolution:
        p = self.problem
        b = self.free_terminal()
        cg, method = self.solve_system(b)
        sol = self.backward(cg.x)
        controls = self.controls_from(sol, -1.0)
        yT = self.forward(p.y0, controls).terminal
        gap = yT - p.epsilon * cg.x
        closure = math.sqrt(self.leaf_inner(gap, gap))
        b_norm = math.sqrt(self.leaf_inner(b, b))
        logger.info("HUM: ε=%.3e, %d iterações CG, fechamento %.3e", p.epsilon, cg.iterations, closure)
        return HumSolution(
            zT_star=cg.x,
            backward=sol,
            u_star=controls.u,
            v_star=controls.v,
            yT=yT,
            b_norm=b_norm,
            J_value=self.functional_value(cg.x),
            cg_iterations=cg.iterations,
            residual_history=tuple(cg.residuals),
            cg_residual=cg.true_residual,
            closure_error=closure,
            method=method,
        )

    def report_bounds(self, sol: HumSolution) -> HumBounds:
        p = self.problem
        z_term, omega_term = self.observation_energy(sol.backward)
        cost = z_term + omega_term
        initial = p.mesh.h * float(np.dot(p.y0, p.y0))
        terminal = self.leaf_inner(sol.yT, sol.yT)
        if initial == 0.0:
            return HumBounds(cost, 0.0, 0.0, terminal, 0.0, 0.0, self.leaf_inner(sol.zT_star, sol.zT_star))
        return HumBounds(
            control_cost=cost,
            initial_energy=initial,
            cost_ratio=cost / initial,
            terminal_energy=terminal,
            terminal_ratio=terminal / initial,
            terminal_over_eps=terminal / (p.epsilon * initial),
            zT_energy=self.leaf_inner(sol.zT_star, sol.zT_star),
        )

    def assemble_gramian(self) -> np.ndarray:
        shape = self.problem.leaf_shape
        size = shape[0] * shape[1]
        matrix = np.empty((size, size))
        for j in range(size):
            basis = np.zeros(size)
            basis[j] = 1.0
            matrix[:, j] = self.gramian_apply(basis.reshape(shape)).ravel()
        return matrix

    def dense_solve(self, b: np.ndarray | None = None) -> np.ndarray:
        if self._gramian is None:
            self._gramian = self.assemble_gramian()
        matrix = self._gramian + self.problem.epsilon * np.eye(np.prod(self.problem.leaf_shape))
        b = self.free_terminal() if b is None else b
        return scipy.linalg.solve(matrix, b.ravel(), assume_a="sym").reshape(self.problem.leaf_shape)

    def _dense_result(self, b: np.ndarray, history: list[float]) -> CgResult:
        b_energy = self.leaf_inner(b, b)
        if b_energy == 0.0:
            return CgResult(np.zeros_like(b), 0, [0.0], 0.0)
        x = self.dense_solve(b)
        r = b - self.operator_apply(x)
        true_residual = math.sqrt(self.leaf_inner(r, r) / b_energy)
        return CgResult(x, max(len(history) - 1, 0), list(history), true_residual)

    def sharp_observability_constant(self, terminal_weight: float | None = None) -> float:
        """sup_{z_T} ‖z(0)‖² / (ΣdtE‖Z‖² + ΣdtE‖χζ‖² + c·E‖z_T‖²), c = ε por padrão.

        Pela dualidade o sup em z_T vira o maior autovalor de
        E⟨y_livre(T; e_i), (Λ + c)⁻¹ y_livre(T; e_j)⟩ / h.
        """
        p = self.problem
        solver = self if terminal_weight is None else HumSolver(_with_epsilon(p, terminal_weight))
        # Λ não depende do peso terminal
        solver._gramian = self._gramian
        n = p.mesh.N
        free = [solver.free_terminal(np.eye(n)[i]) for i in range(n)]
        solved = [solver.solve_system(b)[0].x for b in free]
        gram = np.array([[solver.leaf_inner(free[i], solved[j]) for j in range(n)] for i in range(n)])
        gram = 0.5 * (gram + gram.T)
        return float(scipy.linalg.eigvalsh(gram)[-1]) / p.mesh.h


def _with_epsilon(problem: HumProblem, epsilon: float) -> HumProblem:
    return replace(problem, epsilon=epsilon)


def gramian_apply(zT: np.ndarray, problem: HumProblem) -> np.ndarray:
    return HumSolver(problem).gramian_apply(zT)


def solve_hum(problem: HumProblem) -> HumSolution:
    return HumSolver(problem).solve()


def report_bounds(sol: HumSolution, problem: HumProblem) -> HumBounds:
    return HumSolver(problem).report_bounds(sol)
