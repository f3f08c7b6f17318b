import argparse
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from colorama import Fore, Style, init
from tabulate import tabulate

from ..config.experiment import ExperimentConfig, load_config, validate_config, validate_weights
from ..services.hum_service import HumSolver
from ..services.identity_service import IdentityService
from ..services.inequality_service import carleman_refinement_fit, observability_sample, random_terminal_family
from ..services.sweep_service import SweepService, build_problem, summarize
from ..services.weights import build_weights
from ..utils.csv_output import emit_csv
from ..utils.errors import ConfigurationError, InvalidArgumentError, NumericalError
from ..utils.logging_config import configure_logging, get_logger

init()

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CARLEMAN_STABILITY_FACTOR = 5.0
WEIGHTED_COMMANDS = ("observability", "carleman")


class ControlInterface:
    def __init__(self, config: ExperimentConfig, out: str | None = None) -> None:
        self.config = config
        self.out = out

    def print_header(self, title: str) -> None:
        print(f"\n{Fore.CYAN}{'=' * 60}")
        print(f"{' ' * ((60 - len(title)) // 2)}{title}")
        print(f"{'=' * 60}{Style.RESET_ALL}\n")

    def print_success(self, message: str) -> None:
        print(f"{Fore.GREEN}✓ {message}{Style.RESET_ALL}")

    def print_error(self, message: str) -> None:
        print(f"{Fore.RED}✗ {message}{Style.RESET_ALL}")

    def print_warning(self, message: str) -> None:
        print(f"{Fore.YELLOW}⚠ {message}{Style.RESET_ALL}")

    def print_table(self, rows: list[list[Any]], headers: Sequence[str]) -> None:
        print(tabulate(rows, headers=headers, tablefmt="grid", floatfmt=".6g"))

    def write_report(self, report: dict[str, Any], path: str | Path | None) -> None:
        if path is None:
            return
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        self.print_success(f"Relatório gravado em {path}")

    def _seeds(self, stream: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.config.seed).spawn(stream + 1)[stream]

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(self._seeds(stream))

    def run_identities(self) -> bool:
        self.print_header("IDENTIDADES DISCRETAS")
        results = IdentityService(self.config.seed).run()
        self.print_table(
            [[r.group, r.name, r.residual, r.tolerance, "ok" if r.passed else "FALHA", r.detail] for r in results],
            ["Grupo", "Verificação", "Resíduo", "Tolerância", "Status", "Detalhe"],
        )
        failed = [r for r in results if not r.passed]
        passed = len(results) - len(failed)
        if failed:
            self.print_error(f"{passed} aprovadas, {len(failed)} falharam")
        else:
            self.print_success(f"{passed} aprovadas, 0 falharam")
        self.write_report({"passed": passed, "failed": len(failed),
                           "checks": [{"group": r.group, "name": r.name, "residual": r.residual,
                                       "tolerance": r.tolerance, "passed": r.passed} for r in results]},
                          self.out)
        return not failed

    def run_hum(self) -> bool:
        c = self.config
        self.print_header("CONTROLE HUM PENALIZADO")
        problem = build_problem(c, c.mesh.N, c.tree.depth, self._rng(0))
        solver = HumSolver(problem)
        solution = solver.solve()
        bounds = solver.report_bounds(solution)
        closure_bound = 10.0 * max(solution.cg_residual, c.hum.cg_tol) * max(solution.b_norm, 1.0)
        rows = [
            ["N", problem.mesh.N], ["profundidade", problem.tree.depth], ["ε", problem.epsilon],
            ["iterações CG", solution.cg_iterations], ["resíduo CG", solution.cg_residual],
            ["‖y(T) − ε z_T*‖", solution.closure_error], ["J(z_T*)", solution.J_value],
            ["custo / E‖y0‖²", bounds.cost_ratio], ["E‖y(T)‖² / E‖y0‖²", bounds.terminal_ratio],
            ["E‖y(T)‖² / (ε E‖y0‖²)", bounds.terminal_over_eps],
        ]
        self.print_table(rows, ["Quantidade", "Valor"])
        self.write_report({
            "N": problem.mesh.N, "depth": problem.tree.depth, "eps": problem.epsilon,
            "cg_iters": solution.cg_iterations, "cg_residual": solution.cg_residual,
            "closure_err": solution.closure_error, "J": solution.J_value,
            "cost_ratio": bounds.cost_ratio, "term_ratio": bounds.terminal_ratio,
            "term_over_eps": bounds.terminal_over_eps,
        }, self.out)
        if solution.closure_error > closure_bound:
            self.print_error(f"Fechamento {solution.closure_error:.3e} acima de {closure_bound:.3e}")
            return False
        self.print_success("y(T) = ε z_T* verificado")
        return True

    def run_observability(self) -> bool:
        c = self.config
        self.print_header("DESIGUALDADE DE OBSERVABILIDADE")
        problem = build_problem(c, c.mesh.N, c.tree.depth, self._rng(0))
        weights = build_weights(c.weight_params(problem.mesh.h))
        total = c.sampling.observability_train + c.sampling.observability_holdout
        family = random_terminal_family(problem.tree, problem.mesh, total, self._seeds(1))
        report = observability_sample(family, problem, weights, sharp=True, threads=c.threads,
                                      train=c.sampling.observability_train)
        rows = []
        for label, fit in (("ε", report.exponential), ("h⁻²ε", report.scaled)):
            rows.append([label, fit.samples, fit.excluded, fit.train_max, fit.constant, fit.holdout_violations,
                         fit.sharp, fit.sharp_violations])
        self.print_table(rows, ["Peso terminal", "Amostras", "Excluídas", "Máx. treino", "C ajustado",
                                "Violações (holdout)", "C exato", "Violações (C exato)"])
        self.write_report({
            "delta": report.delta,
            "variants": {label: {"samples": fit.samples, "excluded": fit.excluded, "train_max": fit.train_max,
                                 "C": fit.constant,
                                 "holdout_violations": fit.holdout_violations, "sharp_C": fit.sharp,
                                 "sharp_violations": fit.sharp_violations}
                         for label, fit in (("eps", report.exponential), ("h2_eps", report.scaled))},
        }, self.out)
        ok = True
        for fit in (report.exponential, report.scaled):
            if fit.holdout_violations:
                self.print_error(f"{fit.holdout_violations} amostras do holdout acima do C ajustado "
                                 f"(peso terminal {fit.terminal_weight:.3e})")
                ok = False
            if fit.sharp_violations:
                self.print_error(f"{fit.sharp_violations} amostras acima da constante exata "
                                 f"(peso terminal {fit.terminal_weight:.3e})")
                ok = False
        if ok:
            self.print_success("Nenhuma violação no holdout nem da constante exata")
        return ok

    def run_carleman(self) -> bool:
        c = self.config
        self.print_header("ESTIMATIVA DE CARLEMAN")
        weights = build_weights(c.weight_params())
        fits = [
            carleman_refinement_fit(weights, c.mesh.N, c.tree.depth, c.tree.T, c.region.omega,
                                    c.sampling.carleman, self._seeds(level), c.threads, level, c.tree.depth_cap)
            for level in (0, 1)
        ]
        self.print_table([[fit.h, 2 ** level * c.tree.depth, fit.delta, fit.samples, fit.constant]
                          for level, fit in enumerate(fits)],
                         ["h", "profundidade", "δ", "Amostras", "max LHS/RHS"])
        finite = all(math.isfinite(fit.constant) and fit.constant > 0 for fit in fits)
        spread = fits[1].constant / fits[0].constant if finite else math.inf
        self.write_report({"rows": [{"h": fit.h, "delta": fit.delta, "samples": fit.samples, "C": fit.constant}
                                    for fit in fits], "refinement_factor": spread}, self.out)
        if not finite:
            self.print_error("Razão LHS/RHS não finita")
            return False
        if not 1.0 / CARLEMAN_STABILITY_FACTOR <= spread <= CARLEMAN_STABILITY_FACTOR:
            self.print_error(f"Razão máxima variou por um fator {spread:.3g} no refinamento")
            return False
        self.print_success(f"Razão máxima estável no refinamento (fator {spread:.3g})")
        return True

    def run_sweep(self) -> bool:
        c = self.config
        self.print_header("VARREDURA EM h")
        rows = SweepService(c).run()
        path = emit_csv([row.as_csv_row() for row in rows], self.out or c.output)
        self.print_table(
            [[r.h, r.delta, r.eps, r.obs_C, r.term_ratio, r.cost_ratio, r.cg_iters, r.reason] for r in rows],
            ["h", "δ", "ε", "C obs", "razão terminal", "razão custo", "CG", "motivo"],
        )
        self.print_success(f"CSV gravado em {path}")
        summary = summarize(rows)
        self.write_report({"completed": summary.completed, "skipped": summary.skipped,
                           "monotone": summary.monotone, "slope": summary.slope,
                           "max_cost_ratio": summary.max_cost_ratio}, Path(path).with_suffix(".json"))
        if summary.skipped:
            self.print_warning(f"{summary.skipped} pontos ignorados")
        if summary.completed < 2:
            return summary.completed > 0
        ok = summary.monotone and summary.slope < 0
        message = (f"razão terminal monótona: {summary.monotone}, inclinação log × 1/h = {summary.slope:.4g}, "
                   f"máx razão de custo = {summary.max_cost_ratio:.4g}")
        if ok:
            self.print_success(message)
        else:
            self.print_error(message)
        return ok


COMMANDS = {
    "identities": ControlInterface.run_identities,
    "hum": ControlInterface.run_hum,
    "observability": ControlInterface.run_observability,
    "carleman": ControlInterface.run_carleman,
    "sweep": ControlInterface.run_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="arquivo JSON de configuração")
    common.add_argument("--out", help="arquivo de saída (CSV da varredura ou relatório JSON)")
    common.add_argument("--seed", type=int, help="semente raiz (inteiro sem sinal de 64 bits)")
    common.add_argument("--threads", type=int, help="número de threads para amostras independentes")
    common.add_argument("--verbose", action="store_true", help="log em nível DEBUG")
    parser = argparse.ArgumentParser(
        prog="controle_estocastico",
        description="Controlabilidade nula de equações parabólicas estocásticas semidiscretas",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("identities", parents=[common], help="bateria de identidades discretas")
    sub.add_parser("hum", parents=[common], help="resolve um problema de controle HUM")
    sub.add_parser("observability", parents=[common], help="ajusta a constante de observabilidade")
    sub.add_parser("carleman", parents=[common], help="avalia a estimativa de Carleman")
    sub.add_parser("sweep", parents=[common], help="varredura em h com saída CSV")
    return parser


def _print_violations(violations: Sequence[str]) -> None:
    for violation in violations:
        print(f"{Fore.RED}✗ {violation}{Style.RESET_ALL}")


def cli(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_config(args.config).with_overrides(seed=args.seed, threads=args.threads)
        violations = validate_config(config)
        if not violations and args.command in WEIGHTED_COMMANDS:
            violations = validate_weights(config)
        if violations:
            raise ConfigurationError(violations)
    except ConfigurationError as error:
        _print_violations(error.violations)
        return EXIT_CONFIG
    ui = ControlInterface(config, args.out)
    try:
        ok = COMMANDS[args.command](ui)
    except (ConfigurationError, InvalidArgumentError) as error:
        _print_violations(getattr(error, "violations", [str(error)]))
        return EXIT_CONFIG
    except (NumericalError, OSError) as error:
        ui.print_error(f"Falha numérica ou de E/S: {error}")
        for value in getattr(error, "residuals", [])[-5:]:
            print(f"  resíduo relativo {value:.3e}")
        logger.debug("falha em '%s'", args.command, exc_info=True)
        return EXIT_NUMERICAL
    return EXIT_OK if ok else EXIT_FAILED_CHECKS
