"""
Configuração de experimentos (JSON <-> dataclasses).

As pré-condições são verificadas em `validate_config` antes de qualquer
execução; as violações são acumuladas e devolvidas juntas. O regime dos
pesos (h ≤ h₁) fica em `validate_weights`.
"""
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from ..discretization.mesh import build_mesh
from ..stochastic.coefficients import COEFFICIENT_KINDS
from ..stochastic.forward_solver import region_mask
from ..stochastic.noise_tree import DEFAULT_DEPTH_CAP
from ..services.weights import G_TILDE, WeightParams, build_weights, delta_schedule, h1_threshold
from ..utils.errors import ConfigurationError, InvalidArgumentError
from ..utils.logging_config import get_logger
from ..utils.validators import is_open_subinterval, is_positive_int, is_positive_real, is_strictly_inside

logger = get_logger(__name__)

DEFAULT_OUTPUT = "resultados/sweep.csv"


@dataclass(frozen=True)
class MeshConfig:
    N: int = 8


@dataclass(frozen=True)
class TreeConfig:
    depth: int = 6
    T: float = 1.0
    depth_cap: int = DEFAULT_DEPTH_CAP


@dataclass(frozen=True)
class RegionConfig:
    omega: tuple[float, float] = (0.3, 0.7)
    omega0: tuple[float, float] = (0.4, 0.6)


@dataclass(frozen=True)
class CoefficientConfig:
    kind: str = "constant"
    magnitudes: tuple[float, float] = (0.5, 0.5)


@dataclass(frozen=True)
class WeightConfig:
    lam: float = 2.0
    mu: float = 1.5
    delta0: float = 0.25
    x0: float | None = None
    K: float = 2.0
    eps0: float = 1.0
    c_eps: float = 1.0
    g_tilde: tuple[float, float] = G_TILDE


@dataclass(frozen=True)
class HumConfig:
    cg_tol: float = 1e-10
    cg_maxiter: int = 500
    epsilon: float | None = None
    dense_limit: int = 4096


@dataclass(frozen=True)
class SamplingConfig:
    observability_train: int = 200
    observability_holdout: int = 200
    carleman: int = 100


@dataclass(frozen=True)
class SweepConfig:
    N_values: tuple[int, ...] = (7, 11, 15, 19)
    depth: int = 6
    samples: int = 20
    cg_maxiter: int = 2000


@dataclass(frozen=True)
class ExperimentConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    tree: TreeConfig = field(default_factory=TreeConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    coefficients: CoefficientConfig = field(default_factory=CoefficientConfig)
    weights: WeightConfig = field(default_factory=WeightConfig)
    hum: HumConfig = field(default_factory=HumConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 12345
    threads: int = 1
    output: str = DEFAULT_OUTPUT

    def to_dict(self) -> dict[str, Any]:
        return _jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        unknown = set(data) - set(_SECTIONS) - {"seed", "threads", "output"}
        if unknown:
            raise ConfigurationError([f"chave desconhecida: '{key}'" for key in sorted(unknown)])
        sections = {}
        violations = []
        for name, section_cls in _SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                violations.append(f"{name}: esperado um objeto JSON")
                continue
            try:
                sections[name] = section_cls(**{k: _tupled(v) for k, v in raw.items()})
            except TypeError as error:
                violations.append(f"{name}: {error}")
        if violations:
            raise ConfigurationError(violations)
        return cls(**sections,
                   seed=data.get("seed", 12345),
                   threads=data.get("threads", 1),
                   output=data.get("output", DEFAULT_OUTPUT))

    def weight_params(self, h: float | None = None) -> WeightParams:
        w = self.weights
        h = build_mesh(self.mesh.N).h if h is None else h
        h1 = h1_threshold(w.lam, w.eps0, w.delta0, self.tree.T)
        delta = delta_schedule(h, h1, w.delta0)
        return WeightParams(self.tree.T, w.lam, w.mu, delta, self.region.omega0, self.region.omega,
                            w.x0, w.K, w.eps0, w.g_tilde)

    def with_overrides(self, seed: int | None = None, threads: int | None = None,
                       output: str | None = None) -> "ExperimentConfig":
        changes = {key: value for key, value in
                   (("seed", seed), ("threads", threads), ("output", output)) if value is not None}
        return replace(self, **changes)


_SECTIONS = {
    "mesh": MeshConfig,
    "tree": TreeConfig,
    "region": RegionConfig,
    "coefficients": CoefficientConfig,
    "weights": WeightConfig,
    "hum": HumConfig,
    "sampling": SamplingConfig,
    "sweep": SweepConfig,
}


def _tupled(value: Any) -> Any:
    return tuple(value) if isinstance(value, list) else value


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _is_finite_real(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_config(config: ExperimentConfig) -> list[str]:
    violations: list[str] = []
    c = config

    if not is_positive_int(c.mesh.N, minimum=2):
        violations.append(f"mesh.N deve ser inteiro ≥ 2, recebeu {c.mesh.N!r}")
    if not is_positive_int(c.tree.depth_cap):
        violations.append(f"tree.depth_cap deve ser inteiro ≥ 1, recebeu {c.tree.depth_cap!r}")
    elif not is_positive_int(c.tree.depth) or c.tree.depth > c.tree.depth_cap:
        violations.append(f"tree.depth deve estar em [1, {c.tree.depth_cap}], recebeu {c.tree.depth!r}")
    if not is_positive_real(c.tree.T):
        violations.append(f"tree.T deve ser positivo, recebeu {c.tree.T!r}")

    if not is_open_subinterval(c.region.omega):
        violations.append(f"region.omega deve ser um subintervalo aberto de (0, 1), recebeu {c.region.omega!r}")
    elif not is_open_subinterval(c.region.omega0) or not is_strictly_inside(c.region.omega0, c.region.omega):
        violations.append(f"region.omega0 deve satisfazer ω₀ ⋐ ω, recebeu {c.region.omega0!r}")
    elif is_positive_int(c.mesh.N, minimum=2) and not region_mask(build_mesh(c.mesh.N), c.region.omega).any():
        violations.append(f"region.omega não contém nenhum ponto interior da malha com N={c.mesh.N}")

    if c.coefficients.kind not in COEFFICIENT_KINDS:
        violations.append(f"coefficients.kind deve ser um de {', '.join(COEFFICIENT_KINDS)}, "
                          f"recebeu {c.coefficients.kind!r}")
    magnitudes = c.coefficients.magnitudes
    if not (isinstance(magnitudes, tuple) and len(magnitudes) == 2 and all(_is_finite_real(v) for v in magnitudes)):
        violations.append(f"coefficients.magnitudes deve ter dois reais finitos, recebeu {magnitudes!r}")
    elif is_positive_int(c.tree.depth) and is_positive_real(c.tree.T) and \
            c.tree.T / c.tree.depth * abs(magnitudes[0]) >= 1.0:
        violations.append(f"dt·|a1|∞ deve ser < 1 (dt={c.tree.T / c.tree.depth:g}, |a1|∞={abs(magnitudes[0]):g})")

    w = c.weights
    for name in ("lam", "mu"):
        value = getattr(w, name)
        if not (_is_finite_real(value) and value > 1):
            violations.append(f"weights.{name} deve ser > 1, recebeu {value!r}")
    if not (_is_finite_real(w.delta0) and 0 < w.delta0 < 0.5):
        violations.append(f"weights.delta0 deve estar em (0, 1/2), recebeu {w.delta0!r}")
    if not (_is_finite_real(w.eps0) and 0 < w.eps0 <= 1):
        violations.append(f"weights.eps0 deve estar em (0, 1], recebeu {w.eps0!r}")
    if not is_positive_real(w.c_eps):
        violations.append(f"weights.c_eps deve ser positivo, recebeu {w.c_eps!r}")
    if not is_positive_real(w.K):
        violations.append(f"weights.K deve ser positivo, recebeu {w.K!r}")

    if not is_positive_real(c.hum.cg_tol):
        violations.append(f"hum.cg_tol deve ser positivo, recebeu {c.hum.cg_tol!r}")
    if not is_positive_int(c.hum.cg_maxiter):
        violations.append(f"hum.cg_maxiter deve ser inteiro ≥ 1, recebeu {c.hum.cg_maxiter!r}")
    if c.hum.epsilon is not None and not is_positive_real(c.hum.epsilon):
        violations.append(f"hum.epsilon deve ser positivo ou null, recebeu {c.hum.epsilon!r}")
    if not is_positive_int(c.hum.dense_limit, minimum=0):
        violations.append(f"hum.dense_limit deve ser inteiro ≥ 0, recebeu {c.hum.dense_limit!r}")

    s = c.sampling
    if not is_positive_int(s.observability_train):
        violations.append(f"sampling.observability_train deve ser inteiro ≥ 1, recebeu {s.observability_train!r}")
    if not is_positive_int(s.observability_holdout):
        violations.append(f"sampling.observability_holdout deve ser inteiro ≥ 1, recebeu {s.observability_holdout!r}")
    if not is_positive_int(s.carleman):
        violations.append(f"sampling.carleman deve ser inteiro ≥ 1, recebeu {s.carleman!r}")

    sw = c.sweep
    if not isinstance(sw.N_values, tuple) or not all(is_positive_int(n, minimum=2) for n in sw.N_values):
        violations.append(f"sweep.N_values deve ser uma lista de inteiros ≥ 2, recebeu {sw.N_values!r}")
    if not is_positive_int(sw.depth) or (is_positive_int(c.tree.depth_cap) and sw.depth > c.tree.depth_cap):
        violations.append(f"sweep.depth deve estar em [1, {c.tree.depth_cap}], recebeu {sw.depth!r}")
    if not is_positive_int(sw.samples, minimum=2):
        violations.append(f"sweep.samples deve ser inteiro ≥ 2, recebeu {sw.samples!r}")
    if not is_positive_int(sw.cg_maxiter):
        violations.append(f"sweep.cg_maxiter deve ser inteiro ≥ 1, recebeu {sw.cg_maxiter!r}")

    if not (isinstance(c.seed, int) and not isinstance(c.seed, bool) and 0 <= c.seed < 2 ** 64):
        violations.append(f"seed deve ser inteiro em [0, 2⁶⁴), recebeu {c.seed!r}")
    if not is_positive_int(c.threads):
        violations.append(f"threads deve ser inteiro ≥ 1, recebeu {c.threads!r}")
    if not isinstance(c.output, str) or not c.output:
        violations.append("output deve ser um caminho não vazio")

    return violations


def validate_weights(config: ExperimentConfig) -> list[str]:
    try:
        build_weights(config.weight_params())
    except InvalidArgumentError as error:
        return [f"weights: {error}"]
    return []


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    if path is None:
        config = ExperimentConfig()
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError([f"arquivo de configuração não encontrado: {path}"])
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as error:
            raise ConfigurationError([f"JSON inválido em {path}: {error}"]) from error
        if not isinstance(data, dict):
            raise ConfigurationError([f"{path}: o documento deve ser um objeto JSON"])
        config = ExperimentConfig.from_dict(data)
    violations = validate_config(config)
    if violations:
        for violation in violations:
            logger.warning("configuração: %s", violation)
        raise ConfigurationError(violations)
    return config


def save_config(config: ExperimentConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
