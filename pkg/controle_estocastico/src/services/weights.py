"""
Família de pesos de Carleman:

    ψ(x) = K − (x − x0)²
    φ(x) = e^{μψ(x)} − e^{2μ‖ψ‖∞},   varphi(x) = e^{μψ(x)}
    θ(t) = 1/((t + δT)(T + δT − t)),  s(t) = λθ(t)
    r = e^{sφ},  ρ = r⁻¹

e^{sφ} sai do alcance de float64 muito cedo, por isso as grandezas que
entram nas estimativas são calculadas pelo expoente (`log_weight`) ou por
diferenças de expoente.
"""
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..utils.errors import InvalidArgumentError, WeightConfigurationError
from ..utils.logging_config import get_logger
from ..utils.validators import is_strictly_inside

logger = get_logger(__name__)

REGIME_RTOL = 1e-12
G_TILDE = (-0.1, 1.1)


@dataclass(frozen=True)
class WeightParams:
    T: float
    lam: float
    mu: float
    delta: float
    omega0: tuple[float, float]
    omega: tuple[float, float]
    x0: float | None = None
    K: float = 2.0
    eps0: float = 1.0
    g_tilde: tuple[float, float] = G_TILDE

    def __post_init__(self) -> None:
        if not self.lam > 1:
            raise InvalidArgumentError(f"λ deve ser > 1, recebeu {self.lam}")
        if not self.mu > 1:
            raise InvalidArgumentError(f"μ deve ser > 1, recebeu {self.mu}")
        if not 0 < self.delta < 0.5:
            raise InvalidArgumentError(f"δ deve estar em (0, 1/2), recebeu {self.delta}")
        if not 0 < self.eps0 <= 1:
            raise InvalidArgumentError(f"ε₀ deve estar em (0, 1], recebeu {self.eps0}")
        if not self.T > 0:
            raise InvalidArgumentError(f"T deve ser positivo, recebeu {self.T}")
        if self.x0 is None:
            object.__setattr__(self, "x0", 0.5 * (self.omega0[0] + self.omega0[1]))

    def with_delta(self, delta: float) -> "WeightParams":
        return WeightParams(self.T, self.lam, self.mu, delta, self.omega0, self.omega,
                            self.x0, self.K, self.eps0, self.g_tilde)


@dataclass(frozen=True)
class CarlemanWeights:
    params: WeightParams
    psi_sup: float = field(default=0.0)

    def psi(self, x: np.ndarray) -> np.ndarray:
        return self.params.K - (np.asarray(x, dtype=float) - self.params.x0) ** 2

    def dpsi(self, x: np.ndarray) -> np.ndarray:
        return -2.0 * (np.asarray(x, dtype=float) - self.params.x0)

    def varphi(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.params.mu * self.psi(x))

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.varphi(x) - math.exp(2.0 * self.params.mu * self.psi_sup)

    def theta(self, t: float | np.ndarray) -> float | np.ndarray:
        p = self.params
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > p.T):
            raise InvalidArgumentError(f"t fora de [0, T={p.T}]: {t}")
        value = 1.0 / ((t_arr + p.delta * p.T) * (p.T + p.delta * p.T - t_arr))
        return float(value) if value.ndim == 0 else value

    def s(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.params.lam * self.theta(t)

    def log_weight(self, t: float | np.ndarray, x: np.ndarray) -> np.ndarray:
        """Expoente 2s(t)φ(x) de e^{2sφ}; t e x formam uma grade (t, x)."""
        s = np.atleast_1d(np.asarray(self.s(t), dtype=float))
        return 2.0 * s[:, None] * self.phi(x)[None, :]

    def r(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.exp(self.s(t) * self.phi(x))

    def rho(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.exp(-self.s(t) * self.phi(x))


def build_weights(p: WeightParams, samples: int = 4001) -> CarlemanWeights:
    a, b = p.g_tilde
    if not (a < 0.0 and b > 1.0):
        raise WeightConfigurationError("g-tilde-neighbourhood", f"G̃ = {p.g_tilde} não contém [0, 1]")
    if not (p.omega[0] < p.omega0[0] < p.omega0[1] < p.omega[1]) or not is_strictly_inside(p.omega0, p.omega):
        raise WeightConfigurationError("omega0-inside-omega", f"ω₀ = {p.omega0}, ω = {p.omega}")
    weights = CarlemanWeights(p)
    grid = np.linspace(a, b, samples)
    psi = weights.psi(grid)
    if np.min(psi) <= 0:
        raise WeightConfigurationError("psi-positive", f"min ψ em G̃ = {np.min(psi):.6g}")
    if not weights.dpsi(0.0) > 0:
        raise WeightConfigurationError("dpsi-left", f"∂ₓψ(0) = {float(weights.dpsi(0.0)):.6g}")
    if not weights.dpsi(1.0) < 0:
        raise WeightConfigurationError("dpsi-right", f"∂ₓψ(1) = {float(weights.dpsi(1.0)):.6g}")
    outside = grid[(grid <= p.omega0[0]) | (grid >= p.omega0[1])]
    if not p.omega0[0] < p.x0 < p.omega0[1] or np.min(np.abs(weights.dpsi(outside))) <= 0:
        raise WeightConfigurationError("dpsi-nonzero-outside-omega0",
                                       f"ponto crítico x0 = {p.x0} fora de ω₀ = {p.omega0}")
    psi_sup = float(max(np.max(np.abs(psi)), abs(float(weights.psi(p.x0)))))
    logger.debug("pesos: λ=%g μ=%g δ=%g x0=%g ‖ψ‖∞=%g", p.lam, p.mu, p.delta, p.x0, psi_sup)
    return CarlemanWeights(p, psi_sup)


def theta(w: CarlemanWeights, t: float) -> float:
    return w.theta(t)


@dataclass(frozen=True)
class RegimeDecision:
    accepted: bool
    ratio: float
    eps0: float

    @property
    def margin(self) -> float:
        return self.eps0 - self.ratio


def validate_regime(w: CarlemanWeights, h: float) -> RegimeDecision:
    if not h > 0:
        raise InvalidArgumentError(f"h deve ser positivo, recebeu {h}")
    p = w.params
    ratio = p.lam * h / (p.delta * p.T ** 2)
    accepted = ratio <= p.eps0 * (1.0 + REGIME_RTOL)
    if not accepted:
        logger.warning("regime recusado: λh(δT²)⁻¹ = %.6g > ε₀ = %.6g", ratio, p.eps0)
    return RegimeDecision(accepted, ratio, p.eps0)


def h1_threshold(lam: float, eps0: float, delta0: float, T: float) -> float:
    return eps0 * delta0 * T ** 2 / lam


def delta_schedule(h: float, h1: float, delta0: float) -> float:
    if not 0 < delta0 < 0.5:
        raise InvalidArgumentError(f"δ₀ deve estar em (0, 1/2), recebeu {delta0}")
    if not h > 0:
        raise InvalidArgumentError(f"h deve ser positivo, recebeu {h}")
    if h > h1 * (1.0 + REGIME_RTOL):
        raise InvalidArgumentError(f"h = {h:.6g} excede h₁ = {h1:.6g}")
    return min(h / h1, 1.0) * delta0


@dataclass(frozen=True)
class ThetaBounds:
    min_theta: float
    lower_bound: float
    mid_max_theta: float
    mid_upper_bound: float
    theta_zero: float
    theta_zero_bound: float

    @property
    def holds(self) -> bool:
        return (self.min_theta >= self.lower_bound
                and self.mid_max_theta <= self.mid_upper_bound
                and self.theta_zero >= self.theta_zero_bound)


def theta_bounds(w: CarlemanWeights, samples: int = 2001) -> ThetaBounds:
    T, delta = w.params.T, w.params.delta
    t = np.linspace(0.0, T, samples)
    values = w.theta(t)
    middle = values[(t >= T / 4) & (t <= 3 * T / 4)]
    return ThetaBounds(
        min_theta=float(np.min(values)),
        lower_bound=T ** -2,
        mid_max_theta=float(np.max(middle)),
        mid_upper_bound=16.0 / (3.0 * T ** 2),
        theta_zero=float(w.theta(0.0)),
        theta_zero_bound=(2.0 / 3.0) / (delta * T ** 2),
    )


@dataclass(frozen=True)
class ScalingRow:
    h: float
    delta: float
    s_max: float
    laplacian_ratio: float
    gradient_ratio: float
    leading_error: float


def _weight_quotients(w: CarlemanWeights, t: float, h: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """r·D_h²ρ, r²·A_h²ρ·A_hD_hρ e o termo principal −s·varphi·μ·∂ₓψ em x."""
    s = w.s(t)
    phi = w.phi(x)
    e_plus = np.exp(-s * (w.phi(x + h) - phi))
    e_minus = np.exp(-s * (w.phi(x - h) - phi))
    laplacian = (e_plus - 2.0 + e_minus) / (h * h)
    gradient = 0.25 * (e_plus + 2.0 + e_minus) * (e_plus - e_minus) / (2.0 * h)
    leading = -s * w.varphi(x) * w.params.mu * w.dpsi(x)
    return laplacian, gradient, leading


def scaling_probe(params: WeightParams, h_values: Sequence[float], delta0: float | None = None,
                  times: int = 21) -> list[ScalingRow]:
    """Com δ0 dado, δ segue δ = (h/h₁)δ₀; sem δ0, δ fica fixo em params.delta."""
    rows = []
    h1 = h1_threshold(params.lam, params.eps0, delta0, params.T) if delta0 is not None else None
    for h in h_values:
        delta = delta_schedule(h, h1, delta0) if h1 is not None else params.delta
        w = build_weights(params.with_delta(delta))
        x = np.arange(1, int(round(1.0 / h))) * h
        lap_ratio = grad_ratio = lead_err = 0.0
        for t in np.linspace(0.0, params.T, times):
            s = w.s(t)
            laplacian, gradient, leading = _weight_quotients(w, t, h, x)
            lap_ratio = max(lap_ratio, float(np.max(np.abs(laplacian))) / s ** 2)
            grad_ratio = max(grad_ratio, float(np.max(np.abs(gradient))) / s)
            lead_err = max(lead_err, float(np.max(np.abs(gradient - leading))) / s)
        rows.append(ScalingRow(float(h), float(delta), float(w.s(0.0)), lap_ratio, grad_ratio, lead_err))
    return rows
