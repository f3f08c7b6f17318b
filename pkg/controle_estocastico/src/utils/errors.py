class ControlError(Exception):
    pass


class InvalidArgumentError(ControlError, ValueError):
    pass


class WeightConfigurationError(InvalidArgumentError):
    def __init__(self, condition: str, detail: str = "") -> None:
        self.condition = condition
        message = f"Função peso inválida: condição '{condition}' violada"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class ConfigurationError(ControlError, ValueError):
    def __init__(self, violations: list[str]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "Configuração inválida")


class NumericalError(ControlError, ArithmeticError):
    pass


class SingularSystemError(NumericalError):
    def __init__(self, dt: float, h: float, a1_bound: float, index: int) -> None:
        self.dt = dt
        self.h = h
        self.a1_bound = a1_bound
        self.index = index
        super().__init__(
            f"Sistema tridiagonal singular no pivô {index} "
            f"(dt={dt:.6g}, h={h:.6g}, |a1|∞={a1_bound:.6g})"
        )


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residuals: list[float]) -> None:
        self.residuals = list(residuals)
        super().__init__(message)


class ResourceLimitError(NumericalError):
    pass


class RegimeError(NumericalError):
    def __init__(self, ratio: float, eps0: float) -> None:
        self.ratio = ratio
        self.eps0 = eps0
        super().__init__(
            f"Regime recusado: λh(δT²)⁻¹ = {ratio:.6g} > ε₀ = {eps0:.6g}"
        )
