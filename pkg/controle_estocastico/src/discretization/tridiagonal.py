"""
Algoritmo de Thomas vetorizado sobre um eixo de lote.

Resolve A x = d com A tridiagonal (subdiagonal `lower`, diagonal `diag`,
superdiagonal `upper`). Os coeficientes e o lado direito podem ter eixos
iniciais de lote (nós da árvore); o laço é só sobre o eixo espacial.
Sem pivotamento: a matriz deve ser diagonalmente dominante.
"""
import numpy as np

from ..utils.errors import NumericalError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)


class ZeroPivotError(NumericalError):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"Pivô nulo na linha {index}")


def thomas_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[-1]
    batch = rhs.shape[:-1]
    diag = np.broadcast_to(np.asarray(diag, dtype=float), batch + (n,))
    lower = np.broadcast_to(np.asarray(lower, dtype=float), batch + (n - 1,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), batch + (n - 1,))
    tiny = np.finfo(float).eps * max(float(np.max(np.abs(diag), initial=0.0)), 1.0)

    w = np.empty(batch + (max(n - 1, 0),))
    g = np.empty(batch + (n,))
    pivot = diag[..., 0]
    if np.any(np.abs(pivot) <= tiny):
        raise ZeroPivotError(0)
    if n > 1:
        w[..., 0] = upper[..., 0] / pivot
    g[..., 0] = rhs[..., 0] / pivot
    for i in range(1, n):
        pivot = diag[..., i] - lower[..., i - 1] * w[..., i - 1]
        if np.any(np.abs(pivot) <= tiny):
            raise ZeroPivotError(i)
        if i < n - 1:
            w[..., i] = upper[..., i] / pivot
        g[..., i] = (rhs[..., i] - lower[..., i - 1] * g[..., i - 1]) / pivot

    x = np.empty_like(g)
    x[..., n - 1] = g[..., n - 1]
    for i in range(n - 2, -1, -1):
        x[..., i] = g[..., i] - w[..., i] * x[..., i + 1]
    return x


def tridiagonal_matvec(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.asarray(diag, dtype=float) * x
    out[..., 1:] += np.asarray(lower, dtype=float) * x[..., :-1]
    out[..., :-1] += np.asarray(upper, dtype=float) * x[..., 1:]
    return out
