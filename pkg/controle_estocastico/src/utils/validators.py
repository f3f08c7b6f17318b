import math
from typing import Sequence


def is_positive_int(value: object, minimum: int = 1) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= minimum


def is_positive_real(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) \
        and math.isfinite(value) and value > 0


def is_open_subinterval(interval: Sequence[float], lower: float = 0.0, upper: float = 1.0) -> bool:
    if len(interval) != 2:
        return False
    a, b = float(interval[0]), float(interval[1])
    return lower <= a < b <= upper


def is_strictly_inside(inner: Sequence[float], outer: Sequence[float]) -> bool:
    # closure(inner) ⊂ outer, outer aberto
    return outer[0] < inner[0] and inner[1] < outer[1]
