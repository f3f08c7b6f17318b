import csv
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import InvalidArgumentError

SWEEP_COLUMNS = (
    "h", "delta", "lambda", "mu", "N", "depth", "eps", "obs_C",
    "term_ratio", "cost_ratio", "cg_iters", "closure_err", "skipped", "reason",
)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def emit_csv(rows: Iterable[Mapping[str, Any]], path: str | Path,
             columns: tuple[str, ...] = SWEEP_COLUMNS) -> Path:
    """Grava as linhas em UTF-8 com terminador LF; floats em repr (menor decimal exato)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            missing = set(columns) - set(row)
            if missing:
                raise InvalidArgumentError(f"Linha sem as colunas: {', '.join(sorted(missing))}")
            writer.writerow({name: format_cell(row[name]) for name in columns})
    return path
