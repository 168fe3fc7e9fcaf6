"""Regression metrics and the tabular report used by the comparison commands."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Targets with |y| at or below this are excluded from MAPE instead of
#: dividing by near-zero; the exclusion count is reported.
MAPE_ZERO_TOLERANCE = 1e-8

TABLE_COLUMNS = ("Dataset", "Method", "MAE", "MAPE", "MSE", "RMSE", "R2")


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mape: float
    mse: float
    rmse: float
    r2: float
    n: int
    n_excluded_mape: int

    @property
    def r2_defined(self) -> bool:
        return math.isfinite(self.r2)

    @property
    def mape_defined(self) -> bool:
        return math.isfinite(self.mape)


def evaluate(target: np.ndarray, prediction: np.ndarray) -> MetricsReport:
    """All five metrics in one pass.

    MAPE is a plain ratio (not percent) over rows with non-negligible
    targets. R2 for a constant target is 1 on a perfect fit and otherwise a
    -inf sentinel, exposed as undefined via ``r2_defined``.
    """
    y = np.asarray(target, dtype=np.float64)
    p = np.asarray(prediction, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: {y.shape} vs {p.shape}")
    if len(y) == 0:
        raise ValueError("cannot evaluate empty vectors")
    err = p - y
    abs_err = np.abs(err)
    mae = float(abs_err.mean())
    mse = float(np.mean(err**2))
    rmse = math.sqrt(mse)
    include = np.abs(y) > MAPE_ZERO_TOLERANCE
    n_excluded = int((~include).sum())
    mape = float((abs_err[include] / np.abs(y[include])).mean()) if include.any() else math.nan
    sse = float(np.sum(err**2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse == 0 else -math.inf
    return MetricsReport(mae, mape, mse, rmse, r2, len(y), n_excluded)


def format_metric(x: float) -> str:
    return f"{x:.4f}" if math.isfinite(x) else "n/a"


def _report_cells(label: str, method: str, r: MetricsReport) -> list[str]:
    return [
        label,
        method,
        format_metric(r.mae),
        format_metric(r.mape),
        format_metric(r.mse),
        format_metric(r.rmse),
        format_metric(r.r2),
    ]


def build_report_table(rows: list[tuple[str, str, MetricsReport]]) -> str:
    """Aligned plain-text table: Dataset, Method, MAE, MAPE, MSE, RMSE, R2."""
    lines = [list(TABLE_COLUMNS)] + [_report_cells(*row) for row in rows]
    widths = [max(len(line[i]) for line in lines) for i in range(len(TABLE_COLUMNS))]
    rendered = []
    for line in lines:
        rendered.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return "\n".join(rendered) + "\n"


def write_report_csv(rows: list[tuple[str, str, MetricsReport]], path) -> None:
    """Machine-readable twin of the text table, same columns and rendering."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TABLE_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_report_cells(*row)) + "\n")
