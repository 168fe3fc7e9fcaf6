"""Operator feature schema, dataset container, CSV ingestion and preprocessing.

The canonical schema covers the 28 predictive fields of the operator user
record (everything except ``id`` and the ``score`` target), partitioned into
the four feature subsets used throughout the pipeline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import ImputationError, ParseError, SchemaError

COLUMN_KINDS = ("numeric", "count", "flag")

SUBSET_CONSUMER = "consumer_capacity"
SUBSET_LOCATION = "location_trajectory"
SUBSET_APP = "app_behavior"
SUBSET_OTHER = "other"

#: Fixed subset ordering used for meta-feature columns and report rows.
SUBSET_ORDER = (SUBSET_CONSUMER, SUBSET_LOCATION, SUBSET_APP, SUBSET_OTHER)

ID_COLUMN = "id"


@dataclass(frozen=True)
class ColumnSpec:
    """One predictive column: its name, value kind, and feature subset."""

    name: str
    kind: str
    subset: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.subset not in SUBSET_ORDER:
            raise SchemaError(f"column {self.name!r}: unknown subset {self.subset!r}")


@dataclass(frozen=True)
class Schema:
    """Ordered predictive columns plus the name of the regression target."""

    columns: tuple[ColumnSpec, ...]
    target_name: str = "score"

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        if self.target_name in names:
            raise SchemaError(f"target {self.target_name!r} is also a predictor")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"no column named {name!r}")

    def column(self, name: str) -> ColumnSpec:
        return self.columns[self.index(name)]

    def subset_names(self, subset: str) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.subset == subset)

    def select(self, names: Iterable[str]) -> "Schema":
        return Schema(tuple(self.column(n) for n in names), self.target_name)


class Dataset:
    """Column-major numeric matrix with an optional target vector.

    ``values`` is (n_rows, n_cols) float64 in Fortran order so per-column
    slices are contiguous. ``target`` is None for score-free inference data.
    """

    __slots__ = ("schema", "values", "target")

    def __init__(self, schema: Schema, values: np.ndarray, target: np.ndarray | None):
        values = np.asfortranarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(schema.columns):
            raise SchemaError(
                f"values shape {values.shape} does not match {len(schema.columns)} columns"
            )
        if target is not None:
            target = np.ascontiguousarray(target, dtype=np.float64)
            if target.shape != (values.shape[0],):
                raise SchemaError(
                    f"target length {target.shape} does not match {values.shape[0]} rows"
                )
        self.schema = schema
        self.values = values
        self.target = target

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index(name)]

    def require_target(self) -> np.ndarray:
        if self.target is None:
            raise SchemaError("dataset has no target column")
        return self.target

    def take_rows(self, idx: np.ndarray) -> "Dataset":
        t = None if self.target is None else self.target[idx]
        return Dataset(self.schema, self.values[np.asarray(idx)], t)

    def select_columns(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        cols = [self.schema.index(n) for n in names]
        return Dataset(self.schema.select(names), self.values[:, cols], self.target)


# --- canonical operator schema -------------------------------------------

_CANONICAL_FIELDS = (
    # consumer capacity
    ("top_up_month_diff", "count", SUBSET_CONSUMER),
    ("top_up_amount", "numeric", SUBSET_CONSUMER),
    ("recent_6month_avg_use", "numeric", SUBSET_CONSUMER),
    ("total_account_fee", "numeric", SUBSET_CONSUMER),
    ("curr_month_balance", "numeric", SUBSET_CONSUMER),
    ("cost_sensitivity", "numeric", SUBSET_CONSUMER),
    ("curr_overdue_flag", "flag", SUBSET_CONSUMER),
    # location trajectory
    ("recent_3month_shopping_count", "count", SUBSET_LOCATION),
    ("freq_shopping_flag", "flag", SUBSET_LOCATION),
    ("wanda_flag", "flag", SUBSET_LOCATION),
    ("sam_flag", "flag", SUBSET_LOCATION),
    ("movie_flag", "flag", SUBSET_LOCATION),
    ("tour_flag", "flag", SUBSET_LOCATION),
    ("sport_flag", "flag", SUBSET_LOCATION),
    # application behavior preference
    ("online_shopping_count", "count", SUBSET_APP),
    ("express_count", "count", SUBSET_APP),
    ("finance_app_count", "count", SUBSET_APP),
    ("video_app_count", "count", SUBSET_APP),
    ("flight_count", "count", SUBSET_APP),
    ("train_count", "count", SUBSET_APP),
    ("tour_app_count", "count", SUBSET_APP),
    # other
    ("age", "numeric", SUBSET_OTHER),
    ("net_age_till_now", "numeric", SUBSET_OTHER),
    ("connect_num", "count", SUBSET_OTHER),
    ("true_name_flag", "flag", SUBSET_OTHER),
    ("uni_student_flag", "flag", SUBSET_OTHER),
    ("blk_list_flag", "flag", SUBSET_OTHER),
    ("4g_unhealth_flag", "flag", SUBSET_OTHER),
)


def canonical_schema() -> Schema:
    """The 28-predictor operator schema with target ``score``."""
    return Schema(tuple(ColumnSpec(*f) for f in _CANONICAL_FIELDS), "score")


# --- schema files ----------------------------------------------------------
#
# Grammar (one entry per line, '#' starts a comment):
#   target <name>
#   column <name> <kind> <subset>
# Kinds: numeric | count | flag.  Subsets: the four canonical tags.


def parse_schema_text(text: str) -> Schema:
    target = None
    columns: list[ColumnSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "target" and len(parts) == 2:
            target = parts[1]
        elif parts[0] == "column" and len(parts) == 4:
            columns.append(ColumnSpec(parts[1], parts[2], parts[3]))
        else:
            raise ParseError(f"schema line {lineno}: cannot parse {raw!r}")
    if target is None:
        raise ParseError("schema file declares no target")
    return Schema(tuple(columns), target)


def load_schema_file(path) -> Schema:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_schema_text(fh.read())


def format_schema_text(schema: Schema) -> str:
    lines = [f"target {schema.target_name}"]
    lines += [f"column {c.name} {c.kind} {c.subset}" for c in schema.columns]
    return "\n".join(lines) + "\n"


# --- CSV ingestion ----------------------------------------------------------


def load_csv(path, schema: Schema, require_target: bool = True) -> Dataset:
    """Read a UTF-8 comma-separated file into a Dataset.

    The header must contain every schema column (any order). An ``id``
    column is tolerated and ignored. Empty cells become NaN pending
    preprocessing. Returns raw values; run ``preprocess`` afterwards.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        known = set(schema.names) | {schema.target_name, ID_COLUMN}
        unknown = [h for h in header if h not in known]
        if unknown:
            raise SchemaError(f"{path}: unknown columns {unknown}")
        missing = [n for n in schema.names if n not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        has_target = schema.target_name in header
        if require_target and not has_target:
            raise SchemaError(f"{path}: missing target column {schema.target_name!r}")

        col_pos = {name: header.index(name) for name in schema.names}
        target_pos = header.index(schema.target_name) if has_target else None

        rows: list[list[float]] = []
        targets: list[float] = []
        for row_num, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path} row {row_num}: expected {len(header)} cells, got {len(row)}")
            rows.append([_parse_cell(row[col_pos[n]], path, row_num, n) for n in schema.names])
            if target_pos is not None:
                targets.append(_parse_cell(row[target_pos], path, row_num, schema.target_name))

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema.names))
    target = np.array(targets, dtype=np.float64) if has_target else None
    return Dataset(schema, values, target)


def _parse_cell(cell: str, path, row_num: int, col_name: str) -> float:
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"{path} row {row_num}, column {col_name!r}: cannot parse {cell!r} as a number"
        ) from None


def format_number(v: float) -> str:
    """Shortest exact decimal form; integral values render without a fraction."""
    if math.isnan(v):
        return ""
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def save_csv(dataset: Dataset, path, ids: np.ndarray | None = None) -> None:
    """Write a Dataset as CSV; prepends ``id`` when given, appends the target."""
    header: list[str] = []
    if ids is not None:
        header.append(ID_COLUMN)
    header += list(dataset.schema.names)
    if dataset.target is not None:
        header.append(dataset.schema.target_name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row: list[str] = []
            if ids is not None:
                row.append(format_number(float(ids[i])))
            row += [format_number(v) for v in dataset.values[i]]
            if dataset.target is not None:
                row.append(format_number(dataset.target[i]))
            writer.writerow(row)


def load_ids(path) -> np.ndarray | None:
    """Return the ``id`` column of a CSV file, or None if it has none."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if ID_COLUMN not in header:
            return None
        pos = header.index(ID_COLUMN)
        out = [float(row[pos]) for row in reader if row and any(c.strip() for c in row)]
    return np.array(out, dtype=np.float64)


# --- preprocessing ----------------------------------------------------------


@dataclass(frozen=True)
class PreprocessConfig:
    clip_outliers: bool = False
    clip_low: float = 0.01
    clip_high: float = 0.99


@dataclass(frozen=True)
class Preprocessor:
    """Imputation and clipping statistics fitted on a training split.

    Applying a fitted Preprocessor to held-out data never reads the held-out
    values: medians and percentile bounds all come from the fit-time split.
    """

    schema: Schema
    config: PreprocessConfig
    medians: Mapping[str, float] = field(default_factory=dict)
    clip_bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def transform(self, d: Dataset) -> Dataset:
        if d.schema.names != self.schema.names:
            raise SchemaError("preprocessor was fitted on a different schema")
        values = np.array(d.values, dtype=np.float64, order="F")
        for j, col in enumerate(d.schema.columns):
            x = values[:, j]
            if col.kind == "flag":
                x = np.where(np.isnan(x), self.medians[col.name], x)
                x = (x != 0.0).astype(np.float64)
            else:
                x = np.where(np.isnan(x), self.medians[col.name], x)
                if col.kind == "numeric" and col.name in self.clip_bounds:
                    lo, hi = self.clip_bounds[col.name]
                    x = np.clip(x, lo, hi)
            values[:, j] = x
        target = d.target
        if target is not None and np.isnan(target).any():
            raise ImputationError("target column contains missing values")
        return Dataset(d.schema, values, target)


def fit_preprocessor(train: Dataset, config: PreprocessConfig | None = None) -> Preprocessor:
    config = config or PreprocessConfig()
    medians: dict[str, float] = {}
    clip_bounds: dict[str, tuple[float, float]] = {}
    for j, col in enumerate(train.schema.columns):
        x = train.values[:, j]
        observed = x[~np.isnan(x)]
        if observed.size == 0:
            raise ImputationError(f"column {col.name!r} is entirely missing; cannot impute")
        if col.kind == "flag":
            observed = (observed != 0.0).astype(np.float64)
        medians[col.name] = float(np.median(observed))
        if config.clip_outliers and col.kind == "numeric":
            lo = float(np.quantile(observed, config.clip_low))
            hi = float(np.quantile(observed, config.clip_high))
            clip_bounds[col.name] = (lo, hi)
    return Preprocessor(train.schema, config, medians, clip_bounds)


def preprocess(d: Dataset, config: PreprocessConfig | None = None) -> Dataset:
    """Fit imputation/clipping statistics on ``d`` itself and apply them."""
    return fit_preprocessor(d, config).transform(d)


# --- partitioning -----------------------------------------------------------


def split_subsets(d: Dataset) -> dict[str, Dataset]:
    """Partition columns into the four feature subsets; target is shared."""
    out: dict[str, Dataset] = {}
    for subset in SUBSET_ORDER:
        names = d.schema.subset_names(subset)
        out[subset] = d.select_columns(names)
    return out


def train_test_split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint row split; train gets ceil(n * (1 - fraction)) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = d.n_rows
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    n_train = math.ceil(n * (1.0 - test_fraction))
    perm = np.random.default_rng(np.random.SeedSequence([seed, 0x5B117])).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return d.take_rows(train_idx), d.take_rows(test_idx)
