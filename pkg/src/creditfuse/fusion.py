"""Second-level ensembling over the four subset-specific base models.

Averaging takes the plain mean of the four base predictions. Voting weights
them by inverse validation MAE. Blending trains a meta-learner on base
predictions over a held-out slice. Stacking trains it on out-of-fold
predictions so every meta-feature row comes from a model that never saw that
row, then refits the base models on the full training set for inference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import parallel_map
from .data import ColumnSpec, Dataset, Schema, SUBSET_ORDER, split_subsets, train_test_split
from .errors import ConfigError, SchemaError
from .learners import FittedLearner, LearnerSpec, fit_learner, predict as predict_learner
from .metrics import evaluate

STRATEGIES = ("averaging", "voting", "blending", "stacking")

_FOLD_STREAM = 0x0F0


@dataclass(frozen=True)
class FusionConfig:
    strategy: str
    n_folds: int = 5
    holdout_fraction: float = 0.2
    meta_learner: LearnerSpec = field(default_factory=lambda: LearnerSpec("linear_regression"))
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown fusion strategy {self.strategy!r}")
        if self.strategy == "stacking" and self.n_folds < 2:
            raise ConfigError("stacking needs n_folds >= 2")
        if self.strategy in ("blending", "voting") and not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must be in (0, 1)")


@dataclass(frozen=True)
class MetaFeatures:
    """Base-model prediction matrix (n_rows x 4) with row provenance."""

    matrix: np.ndarray
    provenance: str  # out_of_fold | holdout | test-time
    fold_of_row: np.ndarray | None = None


@dataclass(frozen=True)
class StackingAudit:
    """Fold bookkeeping proving the out-of-fold property."""

    fold_of_row: np.ndarray
    fit_rows_by_fold: tuple[np.ndarray, ...]


@dataclass
class FusionModel:
    base_models: dict[str, FittedLearner]
    strategy: str
    subset_assignment: dict[str, tuple[str, ...]]
    weights: np.ndarray | None = None
    meta_model: FittedLearner | None = None
    audit: StackingAudit | None = None

    def predict(self, test: Dataset) -> np.ndarray:
        return predict_fusion(self, test)


def _meta_schema() -> Schema:
    cols = tuple(ColumnSpec(f"pred_{s}", "numeric", "other") for s in SUBSET_ORDER)
    return Schema(cols, "score")


def _meta_dataset(matrix: np.ndarray, target: np.ndarray | None) -> Dataset:
    return Dataset(_meta_schema(), matrix, target)


def _subset_spec(learner: LearnerSpec, subset: str) -> LearnerSpec:
    # distinct per-subset seeds keep stochastic fit noise (bagging, feature
    # draws) independent across base models, which fusion then averages out
    return replace(learner, seed=learner.seed * 4 + SUBSET_ORDER.index(subset))


def fit_base_models(
    train: Dataset, learner: LearnerSpec, threads: int = 1
) -> dict[str, FittedLearner]:
    """One learner per feature subset, each fit on its columns only."""
    parts = split_subsets(train)
    fitted = parallel_map(
        lambda s: fit_learner(parts[s], _subset_spec(learner, s)), SUBSET_ORDER, threads
    )
    return dict(zip(SUBSET_ORDER, fitted))


def _subset_assignment(models: dict[str, FittedLearner]) -> dict[str, tuple[str, ...]]:
    return {s: models[s].feature_names for s in SUBSET_ORDER}


def base_prediction_matrix(models: dict[str, FittedLearner], data: Dataset) -> np.ndarray:
    """(n_rows x 4) base predictions in canonical subset order."""
    out = np.empty((data.n_rows, len(SUBSET_ORDER)), dtype=np.float64)
    for j, subset in enumerate(SUBSET_ORDER):
        cols = data.select_columns(models[subset].feature_names)
        out[:, j] = predict_learner(models[subset], cols)
    return out


def fuse_averaging(models: dict[str, FittedLearner], test: Dataset) -> np.ndarray:
    """Unweighted mean of the four base predictions."""
    return base_prediction_matrix(models, test).mean(axis=1)


def fit_voting_weights(models: dict[str, FittedLearner], validation: Dataset) -> np.ndarray:
    """Inverse-validation-MAE weights, normalized to sum 1.

    A model with zero validation MAE is perfect and takes all the weight
    (split equally if several are perfect).
    """
    y = validation.require_target()
    preds = base_prediction_matrix(models, validation)
    maes = np.array([evaluate(y, preds[:, j]).mae for j in range(preds.shape[1])])
    perfect = maes == 0.0
    if perfect.any():
        return perfect.astype(np.float64) / perfect.sum()
    inv = 1.0 / maes
    return inv / inv.sum()


def fit_averaging(train: Dataset, config: FusionConfig, learner: LearnerSpec,
                  threads: int = 1) -> FusionModel:
    models = fit_base_models(train, learner, threads)
    return FusionModel(models, "averaging", _subset_assignment(models))


def fit_voting(train: Dataset, config: FusionConfig, learner: LearnerSpec,
               threads: int = 1) -> FusionModel:
    """Bases fit on a sub-split; weights from the disjoint validation slice."""
    fit_part, validation = train_test_split(train, config.holdout_fraction, config.seed)
    models = fit_base_models(fit_part, learner, threads)
    weights = fit_voting_weights(models, validation)
    return FusionModel(models, "voting", _subset_assignment(models), weights=weights)


def fit_blending(train: Dataset, config: FusionConfig, learner: LearnerSpec,
                 threads: int = 1) -> FusionModel:
    """Meta-learner on holdout predictions; bases keep their sub-split fit."""
    fit_part, holdout = train_test_split(train, config.holdout_fraction, config.seed)
    if holdout.n_rows < 10:
        raise ConfigError(
            f"blending holdout has only {holdout.n_rows} rows; need at least 10"
        )
    models = fit_base_models(fit_part, learner, threads)
    meta = MetaFeatures(base_prediction_matrix(models, holdout), "holdout")
    meta_model = fit_learner(_meta_dataset(meta.matrix, holdout.require_target()),
                             config.meta_learner)
    return FusionModel(models, "blending", _subset_assignment(models), meta_model=meta_model)


def stacking_folds(n_rows: int, n_folds: int, seed: int) -> np.ndarray:
    """Deterministic fold id per row: seeded shuffle dealt round-robin."""
    perm = np.random.default_rng(np.random.SeedSequence([seed, _FOLD_STREAM])).permutation(n_rows)
    fold_of_row = np.empty(n_rows, dtype=np.int64)
    fold_of_row[perm] = np.arange(n_rows) % n_folds
    return fold_of_row


def fit_stacking(train: Dataset, config: FusionConfig, learner: LearnerSpec,
                 threads: int = 1) -> FusionModel:
    """Out-of-fold meta-features; bases refit on all rows for inference."""
    n = train.n_rows
    if config.n_folds > n:
        raise ConfigError(f"n_folds {config.n_folds} exceeds {n} training rows")
    fold_of_row = stacking_folds(n, config.n_folds, config.seed)
    parts = split_subsets(train)
    oof = np.zeros((n, len(SUBSET_ORDER)), dtype=np.float64)
    fit_rows_by_fold: list[np.ndarray] = []

    def run_fold(f: int) -> tuple[np.ndarray, np.ndarray]:
        fit_rows = np.flatnonzero(fold_of_row != f)
        holdout_rows = np.flatnonzero(fold_of_row == f)
        block = np.empty((len(holdout_rows), len(SUBSET_ORDER)), dtype=np.float64)
        for j, subset in enumerate(SUBSET_ORDER):
            model = fit_learner(parts[subset].take_rows(fit_rows), _subset_spec(learner, subset))
            block[:, j] = predict_learner(model, parts[subset].take_rows(holdout_rows))
        return fit_rows, block

    results = parallel_map(run_fold, range(config.n_folds), threads)
    for f, (fit_rows, block) in enumerate(results):
        fit_rows_by_fold.append(fit_rows)
        oof[fold_of_row == f] = block

    meta = MetaFeatures(oof, "out_of_fold", fold_of_row)
    meta_model = fit_learner(_meta_dataset(meta.matrix, train.require_target()),
                             config.meta_learner)
    models = fit_base_models(train, learner, threads)
    audit = StackingAudit(fold_of_row, tuple(fit_rows_by_fold))
    return FusionModel(models, "stacking", _subset_assignment(models),
                       meta_model=meta_model, audit=audit)


_FITTERS = {
    "averaging": fit_averaging,
    "voting": fit_voting,
    "blending": fit_blending,
    "stacking": fit_stacking,
}


def fit_fusion(train: Dataset, config: FusionConfig, learner: LearnerSpec,
               threads: int = 1) -> FusionModel:
    return _FITTERS[config.strategy](train, config, learner, threads)


def predict_fusion(m: FusionModel, test: Dataset) -> np.ndarray:
    """Combine the four base predictions per the fitted strategy."""
    needed = [n for names in m.subset_assignment.values() for n in names]
    missing = [n for n in needed if n not in test.schema.names]
    if missing:
        raise SchemaError(f"test data is missing columns {missing}")
    matrix = base_prediction_matrix(m.base_models, test)
    if m.strategy == "averaging":
        return matrix.mean(axis=1)
    if m.strategy == "voting":
        return matrix @ m.weights
    return predict_learner(m.meta_model, _meta_dataset(matrix, None))
