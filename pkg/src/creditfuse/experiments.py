"""End-to-end experiment pipelines behind the command-line interface.

Each runner takes an ExperimentConfig, produces metric rows in the report
layout (Dataset, Method, five metrics), and never lets test rows reach a fit
stage. An optional ``fit_observer`` callback receives every dataset handed to
a fit stage, so leakage can be audited from the outside.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import gbdt
from .data import (
    Dataset,
    PreprocessConfig,
    SUBSET_ORDER,
    canonical_schema,
    fit_preprocessor,
    load_csv,
    load_ids,
    save_csv,
    split_subsets,
    train_test_split,
)
from .errors import ConfigError
from .fusion import FusionConfig, FusionModel, fit_fusion, predict_fusion
from .learners import (
    CartParams,
    FittedLearner,
    ForestParams,
    LearnerSpec,
    LinearParams,
    fit_learner,
    predict as predict_learner,
)
from .metrics import MetricsReport, build_report_table, evaluate, write_report_csv
from .serialize import load_model, save_model
from .synth import generate_synthetic

FitObserver = Callable[[str, Dataset], None]

#: Booster settings used by the comparison commands unless overridden.
DEFAULT_EXPERIMENT_BOOSTER = gbdt.BoosterParams(
    num_iterations=120,
    learning_rate=0.1,
    num_leaves=31,
    min_data_in_leaf=5,
    max_bin=255,
    feature_fraction=0.65,
    bagging_fraction=0.6,
    bagging_freq=1,
)

METHOD_LABELS = ("LR", "DT", "RF", "GBDT")


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str | None = None
    synthetic_rows: int = 5000
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    test_fraction: float = 0.2
    seed: int = 42
    threads: int = 1
    out_dir: str = "out"
    gbdt: gbdt.BoosterParams = field(default_factory=lambda: DEFAULT_EXPERIMENT_BOOSTER)
    linear: LinearParams = field(default_factory=LinearParams)
    cart: CartParams = field(default_factory=lambda: CartParams(max_depth=6, min_data_in_leaf=20))
    forest: ForestParams = field(
        default_factory=lambda: ForestParams(
            n_trees=50, max_depth=12, min_data_in_leaf=5, feature_fraction=0.6
        )
    )
    fusion_strategy: str = "stacking"
    fusion_n_folds: int = 5
    fusion_holdout: float = 0.2
    meta_kind: str = "linear_regression"

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.synthetic_rows < 10:
            raise ConfigError("synthetic_rows must be >= 10")


def method_specs(config: ExperimentConfig) -> list[tuple[str, LearnerSpec]]:
    return [
        ("LR", LearnerSpec("linear_regression", config.linear, config.seed)),
        ("DT", LearnerSpec("decision_tree", config.cart, config.seed)),
        ("RF", LearnerSpec("random_forest", config.forest, config.seed)),
        ("GBDT", LearnerSpec("gbdt", config.gbdt, config.seed)),
    ]


def prepare_data(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Load or generate, split, then preprocess with train-split statistics."""
    if config.data_path is not None:
        full = load_csv(config.data_path, canonical_schema())
    else:
        full = generate_synthetic(config.synthetic_rows, config.seed)
    train_raw, test_raw = train_test_split(full, config.test_fraction, config.seed)
    pre = fit_preprocessor(train_raw, config.preprocess)
    return pre.transform(train_raw), pre.transform(test_raw)


def _gbdt_spec(config: ExperimentConfig) -> LearnerSpec:
    return LearnerSpec("gbdt", config.gbdt, config.seed)


def _fusion_config(config: ExperimentConfig, strategy: str) -> FusionConfig:
    return FusionConfig(
        strategy=strategy,
        n_folds=config.fusion_n_folds,
        holdout_fraction=config.fusion_holdout,
        meta_learner=LearnerSpec(config.meta_kind, seed=config.seed),
        seed=config.seed,
    )


def _observe(observer: FitObserver | None, stage: str, d: Dataset) -> None:
    if observer is not None:
        observer(stage, d)


def run_compare_bases(
    config: ExperimentConfig, fit_observer: FitObserver | None = None
) -> list[tuple[str, str, MetricsReport]]:
    """Four learners on each of the four feature subsets: 16 metric rows."""
    train, test = prepare_data(config)
    train_parts = split_subsets(train)
    test_parts = split_subsets(test)
    rows: list[tuple[str, str, MetricsReport]] = []
    for subset in SUBSET_ORDER:
        for label, spec in method_specs(config):
            _observe(fit_observer, f"compare_bases:{subset}:{label}", train_parts[subset])
            model = fit_learner(train_parts[subset], spec)
            pred = predict_learner(model, test_parts[subset])
            rows.append((subset, label, evaluate(test_parts[subset].require_target(), pred)))
    return rows


def run_compare_fusion(
    config: ExperimentConfig, fit_observer: FitObserver | None = None
) -> list[tuple[str, str, MetricsReport]]:
    """The five-row fusion comparison: best subset model, full-data model,
    then voting, blending, and stacking over the four subset models."""
    train, test = prepare_data(config)
    y_test = test.require_target()
    learner = _gbdt_spec(config)

    train_parts = split_subsets(train)
    test_parts = split_subsets(test)
    subset_reports: dict[str, MetricsReport] = {}
    for subset in SUBSET_ORDER:
        _observe(fit_observer, f"compare_fusion:base:{subset}", train_parts[subset])
        model = fit_learner(train_parts[subset], learner)
        pred = predict_learner(model, test_parts[subset])
        subset_reports[subset] = evaluate(y_test, pred)
    best_subset = max(subset_reports, key=lambda s: subset_reports[s].r2)

    _observe(fit_observer, "compare_fusion:full", train)
    full_model = fit_learner(train, learner)
    full_report = evaluate(y_test, predict_learner(full_model, test))

    rows = [
        (f"subset:{best_subset}", "GBDT", subset_reports[best_subset]),
        ("full", "GBDT", full_report),
    ]
    for strategy in ("voting", "blending", "stacking"):
        _observe(fit_observer, f"compare_fusion:{strategy}", train)
        fused = fit_fusion(train, _fusion_config(config, strategy), learner, config.threads)
        pred = predict_fusion(fused, test)
        rows.append(("full", f"GBDT+{strategy.capitalize()}", evaluate(y_test, pred)))
    return rows


def write_compare_bases(rows, out_dir) -> list[str]:
    """One text table per subset plus a combined CSV; returns paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for subset in SUBSET_ORDER:
        subset_rows = [r for r in rows if r[0] == subset]
        path = os.path.join(out_dir, f"compare_bases_{subset}.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(build_report_table(subset_rows))
        written.append(path)
    csv_path = os.path.join(out_dir, "compare_bases.csv")
    write_report_csv(rows, csv_path)
    written.append(csv_path)
    return written


def write_compare_fusion(rows, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    txt_path = os.path.join(out_dir, "compare_fusion.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(build_report_table(rows))
    csv_path = os.path.join(out_dir, "compare_fusion.csv")
    write_report_csv(rows, csv_path)
    return [txt_path, csv_path]


def run_train(
    config: ExperimentConfig, fit_observer: FitObserver | None = None
) -> tuple[FusionModel, list[tuple[str, str, MetricsReport]]]:
    """Fit the configured fusion model; summary rows hold per-subset and
    fused metrics on the held-out split."""
    train, test = prepare_data(config)
    learner = _gbdt_spec(config)
    _observe(fit_observer, f"train:{config.fusion_strategy}", train)
    fused = fit_fusion(train, _fusion_config(config, config.fusion_strategy), learner,
                       config.threads)
    y_test = test.require_target()
    summary: list[tuple[str, str, MetricsReport]] = []
    test_parts = split_subsets(test)
    for subset in SUBSET_ORDER:
        pred = predict_learner(fused.base_models[subset], test_parts[subset])
        summary.append((subset, "base", evaluate(y_test, pred)))
    fused_pred = predict_fusion(fused, test)
    summary.append(("full", f"fusion:{config.fusion_strategy}", evaluate(y_test, fused_pred)))
    return fused, summary


def train_to_files(config: ExperimentConfig) -> tuple[str, str]:
    """Train and serialize the fusion model plus its summary table."""
    fused, summary = run_train(config)
    os.makedirs(config.out_dir, exist_ok=True)
    model_path = os.path.join(config.out_dir, "model.txt")
    save_model(fused, model_path)
    summary_path = os.path.join(config.out_dir, "train_summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(build_report_table(summary))
    return model_path, summary_path


def predict_to_file(model_path: str, data_path: str, out_path: str) -> int:
    """Score a CSV with a serialized model; writes (id, score) rows."""
    model = load_model(model_path)
    data = load_csv(data_path, canonical_schema(), require_target=False)
    pre = fit_preprocessor(data)  # batch statistics; inference-side imputation
    data = pre.transform(data)
    if isinstance(model, FusionModel):
        scores = predict_fusion(model, data)
    else:
        scores = predict_learner(model, data)
    ids = load_ids(data_path)
    if ids is None:
        ids = np.arange(1, data.n_rows + 1, dtype=np.float64)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("id,score\n")
        for i in range(data.n_rows):
            fh.write(f"{int(ids[i])},{repr(float(scores[i]))}\n")
    return data.n_rows


def generate_to_file(n_rows: int, seed: int, out_path: str) -> None:
    """Write a synthetic dataset as CSV with id and score columns."""
    d = generate_synthetic(n_rows, seed)
    ids = np.arange(1, n_rows + 1, dtype=np.float64)
    save_csv(d, out_path, ids=ids)
