"""Command-line entry points: generate, compare-bases, compare-fusion,
train, predict.

Configuration is a flat ``key = value`` text file (``#`` comments allowed);
command-line flags override file values. Every command is deterministic for a
fixed config and seed, and exits nonzero on any error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .data import PreprocessConfig
from .errors import ConfigError, CreditFuseError
from .experiments import (
    DEFAULT_EXPERIMENT_BOOSTER,
    ExperimentConfig,
    generate_to_file,
    predict_to_file,
    run_compare_bases,
    run_compare_fusion,
    train_to_files,
    write_compare_bases,
    write_compare_fusion,
)
from .gbdt import BoosterParams
from .learners import CartParams, ForestParams, LinearParams

_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key/value document: one ``key = value`` pair per line."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _get(kv: dict[str, str], key: str, cast, default):
    if key not in kv:
        return default
    raw = kv.pop(key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key}: cannot parse {raw!r}") from exc


def _bool(raw: str) -> bool:
    if raw.lower() not in _BOOL_VALUES:
        raise ValueError(raw)
    return _BOOL_VALUES[raw.lower()]


def _depth(raw: str) -> int | None:
    return None if raw.lower() in ("none", "unlimited") else int(raw)


def config_from_mapping(kv: dict[str, str]) -> ExperimentConfig:
    kv = dict(kv)
    g = DEFAULT_EXPERIMENT_BOOSTER
    booster = BoosterParams(
        num_iterations=_get(kv, "gbdt.num_iterations", int, g.num_iterations),
        learning_rate=_get(kv, "gbdt.learning_rate", float, g.learning_rate),
        num_leaves=_get(kv, "gbdt.num_leaves", int, g.num_leaves),
        max_depth=_get(kv, "gbdt.max_depth", _depth, g.max_depth),
        min_data_in_leaf=_get(kv, "gbdt.min_data_in_leaf", int, g.min_data_in_leaf),
        max_bin=_get(kv, "gbdt.max_bin", int, g.max_bin),
        feature_fraction=_get(kv, "gbdt.feature_fraction", float, g.feature_fraction),
        bagging_fraction=_get(kv, "gbdt.bagging_fraction", float, g.bagging_fraction),
        bagging_freq=_get(kv, "gbdt.bagging_freq", int, g.bagging_freq),
        lambda_l2=_get(kv, "gbdt.lambda_l2", float, g.lambda_l2),
        min_gain_to_split=_get(kv, "gbdt.min_gain_to_split", float, g.min_gain_to_split),
    )
    config = ExperimentConfig(
        data_path=_get(kv, "data.path", str, None),
        synthetic_rows=_get(kv, "data.synthetic.rows", int, 5000),
        preprocess=PreprocessConfig(
            clip_outliers=_get(kv, "preprocess.clip", _bool, False),
            clip_low=_get(kv, "preprocess.clip_low", float, 0.01),
            clip_high=_get(kv, "preprocess.clip_high", float, 0.99),
        ),
        test_fraction=_get(kv, "test_fraction", float, 0.2),
        seed=_get(kv, "seed", int, 42),
        threads=_get(kv, "threads", int, 1),
        out_dir=_get(kv, "out_dir", str, "out"),
        gbdt=booster,
        linear=LinearParams(ridge_lambda=_get(kv, "linear.ridge", float, 1e-6)),
        cart=CartParams(
            max_depth=_get(kv, "cart.max_depth", _depth, 6),
            min_data_in_leaf=_get(kv, "cart.min_data_in_leaf", int, 20),
        ),
        forest=ForestParams(
            n_trees=_get(kv, "forest.n_trees", int, 50),
            max_depth=_get(kv, "forest.max_depth", _depth, 12),
            min_data_in_leaf=_get(kv, "forest.min_data_in_leaf", int, 5),
            feature_fraction=_get(kv, "forest.feature_fraction", float, 0.6),
            bootstrap=_get(kv, "forest.bootstrap", _bool, True),
        ),
        fusion_strategy=_get(kv, "fusion.strategy", str, "stacking"),
        fusion_n_folds=_get(kv, "fusion.n_folds", int, 5),
        fusion_holdout=_get(kv, "fusion.holdout_fraction", float, 0.2),
        meta_kind=_get(kv, "fusion.meta", str, "linear_regression"),
    )
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return config


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return config_from_mapping({})
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_mapping(parse_config_text(fh.read()))


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        updates["threads"] = args.threads
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = args.out
    return replace(config, **updates) if updates else config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="creditfuse",
        description="Credit-score regression pipeline: synthetic data, base models, fusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the global seed")
        p.add_argument("--threads", type=int, default=None, help="cap worker threads")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-file", required=True)

    p = sub.add_parser("compare-bases", help="four learners on each feature subset")
    common(p)

    p = sub.add_parser("compare-fusion", help="fusion strategies against plain boosting")
    common(p)

    p = sub.add_parser("train", help="train and serialize one fusion model")
    common(p)

    p = sub.add_parser("predict", help="score a CSV with a serialized model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-file", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            generate_to_file(args.rows, args.seed, args.out_file)
            print(f"wrote {args.rows} rows to {args.out_file}")
        elif args.command == "compare-bases":
            config = _apply_overrides(load_config(args.config), args)
            rows = run_compare_bases(config)
            for path in write_compare_bases(rows, config.out_dir):
                print(f"wrote {path}")
        elif args.command == "compare-fusion":
            config = _apply_overrides(load_config(args.config), args)
            rows = run_compare_fusion(config)
            for path in write_compare_fusion(rows, config.out_dir):
                print(f"wrote {path}")
        elif args.command == "train":
            config = _apply_overrides(load_config(args.config), args)
            model_path, summary_path = train_to_files(config)
            with open(summary_path, "r", encoding="utf-8") as fh:
                print(fh.read(), end="")
            print(f"wrote {model_path}")
        elif args.command == "predict":
            n = predict_to_file(args.model, args.data, args.out_file)
            print(f"scored {n} rows into {args.out_file}")
    except CreditFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
