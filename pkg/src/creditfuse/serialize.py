"""Self-describing text serialization for fitted models.

Every float is written with ``repr``, which round-trips IEEE doubles exactly,
so save -> load -> predict is bit-identical to the in-memory model. The
format is line-oriented: ``begin <kind>`` / ``end <kind>`` blocks containing
``key value...`` lines; nested models (fusion bases, the meta-learner) are
nested blocks.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .binning import BinMapper
from .data import SUBSET_ORDER
from .errors import ModelFormatError
from .fusion import FusionModel
from .gbdt import BoostedModel, BoosterParams, Tree
from .learners import (
    CartModel,
    CartParams,
    FittedLearner,
    ForestModel,
    ForestParams,
    LearnerSpec,
    LinearModel,
    LinearParams,
)

MAGIC = "creditfuse-model 1"


def _f(x: float) -> str:
    return repr(float(x))


def _vector(xs) -> str:
    return " ".join(_f(x) for x in xs)


def _maybe_int(x: int | None) -> str:
    return "none" if x is None else str(int(x))


def _parse_maybe_int(tok: str) -> int | None:
    return None if tok == "none" else int(tok)


def _write_tree(lines: list[str], tree: Tree) -> None:
    lines.append(f"tree {tree.n_nodes}")
    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            lines.append(f"node {i} leaf {_f(tree.value[i])} {tree.count[i]}")
        else:
            lines.append(
                f"node {i} split {tree.feature[i]} {tree.bin_threshold[i]} "
                f"{_f(tree.threshold[i])} {tree.left[i]} {tree.right[i]} {tree.count[i]}"
            )


def _write_features(lines: list[str], names: tuple[str, ...]) -> None:
    lines.append("features " + " ".join([str(len(names)), *names]))


def _write_gbdt(lines: list[str], model: BoostedModel) -> None:
    lines.append("begin gbdt")
    _write_features(lines, model.feature_names)
    p = model.params
    lines.append(f"param num_iterations {p.num_iterations}")
    lines.append(f"param learning_rate {_f(p.learning_rate)}")
    lines.append(f"param num_leaves {p.num_leaves}")
    lines.append(f"param max_depth {_maybe_int(p.max_depth)}")
    lines.append(f"param min_data_in_leaf {p.min_data_in_leaf}")
    lines.append(f"param max_bin {p.max_bin}")
    lines.append(f"param feature_fraction {_f(p.feature_fraction)}")
    lines.append(f"param bagging_fraction {_f(p.bagging_fraction)}")
    lines.append(f"param bagging_freq {p.bagging_freq}")
    lines.append(f"param lambda_l2 {_f(p.lambda_l2)}")
    lines.append(f"param min_gain_to_split {_f(p.min_gain_to_split)}")
    lines.append(f"param objective {p.objective}")
    lines.append(f"param seed {p.seed}")
    lines.append(f"base_score {_f(model.base_score)}")
    lines.append(f"mapper {model.mapper.n_features} {model.mapper.max_bin}")
    for j, edges in enumerate(model.mapper.edges):
        lines.append(f"edges {j} {len(edges)} {_vector(edges)}".rstrip())
    lines.append(f"trees {len(model.trees)}")
    for tree in model.trees:
        _write_tree(lines, tree)
    lines.append("end gbdt")


def _write_linear(lines: list[str], model: LinearModel, ridge: float) -> None:
    lines.append("begin linear")
    _write_features(lines, model.feature_names)
    lines.append(f"ridge {_f(ridge)}")
    lines.append(f"intercept {_f(model.intercept)}")
    lines.append(f"coef {len(model.coef)} {_vector(model.coef)}")
    lines.append(f"mean {len(model.mean)} {_vector(model.mean)}")
    lines.append(f"scale {len(model.scale)} {_vector(model.scale)}")
    lines.append("end linear")


def _write_cart(lines: list[str], model: CartModel, params: CartParams) -> None:
    lines.append("begin cart")
    _write_features(lines, model.feature_names)
    lines.append(f"param max_depth {_maybe_int(params.max_depth)}")
    lines.append(f"param min_data_in_leaf {params.min_data_in_leaf}")
    _write_tree(lines, model.tree)
    lines.append("end cart")


def _write_forest(lines: list[str], model: ForestModel, params: ForestParams, seed: int) -> None:
    lines.append("begin forest")
    _write_features(lines, model.feature_names)
    lines.append(f"param n_trees {params.n_trees}")
    lines.append(f"param max_depth {_maybe_int(params.max_depth)}")
    lines.append(f"param min_data_in_leaf {params.min_data_in_leaf}")
    lines.append(f"param feature_fraction {_f(params.feature_fraction)}")
    lines.append(f"param bootstrap {int(params.bootstrap)}")
    lines.append(f"param seed {seed}")
    for tree in model.trees:
        _write_tree(lines, tree)
    lines.append("end forest")


def _write_learner(lines: list[str], learner: FittedLearner) -> None:
    payload = learner.payload
    if isinstance(payload, BoostedModel):
        _write_gbdt(lines, payload)
    elif isinstance(payload, LinearModel):
        _write_linear(lines, payload, learner.spec.params.ridge_lambda)
    elif isinstance(payload, CartModel):
        _write_cart(lines, payload, learner.spec.params)
    elif isinstance(payload, ForestModel):
        _write_forest(lines, payload, learner.spec.params, learner.spec.seed)
    else:
        raise ModelFormatError(f"cannot serialize payload {type(payload).__name__}")


def _write_fusion(lines: list[str], model: FusionModel) -> None:
    lines.append("begin fusion")
    lines.append(f"strategy {model.strategy}")
    for subset in SUBSET_ORDER:
        names = model.subset_assignment[subset]
        lines.append(f"subset {subset} " + " ".join([str(len(names)), *names]))
    if model.weights is not None:
        lines.append(f"weights {len(model.weights)} {_vector(model.weights)}")
    for subset in SUBSET_ORDER:
        lines.append(f"begin base {subset}")
        _write_learner(lines, model.base_models[subset])
        lines.append("end base")
    if model.meta_model is not None:
        lines.append("begin meta")
        _write_learner(lines, model.meta_model)
        lines.append("end meta")
    lines.append("end fusion")


def dumps(model: FittedLearner | FusionModel | BoostedModel) -> str:
    lines = [MAGIC]
    if isinstance(model, FusionModel):
        _write_fusion(lines, model)
    elif isinstance(model, FittedLearner):
        _write_learner(lines, model)
    elif isinstance(model, BoostedModel):
        _write_gbdt(lines, model)
    else:
        raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


# --- reading -----------------------------------------------------------------


class _Lines:
    def __init__(self, text: str):
        self._it: Iterator[str] = iter(text.splitlines())
        self._pushed: list[str] = []

    def next(self) -> str:
        if self._pushed:
            return self._pushed.pop()
        try:
            while True:
                line = next(self._it).strip()
                if line:
                    return line
        except StopIteration:
            raise ModelFormatError("unexpected end of model file") from None

    def push(self, line: str) -> None:
        self._pushed.append(line)


def _expect(lines: _Lines, prefix: str) -> list[str]:
    line = lines.next()
    parts = line.split()
    if not line.startswith(prefix):
        raise ModelFormatError(f"expected {prefix!r}, got {line!r}")
    return parts


def _read_features(lines: _Lines) -> tuple[str, ...]:
    parts = _expect(lines, "features")
    n = int(parts[1])
    if len(parts) != 2 + n:
        raise ModelFormatError("feature count does not match names")
    return tuple(parts[2:])


def _read_params(lines: _Lines) -> dict[str, str]:
    out: dict[str, str] = {}
    while True:
        line = lines.next()
        if not line.startswith("param "):
            lines.push(line)
            return out
        _, key, value = line.split(" ", 2)
        out[key] = value


def _read_tree(lines: _Lines) -> Tree:
    parts = _expect(lines, "tree")
    n = int(parts[1])
    feature = [0] * n
    bin_thr = [0] * n
    thr = [0.0] * n
    left = [0] * n
    right = [0] * n
    value = [0.0] * n
    count = [0] * n
    for _ in range(n):
        parts = _expect(lines, "node")
        i = int(parts[1])
        if parts[2] == "leaf":
            feature[i], bin_thr[i], thr[i] = -1, -1, math.nan
            left[i], right[i] = -1, -1
            value[i], count[i] = float(parts[3]), int(parts[4])
        elif parts[2] == "split":
            feature[i] = int(parts[3])
            bin_thr[i] = int(parts[4])
            thr[i] = float(parts[5])
            left[i], right[i] = int(parts[6]), int(parts[7])
            count[i] = int(parts[8])
        else:
            raise ModelFormatError(f"unknown node type {parts[2]!r}")
    return Tree(feature, bin_thr, thr, left, right, value, count)


def _read_gbdt(lines: _Lines) -> FittedLearner:
    names = _read_features(lines)
    raw = _read_params(lines)
    params = BoosterParams(
        num_iterations=int(raw["num_iterations"]),
        learning_rate=float(raw["learning_rate"]),
        num_leaves=int(raw["num_leaves"]),
        max_depth=_parse_maybe_int(raw["max_depth"]),
        min_data_in_leaf=int(raw["min_data_in_leaf"]),
        max_bin=int(raw["max_bin"]),
        feature_fraction=float(raw["feature_fraction"]),
        bagging_fraction=float(raw["bagging_fraction"]),
        bagging_freq=int(raw["bagging_freq"]),
        lambda_l2=float(raw["lambda_l2"]),
        min_gain_to_split=float(raw["min_gain_to_split"]),
        objective=raw["objective"],
        seed=int(raw["seed"]),
    )
    parts = _expect(lines, "base_score")
    base_score = float(parts[1])
    parts = _expect(lines, "mapper")
    n_features, max_bin = int(parts[1]), int(parts[2])
    edges = []
    for _ in range(n_features):
        parts = _expect(lines, "edges")
        n_edges = int(parts[2])
        edges.append(np.array([float(t) for t in parts[3 : 3 + n_edges]], dtype=np.float64))
    mapper = BinMapper(tuple(edges), max_bin)
    parts = _expect(lines, "trees")
    trees = tuple(_read_tree(lines) for _ in range(int(parts[1])))
    _expect(lines, "end gbdt")
    model = BoostedModel(base_score, trees, params, mapper, names)
    return FittedLearner(LearnerSpec("gbdt", params, params.seed), model)


def _read_vector(lines: _Lines, key: str) -> np.ndarray:
    parts = _expect(lines, key)
    n = int(parts[1])
    return np.array([float(t) for t in parts[2 : 2 + n]], dtype=np.float64)


def _read_linear(lines: _Lines) -> FittedLearner:
    names = _read_features(lines)
    ridge = float(_expect(lines, "ridge")[1])
    intercept = float(_expect(lines, "intercept")[1])
    coef = _read_vector(lines, "coef")
    mean = _read_vector(lines, "mean")
    scale = _read_vector(lines, "scale")
    _expect(lines, "end linear")
    payload = LinearModel(coef, intercept, mean, scale, names)
    return FittedLearner(LearnerSpec("linear_regression", LinearParams(ridge)), payload)


def _read_cart(lines: _Lines) -> FittedLearner:
    names = _read_features(lines)
    raw = _read_params(lines)
    params = CartParams(_parse_maybe_int(raw["max_depth"]), int(raw["min_data_in_leaf"]))
    tree = _read_tree(lines)
    _expect(lines, "end cart")
    return FittedLearner(LearnerSpec("decision_tree", params), CartModel(tree, names))


def _read_forest(lines: _Lines) -> FittedLearner:
    names = _read_features(lines)
    raw = _read_params(lines)
    params = ForestParams(
        n_trees=int(raw["n_trees"]),
        max_depth=_parse_maybe_int(raw["max_depth"]),
        min_data_in_leaf=int(raw["min_data_in_leaf"]),
        feature_fraction=float(raw["feature_fraction"]),
        bootstrap=bool(int(raw["bootstrap"])),
    )
    trees = tuple(_read_tree(lines) for _ in range(params.n_trees))
    _expect(lines, "end forest")
    payload = ForestModel(trees, names)
    return FittedLearner(LearnerSpec("random_forest", params, int(raw["seed"])), payload)


_READERS = {
    "gbdt": _read_gbdt,
    "linear": _read_linear,
    "cart": _read_cart,
    "forest": _read_forest,
}


def _read_learner(lines: _Lines) -> FittedLearner:
    parts = _expect(lines, "begin")
    kind = parts[1]
    if kind not in _READERS:
        raise ModelFormatError(f"unknown model block {kind!r}")
    return _READERS[kind](lines)


def _read_fusion(lines: _Lines) -> FusionModel:
    strategy = _expect(lines, "strategy")[1]
    assignment: dict[str, tuple[str, ...]] = {}
    for _ in SUBSET_ORDER:
        parts = _expect(lines, "subset")
        subset, n = parts[1], int(parts[2])
        assignment[subset] = tuple(parts[3 : 3 + n])
    weights = None
    line = lines.next()
    if line.startswith("weights"):
        parts = line.split()
        weights = np.array([float(t) for t in parts[2 : 2 + int(parts[1])]], dtype=np.float64)
    else:
        lines.push(line)
    base_models: dict[str, FittedLearner] = {}
    for _ in SUBSET_ORDER:
        parts = _expect(lines, "begin base")
        subset = parts[2]
        base_models[subset] = _read_learner(lines)
        _expect(lines, "end base")
    meta_model = None
    line = lines.next()
    if line == "begin meta":
        meta_model = _read_learner(lines)
        _expect(lines, "end meta")
        line = lines.next()
    if line != "end fusion":
        raise ModelFormatError(f"expected 'end fusion', got {line!r}")
    return FusionModel(base_models, strategy, assignment, weights=weights, meta_model=meta_model)


def loads(text: str) -> FittedLearner | FusionModel:
    lines = _Lines(text)
    if lines.next() != MAGIC:
        raise ModelFormatError(f"not a model file (expected header {MAGIC!r})")
    parts = _expect(lines, "begin")
    if parts[1] == "fusion":
        return _read_fusion(lines)
    lines.push(" ".join(parts))
    return _read_learner(lines)


def load_model(path) -> FittedLearner | FusionModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
