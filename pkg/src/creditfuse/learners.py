"""Classical base learners behind one shared fit/predict abstraction.

Linear regression (ridge-stabilized normal equations), a CART regression
tree, and a bagged random forest, plus the boosted model from ``gbdt``. The
trees reuse the same exact sorted-prefix split core as the boosting oracle,
so variance-reduction splits and gradient splits agree by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import gbdt
from .data import Dataset
from .errors import SchemaError
from .gbdt import BoosterParams, BoostedModel, Tree, best_sorted_prefix_split

KINDS = ("linear_regression", "decision_tree", "random_forest", "gbdt")

_FOREST_STREAM = 0xF07


@dataclass(frozen=True)
class LinearParams:
    ridge_lambda: float = 1e-6

    def __post_init__(self):
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")


@dataclass(frozen=True)
class CartParams:
    max_depth: int | None = None
    min_data_in_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_data_in_leaf < 1:
            raise ValueError("min_data_in_leaf must be >= 1")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_data_in_leaf: int = 1
    feature_fraction: float = 1.0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_data_in_leaf < 1:
            raise ValueError("min_data_in_leaf must be >= 1")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must be in (0, 1]")


_PARAM_TYPES = {
    "linear_regression": LinearParams,
    "decision_tree": CartParams,
    "random_forest": ForestParams,
    "gbdt": BoosterParams,
}


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind with its hyperparameters and a seed."""

    kind: str
    params: object = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.params is None:
            object.__setattr__(self, "params", _PARAM_TYPES[self.kind]())
        elif not isinstance(self.params, _PARAM_TYPES[self.kind]):
            raise ValueError(
                f"{self.kind} expects {_PARAM_TYPES[self.kind].__name__} parameters"
            )


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    feature_names: tuple[str, ...]

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        z = (values - self.mean) / self.scale
        return self.intercept + z @ self.coef


@dataclass
class CartModel:
    tree: Tree
    feature_names: tuple[str, ...]


@dataclass
class ForestModel:
    trees: tuple[Tree, ...]
    feature_names: tuple[str, ...]
    #: per-tree training row indices (bootstrap draws); in-memory audit only
    tree_rows: tuple[np.ndarray, ...] = ()


@dataclass
class FittedLearner:
    spec: LearnerSpec
    payload: LinearModel | CartModel | ForestModel | BoostedModel

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.payload.feature_names

    def predict(self, d: Dataset) -> np.ndarray:
        return predict(self, d)


def fit_linear(d: Dataset, ridge_lambda: float = 1e-6) -> FittedLearner:
    """Ridge least squares on standardized features; intercept unpenalized."""
    y = d.require_target()
    x = d.values
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    z = (x - mean) / scale
    gram = z.T @ z + ridge_lambda * np.eye(x.shape[1])
    rhs = z.T @ (y - y.mean())
    coef = np.linalg.solve(gram, rhs)
    payload = LinearModel(coef, float(y.mean()), mean, scale, d.schema.names)
    return FittedLearner(LearnerSpec("linear_regression", LinearParams(ridge_lambda)), payload)


def _grow_cart_tree(
    x: np.ndarray,
    y: np.ndarray,
    max_depth: int | None,
    min_data_in_leaf: int,
    rng: np.random.Generator | None = None,
    feature_fraction: float = 1.0,
) -> Tree:
    """Depth-wise variance-reduction tree on raw values.

    Sorted row orders are filtered down the tree instead of re-sorting at
    every node. Feature subsets, when enabled, are redrawn at each node in
    deterministic depth-first order.
    """
    n, m = x.shape
    orders = [np.argsort(x[:, j], kind="stable") for j in range(m)]
    n_sample = max(1, math.ceil(feature_fraction * m))

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    count: list[int] = []

    def alloc() -> int:
        feature.append(-1)
        threshold.append(math.nan)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        count.append(0)
        return len(feature) - 1

    root = alloc()
    stack = [(orders, 0, root)]
    while stack:
        node_orders, depth, idx = stack.pop()
        rows = node_orders[0]
        n_node = len(rows)
        count[idx] = n_node
        value[idx] = float(y[rows].mean())
        if n_node < 2 * min_data_in_leaf or (max_depth is not None and depth >= max_depth):
            continue
        if feature_fraction < 1.0:
            feats = np.sort(rng.choice(m, size=n_sample, replace=False))
        else:
            feats = range(m)
        best_gain = 0.0
        best_f = -1
        best_thr = math.nan
        for f in feats:
            order = node_orders[f]
            found = best_sorted_prefix_split(
                x[order, f], -y[order], np.ones(n_node), min_data_in_leaf, 0.0, 0.0
            )
            if found is not None and found[1] > best_gain:
                pos, best_gain = found
                best_f = int(f)
                best_thr = float(x[order[pos], f])
        if best_f < 0:
            continue
        member = np.zeros(n, dtype=bool)
        member[rows[x[rows, best_f] <= best_thr]] = True
        left_orders = [o[member[o]] for o in node_orders]
        right_orders = [o[~member[o]] for o in node_orders]
        feature[idx] = best_f
        threshold[idx] = best_thr
        left[idx] = alloc()
        right[idx] = alloc()
        stack.append((right_orders, depth + 1, right[idx]))
        stack.append((left_orders, depth + 1, left[idx]))

    bin_thr = [-1] * len(feature)
    return Tree(feature, bin_thr, threshold, left, right, value, count)


def fit_cart(
    d: Dataset, max_depth: int | None = None, min_data_in_leaf: int = 1
) -> FittedLearner:
    """Greedy depth-wise CART regression tree; leaves predict the row mean."""
    y = d.require_target()
    if d.n_rows < min_data_in_leaf:
        raise ValueError("fewer rows than min_data_in_leaf")
    x = np.ascontiguousarray(d.values)
    tree = _grow_cart_tree(x, y, max_depth, min_data_in_leaf)
    payload = CartModel(tree, d.schema.names)
    return FittedLearner(
        LearnerSpec("decision_tree", CartParams(max_depth, min_data_in_leaf)), payload
    )


def fit_random_forest(
    d: Dataset,
    n_trees: int = 100,
    max_depth: int | None = None,
    min_data_in_leaf: int = 1,
    feature_fraction: float = 1.0,
    seed: int = 0,
    bootstrap: bool = True,
) -> FittedLearner:
    """Bagged CART ensemble; prediction is the mean over trees."""
    y = d.require_target()
    x = np.ascontiguousarray(d.values)
    n = d.n_rows
    trees: list[Tree] = []
    tree_rows: list[np.ndarray] = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _FOREST_STREAM, t]))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        trees.append(
            _grow_cart_tree(
                x[rows], y[rows], max_depth, min_data_in_leaf, rng, feature_fraction
            )
        )
        tree_rows.append(rows)
    params = ForestParams(n_trees, max_depth, min_data_in_leaf, feature_fraction, bootstrap)
    payload = ForestModel(tuple(trees), d.schema.names, tuple(tree_rows))
    return FittedLearner(LearnerSpec("random_forest", params, seed), payload)


def fit_learner(d: Dataset, spec: LearnerSpec) -> FittedLearner:
    """Kind-dispatched fit; the spec's seed overrides any nested seed."""
    if spec.kind == "linear_regression":
        fitted = fit_linear(d, spec.params.ridge_lambda)
    elif spec.kind == "decision_tree":
        fitted = fit_cart(d, spec.params.max_depth, spec.params.min_data_in_leaf)
    elif spec.kind == "random_forest":
        p = spec.params
        fitted = fit_random_forest(
            d, p.n_trees, p.max_depth, p.min_data_in_leaf,
            p.feature_fraction, spec.seed, p.bootstrap,
        )
    elif spec.kind == "gbdt":
        model = gbdt.fit(d, replace(spec.params, seed=spec.seed))
        return FittedLearner(spec, model)
    else:  # pragma: no cover - guarded by LearnerSpec
        raise ValueError(spec.kind)
    return FittedLearner(replace(fitted.spec, seed=spec.seed), fitted.payload)


def _check_names(payload_names: tuple[str, ...], d: Dataset) -> None:
    if d.schema.names != payload_names:
        missing = [n for n in payload_names if n not in d.schema.names]
        extra = [n for n in d.schema.names if n not in payload_names]
        raise SchemaError(
            f"column mismatch at predict: missing {missing or 'none'}, unexpected {extra or 'none'}"
        )


def predict(l: FittedLearner, d: Dataset) -> np.ndarray:
    """Prediction for any fitted learner kind; always finite outputs."""
    payload = l.payload
    if isinstance(payload, BoostedModel):
        return gbdt.predict(payload, d)
    _check_names(payload.feature_names, d)
    x = d.values
    if isinstance(payload, LinearModel):
        return payload.predict_values(x)
    if isinstance(payload, CartModel):
        return payload.tree.predict(x, binned=False)
    if isinstance(payload, ForestModel):
        out = np.zeros(d.n_rows, dtype=np.float64)
        for tree in payload.trees:
            out += tree.predict(x, binned=False)
        return out / len(payload.trees)
    raise TypeError(f"unknown payload {type(payload).__name__}")
