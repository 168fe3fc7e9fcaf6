"""Histogram-based gradient boosting with leaf-wise tree growth.

The training loop fits squared-error residuals tree by tree. Split search
scans per-feature histograms of (gradient sum, hessian sum, count); when a
node is split, only the smaller child's histograms are accumulated directly
and the larger child's are derived by subtraction from the parent. Trees are
grown best-first: the open leaf with the highest split gain anywhere in the
tree is expanded next.

``best_split_presorted`` is a deliberately separate exact split finder that
scans raw feature values in sorted order. It exists as an independent
cross-check for the histogram path and as the split core for the classical
tree learners.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .binning import BinMapper, BinnedDataset, apply_bins, fit_bins
from .data import Dataset
from .errors import CreditFuseError, SchemaError

_BAG_STREAM = 0x8A6
_FEAT_STREAM = 0xFEA


@dataclass(frozen=True)
class BoosterParams:
    num_iterations: int = 100
    learning_rate: float = 0.1
    num_leaves: int = 31
    max_depth: int | None = None
    min_data_in_leaf: int = 20
    max_bin: int = 255
    feature_fraction: float = 1.0
    bagging_fraction: float = 1.0
    bagging_freq: int = 0
    lambda_l2: float = 0.0
    min_gain_to_split: float = 0.0
    objective: str = "l2_regression"
    seed: int = 0

    def __post_init__(self):
        if self.num_iterations < 0:
            raise ValueError("num_iterations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.num_leaves < 1:
            raise ValueError("num_leaves must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_data_in_leaf < 1:
            raise ValueError("min_data_in_leaf must be >= 1")
        if self.max_bin < 2:
            raise ValueError("max_bin must be >= 2")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must be in (0, 1]")
        if not 0 < self.bagging_fraction <= 1:
            raise ValueError("bagging_fraction must be in (0, 1]")
        if self.bagging_freq < 0:
            raise ValueError("bagging_freq must be >= 0")
        if self.lambda_l2 < 0:
            raise ValueError("lambda_l2 must be >= 0")
        if self.min_gain_to_split < 0:
            raise ValueError("min_gain_to_split must be >= 0")
        if self.objective != "l2_regression":
            raise ValueError(f"unsupported objective {self.objective!r}")


@dataclass
class Histogram:
    """Per-bin (gradient sum, hessian sum, count) for one feature at one node."""

    grad_sum: np.ndarray
    hess_sum: np.ndarray
    count: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.count)


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    bin_threshold: int
    gain: float
    left_count: int
    right_count: int
    #: raw-value form of the threshold ("value <= threshold goes left")
    threshold: float = math.nan


@dataclass
class GrowthCounters:
    """Instrumentation: how many node histogram sets were built each way."""

    direct_builds: int = 0
    subtraction_builds: int = 0


def compute_gradients(target: np.ndarray, prediction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared-error gradients: grad = prediction - target, hessian = 1."""
    target = np.asarray(target, dtype=np.float64)
    prediction = np.asarray(prediction, dtype=np.float64)
    if target.shape != prediction.shape:
        raise ValueError(f"length mismatch: {target.shape} vs {prediction.shape}")
    return prediction - target, np.ones_like(target)


def build_histogram(
    bd: BinnedDataset, rows: np.ndarray, feature: int, grad: np.ndarray, hess: np.ndarray
) -> Histogram:
    """Accumulate per-bin gradient/hessian/count over exactly the given rows."""
    rows = np.asarray(rows, dtype=np.intp)
    n_bins = bd.mapper.n_bins(feature)
    b = bd.indices[rows, feature]
    return Histogram(
        grad_sum=np.bincount(b, weights=grad[rows], minlength=n_bins),
        hess_sum=np.bincount(b, weights=hess[rows], minlength=n_bins),
        count=np.bincount(b, minlength=n_bins).astype(np.int64),
    )


def subtract_histogram(parent: Histogram, sibling: Histogram) -> Histogram:
    """Derive a node's histogram as parent minus its sibling."""
    if parent.n_bins != sibling.n_bins:
        raise CreditFuseError(
            f"histogram bin counts differ: {parent.n_bins} vs {sibling.n_bins}"
        )
    count = parent.count - sibling.count
    if (count < 0).any():
        raise CreditFuseError("histogram subtraction produced a negative count")
    return Histogram(
        grad_sum=parent.grad_sum - sibling.grad_sum,
        hess_sum=parent.hess_sum - sibling.hess_sum,
        count=count,
    )


def _split_gains(
    grad_left: np.ndarray,
    hess_left: np.ndarray,
    total_grad: float,
    total_hess: float,
    lam: float,
) -> np.ndarray:
    """Second-order gain at every candidate threshold, given left prefixes."""
    grad_right = total_grad - grad_left
    hess_right = total_hess - hess_left
    parent_score = total_grad * total_grad / (total_hess + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = 0.5 * (
            grad_left * grad_left / (hess_left + lam)
            + grad_right * grad_right / (hess_right + lam)
            - parent_score
        )
    return gains


def best_split_from_histogram(
    hist: Histogram,
    node_grad: float,
    node_hess: float,
    params: BoosterParams,
    feature: int = 0,
) -> SplitCandidate | None:
    """Best bin threshold for one feature's histogram, or None.

    A candidate at bin b sends bins <= b left. Ties on gain resolve to the
    lowest bin. A split is returned only when its gain strictly exceeds
    ``min_gain_to_split`` and both sides satisfy ``min_data_in_leaf``.
    """
    if hist.n_bins < 2:
        return None
    node_count = int(hist.count.sum())
    grad_left = np.cumsum(hist.grad_sum)[:-1]
    hess_left = np.cumsum(hist.hess_sum)[:-1]
    count_left = np.cumsum(hist.count)[:-1]
    count_right = node_count - count_left
    gains = _split_gains(grad_left, hess_left, node_grad, node_hess, params.lambda_l2)
    ok = (count_left >= params.min_data_in_leaf) & (count_right >= params.min_data_in_leaf)
    gains = np.where(ok, gains, -np.inf)
    best = int(np.argmax(gains))
    if not gains[best] > params.min_gain_to_split:
        return None
    return SplitCandidate(
        feature=feature,
        bin_threshold=best,
        gain=float(gains[best]),
        left_count=int(count_left[best]),
        right_count=int(count_right[best]),
    )


def best_sorted_prefix_split(
    values_sorted: np.ndarray,
    grad_sorted: np.ndarray,
    hess_sorted: np.ndarray,
    min_data_in_leaf: int,
    lam: float,
    min_gain: float,
) -> tuple[int, float] | None:
    """Exact split search over one feature's rows in value order.

    Returns (position, gain) where the cut keeps positions 0..position on the
    left, or None. Shared by the presorted oracle and the classical trees.
    """
    n = len(values_sorted)
    if n < 2 * min_data_in_leaf:
        return None
    grad_left = np.cumsum(grad_sorted)[:-1]
    hess_left = np.cumsum(hess_sorted)[:-1]
    count_left = np.arange(1, n)
    gains = _split_gains(
        grad_left, hess_left, float(grad_sorted.sum()), float(hess_sorted.sum()), lam
    )
    ok = (
        (values_sorted[:-1] < values_sorted[1:])
        & (count_left >= min_data_in_leaf)
        & (n - count_left >= min_data_in_leaf)
    )
    gains = np.where(ok, gains, -np.inf)
    best = int(np.argmax(gains))
    if not gains[best] > min_gain:
        return None
    return best, float(gains[best])


def best_split_presorted(
    values: np.ndarray,
    rows: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    params: BoosterParams,
    features=None,
) -> SplitCandidate | None:
    """Exact best split over raw values; the oracle for the histogram finder.

    The returned threshold is the largest raw value routed left, matching the
    binning edge convention.
    """
    values = np.asarray(values, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.intp)
    if features is None:
        features = range(values.shape[1])
    best: SplitCandidate | None = None
    g = grad[rows]
    h = hess[rows]
    for f in features:
        v = values[rows, f]
        order = np.argsort(v, kind="stable")
        found = best_sorted_prefix_split(
            v[order], g[order], h[order],
            params.min_data_in_leaf, params.lambda_l2, params.min_gain_to_split,
        )
        if found is None:
            continue
        pos, gain = found
        if best is None or gain > best.gain:
            best = SplitCandidate(
                feature=int(f),
                bin_threshold=-1,
                gain=gain,
                left_count=pos + 1,
                right_count=len(rows) - pos - 1,
                threshold=float(v[order[pos]]),
            )
    return best


class Tree:
    """Flat-array binary tree; internal nodes carry both bin and raw thresholds.

    ``feature[i] < 0`` marks node i as a leaf whose prediction is ``value[i]``.
    """

    __slots__ = ("feature", "bin_threshold", "threshold", "left", "right", "value", "count")

    def __init__(self, feature, bin_threshold, threshold, left, right, value, count):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.bin_threshold = np.asarray(bin_threshold, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)
        self.count = np.asarray(count, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def leaf_assign(self, matrix: np.ndarray, binned: bool) -> np.ndarray:
        """Route every row of a (rows x features) matrix to its leaf index."""
        n = matrix.shape[0]
        out = np.zeros(n, dtype=np.int32)
        stack = [(0, np.arange(n, dtype=np.intp))]
        while stack:
            node, idx = stack.pop()
            if self.feature[node] < 0:
                out[idx] = node
                continue
            col = matrix[idx, self.feature[node]]
            if binned:
                mask = col <= self.bin_threshold[node]
            else:
                mask = col <= self.threshold[node]
            stack.append((self.left[node], idx[mask]))
            stack.append((self.right[node], idx[~mask]))
        return out

    def predict(self, matrix: np.ndarray, binned: bool) -> np.ndarray:
        return self.value[self.leaf_assign(matrix, binned)]


class _Leaf:
    """Mutable bookkeeping for one open leaf during growth."""

    __slots__ = ("rows", "depth", "grad_total", "hess_total", "hists", "cand", "seq", "children")

    def __init__(self, rows, depth, grad_total, hess_total, seq):
        self.rows = rows
        self.depth = depth
        self.grad_total = grad_total
        self.hess_total = hess_total
        self.hists: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.cand: SplitCandidate | None = None
        self.seq = seq
        self.children = None  # (left leaf, right leaf, SplitCandidate) once split


class _HistLayout:
    """Stacked per-node histograms: one (n_features x stride) array per stat.

    All sampled features share one bin stride so the whole node accumulates
    with a single offset bincount per statistic; row f of a stat array is
    exactly the per-feature histogram, zero-padded past that feature's bins.
    """

    __slots__ = ("features", "stride", "offsets", "unit_hess")

    def __init__(self, bd: BinnedDataset, features: np.ndarray, unit_hess: bool):
        self.features = features
        self.stride = max(bd.mapper.n_bins(int(f)) for f in features)
        self.offsets = (np.arange(len(features)) * self.stride).astype(np.int64)
        self.unit_hess = unit_hess

    def build(self, bd, rows, grad, hess):
        k, stride = len(self.features), self.stride
        if k == bd.n_features:
            sub = bd.indices[rows]
        else:
            sub = bd.indices[np.ix_(rows, self.features)]
        flat = (sub + self.offsets[None, :]).ravel(order="F")
        g = np.tile(grad[rows], k)
        grad_sum = np.bincount(flat, weights=g, minlength=k * stride).reshape(k, stride)
        count = np.bincount(flat, minlength=k * stride).reshape(k, stride)
        if self.unit_hess:
            hess_sum = count.astype(np.float64)
        else:
            h = np.tile(hess[rows], k)
            hess_sum = np.bincount(flat, weights=h, minlength=k * stride).reshape(k, stride)
        return grad_sum, hess_sum, count

    @staticmethod
    def subtract(parent, sibling):
        count = parent[2] - sibling[2]
        if (count < 0).any():
            raise CreditFuseError("histogram subtraction produced a negative count")
        return parent[0] - sibling[0], parent[1] - sibling[1], count


def _best_node_split(leaf: _Leaf, layout: _HistLayout, params: BoosterParams) -> SplitCandidate | None:
    """Vectorized split search over every (feature, bin threshold) pair.

    Ties resolve to the lowest feature then lowest bin because argmax takes
    the first maximum in row-major (feature-major) order.
    """
    grad_sum, hess_sum, count = leaf.hists
    if layout.stride < 2:
        return None
    grad_left = np.cumsum(grad_sum, axis=1)[:, :-1]
    hess_left = np.cumsum(hess_sum, axis=1)[:, :-1]
    count_left = np.cumsum(count, axis=1)[:, :-1]
    node_count = len(leaf.rows)
    count_right = node_count - count_left
    gains = _split_gains(grad_left, hess_left, leaf.grad_total, leaf.hess_total, params.lambda_l2)
    ok = (count_left >= params.min_data_in_leaf) & (count_right >= params.min_data_in_leaf)
    gains = np.where(ok, gains, -np.inf)
    flat_best = int(np.argmax(gains))
    f_local, b = divmod(flat_best, layout.stride - 1)
    gain = float(gains[f_local, b])
    if not gain > params.min_gain_to_split:
        return None
    return SplitCandidate(
        feature=int(layout.features[f_local]),
        bin_threshold=int(b),
        gain=gain,
        left_count=int(count_left[f_local, b]),
        right_count=int(count_right[f_local, b]),
    )


def grow_tree_leafwise(
    bd: BinnedDataset,
    rows: np.ndarray | None,
    grad: np.ndarray,
    hess: np.ndarray,
    params: BoosterParams,
    features: np.ndarray | None = None,
    counters: GrowthCounters | None = None,
) -> Tree:
    """Grow one tree best-first over histogram splits.

    The open leaf with the globally highest admissible gain splits next; on
    equal gains the earliest-created leaf wins, and within a leaf the lowest
    feature then lowest bin. The smaller child of every split accumulates its
    histograms directly; the larger child's are derived by subtraction.
    """
    if counters is None:
        counters = GrowthCounters()
    if rows is None:
        rows = np.arange(bd.n_rows, dtype=np.intp)
    else:
        rows = np.asarray(rows, dtype=np.intp)
    if features is None:
        features = np.arange(bd.n_features, dtype=np.intp)
    layout = _HistLayout(bd, features, unit_hess=bool(np.all(hess == 1.0)))

    def evaluable(leaf: _Leaf) -> bool:
        if len(leaf.rows) < 2 * params.min_data_in_leaf:
            return False
        return params.max_depth is None or leaf.depth < params.max_depth

    seq_counter = 0
    root = _Leaf(rows, 0, float(grad[rows].sum()), float(hess[rows].sum()), seq_counter)
    heap: list[tuple[float, int, _Leaf]] = []
    if params.num_leaves > 1 and evaluable(root):
        root.hists = layout.build(bd, root.rows, grad, hess)
        counters.direct_builds += 1
        root.cand = _best_node_split(root, layout, params)
        if root.cand is not None:
            heapq.heappush(heap, (-root.cand.gain, root.seq, root))

    n_leaves = 1
    while heap and n_leaves < params.num_leaves:
        _, _, leaf = heapq.heappop(heap)
        cand = leaf.cand
        bins = bd.indices[leaf.rows, cand.feature]
        mask = bins <= cand.bin_threshold
        left = _Leaf(leaf.rows[mask], leaf.depth + 1, 0.0, 0.0, seq_counter + 1)
        right = _Leaf(leaf.rows[~mask], leaf.depth + 1, 0.0, 0.0, seq_counter + 2)
        seq_counter += 2
        for child in (left, right):
            child.grad_total = float(grad[child.rows].sum())
            child.hess_total = float(hess[child.rows].sum())

        small, large = (left, right) if len(left.rows) <= len(right.rows) else (right, left)
        if evaluable(large):
            small.hists = layout.build(bd, small.rows, grad, hess)
            counters.direct_builds += 1
            large.hists = _HistLayout.subtract(leaf.hists, small.hists)
            counters.subtraction_builds += 1
        elif evaluable(small):
            small.hists = layout.build(bd, small.rows, grad, hess)
            counters.direct_builds += 1
        leaf.hists = None  # parent histograms are no longer needed

        for child in (left, right):
            if child.hists is not None:
                child.cand = _best_node_split(child, layout, params)
                if child.cand is not None:
                    heapq.heappush(heap, (-child.cand.gain, child.seq, child))
        leaf.children = (left, right, cand)
        n_leaves += 1

    return _assemble(root, bd, params)


def _assemble(root: _Leaf, bd: BinnedDataset, params: BoosterParams) -> Tree:
    feature, bin_thr, thr, left, right, value, count = [], [], [], [], [], [], []

    def emit(leaf: _Leaf) -> int:
        idx = len(feature)
        if leaf.children is None:
            w = -leaf.grad_total / (leaf.hess_total + params.lambda_l2)
            feature.append(-1)
            bin_thr.append(-1)
            thr.append(math.nan)
            left.append(-1)
            right.append(-1)
            value.append(params.learning_rate * w)
            count.append(len(leaf.rows))
            return idx
        lc, rc, cand = leaf.children
        feature.append(cand.feature)
        bin_thr.append(cand.bin_threshold)
        thr.append(bd.mapper.upper_edge(cand.feature, cand.bin_threshold))
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        count.append(len(leaf.rows))
        left[idx] = emit(lc)
        right[idx] = emit(rc)
        return idx

    emit(root)
    return Tree(feature, bin_thr, thr, left, right, value, count)


def grow_tree_presorted(
    values: np.ndarray,
    rows: np.ndarray | None,
    grad: np.ndarray,
    hess: np.ndarray,
    params: BoosterParams,
) -> Tree:
    """Leaf-wise tree over exact presorted splits; the oracle twin of
    ``grow_tree_leafwise`` for datasets where binning is lossless."""
    values = np.asarray(values, dtype=np.float64)
    if rows is None:
        rows = np.arange(values.shape[0], dtype=np.intp)

    def evaluable(leaf: _Leaf) -> bool:
        if len(leaf.rows) < 2 * params.min_data_in_leaf:
            return False
        return params.max_depth is None or leaf.depth < params.max_depth

    seq_counter = 0
    root = _Leaf(rows, 0, float(grad[rows].sum()), float(hess[rows].sum()), seq_counter)
    heap: list[tuple[float, int, _Leaf]] = []
    if params.num_leaves > 1 and evaluable(root):
        root.cand = best_split_presorted(values, root.rows, grad, hess, params)
        if root.cand is not None:
            heapq.heappush(heap, (-root.cand.gain, root.seq, root))

    n_leaves = 1
    while heap and n_leaves < params.num_leaves:
        _, _, leaf = heapq.heappop(heap)
        cand = leaf.cand
        v = values[leaf.rows, cand.feature]
        mask = v <= cand.threshold
        left = _Leaf(leaf.rows[mask], leaf.depth + 1, 0.0, 0.0, seq_counter + 1)
        right = _Leaf(leaf.rows[~mask], leaf.depth + 1, 0.0, 0.0, seq_counter + 2)
        seq_counter += 2
        for child in (left, right):
            child.grad_total = float(grad[child.rows].sum())
            child.hess_total = float(hess[child.rows].sum())
            if evaluable(child):
                child.cand = best_split_presorted(values, child.rows, grad, hess, params)
                if child.cand is not None:
                    heapq.heappush(heap, (-child.cand.gain, child.seq, child))
        leaf.children = (left, right, cand)
        n_leaves += 1

    feature, bin_thr, thr, left_a, right_a, value, count = [], [], [], [], [], [], []

    def emit(leaf: _Leaf) -> int:
        idx = len(feature)
        if leaf.children is None:
            w = -leaf.grad_total / (leaf.hess_total + params.lambda_l2)
            feature.append(-1)
            bin_thr.append(-1)
            thr.append(math.nan)
            left_a.append(-1)
            right_a.append(-1)
            value.append(params.learning_rate * w)
            count.append(len(leaf.rows))
            return idx
        lc, rc, cand = leaf.children
        feature.append(cand.feature)
        bin_thr.append(-1)
        thr.append(cand.threshold)
        left_a.append(-1)
        right_a.append(-1)
        value.append(0.0)
        count.append(len(leaf.rows))
        left_a[idx] = emit(lc)
        right_a[idx] = emit(rc)
        return idx

    emit(root)
    return Tree(feature, bin_thr, thr, left_a, right_a, value, count)


@dataclass
class BoostedModel:
    base_score: float
    trees: tuple[Tree, ...]
    params: BoosterParams
    mapper: BinMapper
    feature_names: tuple[str, ...]
    #: training MSE after each iteration, for convergence inspection
    training_mse: tuple[float, ...] = ()
    counters: GrowthCounters = field(default_factory=GrowthCounters)

    def predict(self, d: Dataset) -> np.ndarray:
        return predict(self, d)


def _bag_rows(params: BoosterParams, iteration: int, n: int, current) -> np.ndarray | None:
    if params.bagging_freq <= 0 or params.bagging_fraction >= 1.0:
        return None
    if iteration % params.bagging_freq == 0 or current is None:
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, _BAG_STREAM, iteration]))
        size = math.ceil(params.bagging_fraction * n)
        return np.sort(rng.choice(n, size=size, replace=False)).astype(np.intp)
    return current


def _sample_features(params: BoosterParams, iteration: int, m: int) -> np.ndarray | None:
    if params.feature_fraction >= 1.0:
        return None
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, _FEAT_STREAM, iteration]))
    size = math.ceil(params.feature_fraction * m)
    return np.sort(rng.choice(m, size=size, replace=False)).astype(np.intp)


def fit(d: Dataset, params: BoosterParams) -> BoostedModel:
    """Train a boosted model; deterministic given data, params, and seed."""
    if d.n_rows == 0:
        raise ValueError("cannot fit on an empty dataset")
    y = d.require_target()
    mapper = fit_bins(d.values, params.max_bin)
    bd = apply_bins(d, mapper)
    n, m = bd.n_rows, bd.n_features
    base_score = float(y.mean())
    pred = np.full(n, base_score, dtype=np.float64)
    trees: list[Tree] = []
    mse_history: list[float] = []
    counters = GrowthCounters()
    bag = None
    for it in range(params.num_iterations):
        grad, hess = compute_gradients(y, pred)
        bag = _bag_rows(params, it, n, bag)
        feats = _sample_features(params, it, m)
        tree = grow_tree_leafwise(bd, bag, grad, hess, params, features=feats, counters=counters)
        pred = pred + tree.predict(bd.indices, binned=True)
        trees.append(tree)
        mse_history.append(float(np.mean((pred - y) ** 2)))
    return BoostedModel(
        base_score=base_score,
        trees=tuple(trees),
        params=params,
        mapper=mapper,
        feature_names=d.schema.names,
        training_mse=tuple(mse_history),
        counters=counters,
    )


def predict(model: BoostedModel, d: Dataset) -> np.ndarray:
    """Route raw values through the fit-time binning and sum leaf weights."""
    if d.schema.names != model.feature_names:
        missing = [n for n in model.feature_names if n not in d.schema.names]
        extra = [n for n in d.schema.names if n not in model.feature_names]
        raise SchemaError(
            f"column mismatch at predict: missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    bd = apply_bins(d.values, model.mapper)
    out = np.full(d.n_rows, model.base_score, dtype=np.float64)
    for tree in model.trees:
        out += tree.predict(bd.indices, binned=True)
    return out
