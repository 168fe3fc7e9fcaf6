"""Quantile discretization of continuous features into integer bins.

Bin b of a feature holds values v with edge[b-1] < v <= edge[b]; values above
the last edge fall into the last bin, so unseen test values always map
somewhere. When a feature has no more distinct values than ``max_bin``, every
distinct value gets its own bin and binning is exactly invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import SchemaError


@dataclass(frozen=True)
class BinMapper:
    """Per-feature upper bin edges; feature f has len(edges[f]) + 1 bins."""

    edges: tuple[np.ndarray, ...]
    max_bin: int

    @property
    def n_features(self) -> int:
        return len(self.edges)

    def n_bins(self, feature: int) -> int:
        return len(self.edges[feature]) + 1

    def upper_edge(self, feature: int, bin_index: int) -> float:
        """Raw-value upper edge of a bin; the last bin is unbounded above."""
        e = self.edges[feature]
        if bin_index < len(e):
            return float(e[bin_index])
        return np.inf


class BinnedDataset:
    """Integer bin indices for every cell, column-major like Dataset."""

    __slots__ = ("indices", "mapper", "target", "n_rows", "n_features")

    def __init__(self, indices: np.ndarray, mapper: BinMapper, target: np.ndarray | None):
        self.indices = indices
        self.mapper = mapper
        self.target = target
        self.n_rows = indices.shape[0]
        self.n_features = indices.shape[1]

    def feature_bins(self, feature: int) -> np.ndarray:
        return self.indices[:, feature]


def _values_of(d) -> np.ndarray:
    return d.values if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)


def fit_bins(d, max_bin: int = 255) -> BinMapper:
    """Choose per-feature quantile cut points from the given data.

    Features with at most ``max_bin`` distinct values keep one bin per
    distinct value; denser features get approximately equal-frequency bins
    cut at data values.
    """
    if max_bin < 2:
        raise ValueError(f"max_bin must be >= 2, got {max_bin}")
    values = _values_of(d)
    if values.shape[0] == 0:
        raise ValueError("cannot fit bins on an empty dataset")
    edges: list[np.ndarray] = []
    for j in range(values.shape[1]):
        x = values[:, j]
        distinct = np.unique(x)
        if len(distinct) <= max_bin:
            cuts = distinct[:-1]
        else:
            qs = np.arange(1, max_bin) / max_bin
            cuts = np.unique(np.quantile(x, qs, method="lower"))
            cuts = cuts[cuts < distinct[-1]]
        edges.append(np.ascontiguousarray(cuts, dtype=np.float64))
    return BinMapper(tuple(edges), max_bin)


def apply_bins(d, mapper: BinMapper) -> BinnedDataset:
    """Map every value to its bin index; ties on an edge go to the lower bin."""
    values = _values_of(d)
    if values.shape[1] != mapper.n_features:
        raise SchemaError(
            f"dataset has {values.shape[1]} columns, mapper expects {mapper.n_features}"
        )
    widest = max((mapper.n_bins(j) for j in range(mapper.n_features)), default=1)
    dtype = np.uint8 if widest <= 256 else np.uint16
    indices = np.empty(values.shape, dtype=dtype, order="F")
    for j in range(mapper.n_features):
        indices[:, j] = np.searchsorted(mapper.edges[j], values[:, j], side="left")
    target = d.target if isinstance(d, Dataset) else None
    return BinnedDataset(indices, mapper, target)
