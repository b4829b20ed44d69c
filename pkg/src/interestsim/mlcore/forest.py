"""Random forests: bagged trees with per-split feature subsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DesignMatrix
from .tree import Tree, _assign_leaf_indices, _grow


@dataclass
class ForestModel:
    trees: list[Tree]
    task: str
    n_features: int
    seed: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Mean tree output (mean class probability for classification)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got shape {X.shape}")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def _pool_size(spec, p: int) -> int:
    if spec is None:
        return p
    if spec == "sqrt":
        return max(1, int(round(math.sqrt(p))))
    k = max(1, int(round(float(spec) * p)))
    return min(k, p)


def fit_forest(
    data: DesignMatrix,
    n_trees: int = 30,
    max_depth: int = 10,
    min_leaf: int = 5,
    feature_subsample="sqrt",
    bootstrap: bool = True,
    seed: int = 0,
    task: str = "reg",
) -> ForestModel:
    """Seeded bagging; one tree with no bootstrap and no subsampling
    reproduces fit_tree exactly."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if data.n_rows == 0:
        raise ValueError("cannot fit a forest on empty data")
    p = data.n_cols
    k = _pool_size(feature_subsample, p)
    children = np.random.SeedSequence(seed).spawn(n_trees)
    trees: list[Tree] = []
    categorical = set(data.categorical)
    for child in children:
        rng = np.random.default_rng(child)
        if bootstrap:
            idx = rng.integers(0, data.n_rows, size=data.n_rows)
        else:
            idx = np.arange(data.n_rows)
        if k < p:
            def pool(r, _k=k, _p=p):
                return np.sort(r.choice(_p, size=_k, replace=False))
        else:
            pool = None
        root = _grow(
            data.X, data.y, idx, 0, max_depth, min_leaf, task, categorical,
            feature_pool=pool, rng=rng,
        )
        _assign_leaf_indices(root)
        trees.append(Tree(root, task, max_depth, min_leaf, p, data.categorical))
    return ForestModel(trees, task, p, seed)
