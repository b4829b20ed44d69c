"""Gradient boosted regression trees and leaf one-hot encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import DesignMatrix
from .linear import sigmoid
from .tree import Tree, fit_tree


@dataclass
class GbdtModel:
    trees: list[Tree]
    learning_rate: float
    base_score: float
    loss: str  # "squared" or "logistic"
    n_features: int
    seed: int = 0
    train_losses: list[float] = field(default_factory=list)

    @property
    def leaf_counts(self) -> list[int]:
        return [t.n_leaves for t in self.trees]

    @property
    def encoded_width(self) -> int:
        return sum(self.leaf_counts)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got shape {X.shape}")
        score = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def predict(self, X: np.ndarray) -> np.ndarray:
        score = self.decision_function(X)
        if self.loss == "logistic":
            return sigmoid(score)
        return score


def _mean_loss(y: np.ndarray, score: np.ndarray, loss: str) -> float:
    if loss == "squared":
        return float(np.mean((y - score) ** 2)) / 2.0
    return float(np.mean(np.logaddexp(0.0, score) - y * score))


def fit_gbdt(
    data: DesignMatrix,
    n_trees: int = 30,
    max_depth: int = 3,
    learning_rate: float = 0.1,
    loss: str = "squared",
    min_leaf: int = 10,
    seed: int = 0,
) -> GbdtModel:
    """Stagewise regression trees fit to negative loss gradients.

    Squared loss boosts residuals; logistic boosts y - p on the logit
    scale.  The recorded training loss is non-increasing per round for
    any learning rate <= 1.
    """
    if loss not in ("squared", "logistic"):
        raise ValueError(f"loss must be 'squared' or 'logistic', got {loss!r}")
    if n_trees < 0:
        raise ValueError("n_trees must be >= 0")
    if learning_rate < 0:
        raise ValueError("learning_rate must be >= 0")
    y = data.y
    if loss == "logistic":
        if not np.all(np.isin(np.unique(y), (0.0, 1.0))):
            raise ValueError("logistic loss requires binary 0/1 targets")
        p0 = min(max(float(y.mean()), 1e-12), 1 - 1e-12)
        base = math.log(p0 / (1.0 - p0))
    else:
        base = float(y.mean())
    score = np.full(data.n_rows, base)
    model = GbdtModel([], learning_rate, base, loss, data.n_cols, seed)
    model.train_losses.append(_mean_loss(y, score, loss))
    for _ in range(n_trees):
        grad = y - (sigmoid(score) if loss == "logistic" else score)
        stage = DesignMatrix(data.X, grad, data.categorical, data.names)
        tree = fit_tree(stage, max_depth=max_depth, min_leaf=min_leaf, task="reg")
        score += learning_rate * tree.predict(data.X)
        model.trees.append(tree)
        model.train_losses.append(_mean_loss(y, score, loss))
    return model


def encode_leaves(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    """Concatenated one-hot of the leaf each tree routes a row to."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns, got shape {X.shape}")
    width = model.encoded_width
    out = np.zeros((X.shape[0], width))
    offset = 0
    rows = np.arange(X.shape[0])
    for tree, n_leaves in zip(model.trees, model.leaf_counts):
        out[rows, offset + tree.apply(X)] = 1.0
        offset += n_leaves
    return out
