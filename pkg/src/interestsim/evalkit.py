"""Experiment protocol and correlation-study machinery: splits, metrics,
mean-threshold binarization, bucketed similarity tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import mlcore
from .corpus import Corpus
from .mlcore import DesignMatrix
from .pairfeat import SampleTable


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    fraction: float
    seed: int


def train_test_split(n: int, fraction: float = 0.7, seed: int = 0) -> Split:
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    cut = int(round(fraction * n))
    return Split(train=np.sort(perm[:cut]), test=np.sort(perm[cut:]), fraction=fraction, seed=seed)


@dataclass(frozen=True)
class BinaryLabeling:
    threshold: float  # mean of the training similarities
    labels: np.ndarray  # 1 iff similarity strictly above the threshold

    @classmethod
    def from_similarities(cls, train_sims: np.ndarray, sims: np.ndarray) -> "BinaryLabeling":
        threshold = float(np.mean(train_sims))
        return cls(threshold, (np.asarray(sims) > threshold).astype(float))


def auc(scores, labels) -> float:
    """Mann-Whitney rank statistic; tied scores earn half credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must align")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    u = float(ranks[labels].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def reduced_mae_ratio(pred, target, train_mean: float) -> float:
    """Percent reduction of MAE against the constant train-mean predictor."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if len(pred) == 0 or len(pred) != len(target):
        raise ValueError("pred and target must be non-empty and aligned")
    baseline = float(np.mean(np.abs(target - train_mean)))
    if baseline <= 0:
        raise ValueError("constant-estimator MAE is zero; target is degenerate")
    mae = float(np.mean(np.abs(target - pred)))
    return 100.0 * (1.0 - mae / baseline)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two aligned vectors of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx <= 0 or vy <= 0:
        raise ValueError("zero variance input")
    return float(dx @ dy) / math.sqrt(vx * vy)


def spearman(x, y) -> float:
    return pearson(rankdata(x), rankdata(y))


# -- bucketed similarity tables --------------------------------------------


@dataclass
class BucketTable:
    key: str
    rows: list[tuple[str, float, int, float]]  # (bucket, mean, count, stderr)

    def counts_total(self) -> int:
        return sum(r[2] for r in self.rows)

    def as_dict(self) -> dict[str, tuple[float, int, float]]:
        return {r[0]: (r[1], r[2], r[3]) for r in self.rows}

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["bucket", "mean_similarity", "count", "stderr"])
            for bucket, mean, count, stderr in self.rows:
                writer.writerow([bucket, "%.9g" % mean, count, "%.9g" % stderr])


BUCKET_KEYS = (
    "gender",
    "agepair",
    "samecity",
    "friendship",
    "msgcount",
    "msgdays",
    "friendratio",
    "groups_friendship",
    "individuality",
)


def sample_pairs(c: Corpus, n: int, seed: int, among: str = "random") -> tuple[np.ndarray, np.ndarray]:
    """Pairs for a correlation study: uniform ordered pairs, or friend
    edges (message features only exist between friends)."""
    rng = np.random.default_rng(seed)
    if among == "friends":
        edges = sorted(c.friend_edges)
        if not edges:
            raise ValueError("corpus has no friend edges")
        idx = rng.integers(0, len(edges), size=n)
        a = np.asarray([edges[i][0] for i in idx], dtype=np.int64)
        b = np.asarray([edges[i][1] for i in idx], dtype=np.int64)
        return a, b
    if among != "random":
        raise ValueError(f"among must be 'random' or 'friends', got {among!r}")
    ids = np.asarray(c.user_ids, dtype=np.int64)
    if len(ids) < 2:
        raise ValueError("need at least two users")
    a = rng.integers(0, len(ids), size=n)
    shift = rng.integers(1, len(ids), size=n)
    b = (a + shift) % len(ids)
    return ids[a], ids[b]


def _aggregate(keys: list[str], values: np.ndarray, key_name: str) -> BucketTable:
    buckets: dict[str, list[float]] = {}
    for k, v in zip(keys, values):
        buckets.setdefault(k, []).append(float(v))
    rows = []
    for k in sorted(buckets):
        vals = np.asarray(buckets[k])
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        rows.append((k, float(vals.mean()), len(vals), se))
    return BucketTable(key_name, rows)


def _quantile_bins(values: np.ndarray, n_bins: int) -> tuple[np.ndarray, list[str]]:
    edges = np.unique(np.quantile(values, np.linspace(0, 1, n_bins + 1)))
    if len(edges) < 2:
        return np.zeros(len(values), dtype=int), [f"[{edges[0]:g}, {edges[0]:g}]"]
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, len(edges) - 2)
    labels = [
        f"[{edges[i]:g}, {edges[i + 1]:g}{']' if i == len(edges) - 2 else ')'}"
        for i in range(len(edges) - 1)
    ]
    return idx, labels


def bucket_similarity(
    c: Corpus,
    pairs: tuple[np.ndarray, np.ndarray],
    key: str,
    kind: str,
    n_bins: int = 10,
    featurizer=None,
) -> BucketTable:
    """Mean day-0 similarity per bucket of a pair-level feature."""
    from .pairfeat import PairFeaturizer

    a, b = np.asarray(pairs[0]), np.asarray(pairs[1])
    if len(a) == 0:
        raise ValueError("no pairs supplied")
    if key not in BUCKET_KEYS:
        raise ValueError(f"unknown bucket key {key!r}; choose from {BUCKET_KEYS}")
    fz = featurizer if featurizer is not None else PairFeaturizer(c, kind)
    sims = fz.label_similarity(a, b)
    cols = fz.extract_batch(a, b)
    if key == "gender":
        names = np.array(["MM", "MF", "FF"])
        return _aggregate(list(names[cols["gender_pair"].astype(int)]), sims, key)
    if key == "agepair":
        lo = np.minimum(cols["age_target"], cols["age_helper"]).astype(int)
        hi = np.maximum(cols["age_target"], cols["age_helper"]).astype(int)
        return _aggregate([f"{x}-{y}" for x, y in zip(lo, hi)], sims, key)
    if key == "samecity":
        return _aggregate(["same" if v else "different" for v in cols["same_city"]], sims, key)
    if key == "friendship":
        return _aggregate(["friends" if v else "random" for v in cols["friendship"]], sims, key)
    if key == "groups_friendship":
        labels = [
            f"{'friends' if f else 'strangers'}/groups={int(g)}"
            for f, g in zip(cols["friendship"], cols["common_groups"])
        ]
        return _aggregate(labels, sims, key)
    numeric_key = {
        "msgcount": "msg_count_month",
        "msgdays": "msg_days_month",
        "friendratio": "common_friend_ratio",
    }
    if key in numeric_key:
        values = cols[numeric_key[key]]
        idx, labels = _quantile_bins(values, n_bins)
        ordered = [f"{i:02d} {labels[i]}" for i in idx]
        return _aggregate(ordered, sims, key)
    # individuality: product of both sides' day-0 individuality
    from .profiling import ProfileIndex

    base = fz.day0
    ia = base.individuality_values(a)
    ib = base.individuality_values(b)
    values = ia * ib
    idx, labels = _quantile_bins(values, n_bins)
    ordered = [f"{i:02d} {labels[i]}" for i in idx]
    return _aggregate(ordered, sims, key)


# -- protocol ----------------------------------------------------------------


MODEL_DEFAULTS = {
    "tree": {"max_depth": 9, "min_leaf": 20},
    "forest": {"n_trees": 24, "max_depth": 9, "min_leaf": 10, "feature_subsample": "sqrt"},
    "gbdt": {"n_trees": 30, "max_depth": 3, "learning_rate": 0.1, "min_leaf": 10},
}


def fit_model(kind: str, data: DesignMatrix, task: str, folds: int = 10, seed: int = 0, params: dict | None = None):
    """Train one of the six model kinds with protocol defaults."""
    if kind not in mlcore.MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; choose from {mlcore.MODEL_KINDS}")
    link = "logistic" if task == "clf" else "identity"
    params = dict(params or {})
    if kind == "linear":
        return mlcore.fit_linear(data, link, l1_lambda=0.0, max_iter=3000, tol=1e-7)
    if kind == "l1linear":
        model, _ = mlcore.fit_linear_cv(data, link, folds=folds, seed=seed, **params)
        return model
    if kind == "tree":
        opts = {**MODEL_DEFAULTS["tree"], **params}
        full = mlcore.fit_tree(data, task=task, **opts)
        return mlcore.prune_tree(full, data, folds=folds)
    if kind == "forest":
        opts = {**MODEL_DEFAULTS["forest"], **params}
        return mlcore.fit_forest(data, task=task, seed=seed, **opts)
    if kind == "gbdt":
        opts = {**MODEL_DEFAULTS["gbdt"], **params}
        return mlcore.fit_gbdt(data, loss="logistic" if task == "clf" else "squared", seed=seed, **opts)
    gbdt_params = {**MODEL_DEFAULTS["gbdt"], "seed": seed, **params.pop("gbdt_params", {})}
    return mlcore.fit_hybrid(data, task=task, gbdt_params=gbdt_params, folds=folds, **params)


def run_protocol(
    samples: SampleTable,
    model_kind: str,
    task: str,
    seed: int = 0,
    categories=None,
    folds: int = 10,
    train_fraction: float = 0.7,
    params: dict | None = None,
) -> dict:
    """70/30 split, mean-threshold binarization for classification, CV
    inside training for model selection, metric on the held-out test."""
    if task not in ("clf", "reg"):
        raise ValueError(f"task must be 'clf' or 'reg', got {task!r}")
    if samples.labels is None:
        raise ValueError("samples carry no labels")
    X, cat_idx, names = samples.feature_matrix(categories)
    sims = samples.labels
    split = train_test_split(len(samples), train_fraction, seed)
    report: dict = {
        "model": model_kind,
        "task": task,
        "kind": samples.kind,
        "seed": seed,
        "categories": list(categories) if categories is not None else ["demographic", "social", "interest"],
        "n_train": len(split.train),
        "n_test": len(split.test),
    }
    if task == "clf":
        labeling = BinaryLabeling.from_similarities(sims[split.train], sims)
        y = labeling.labels
        report["threshold"] = labeling.threshold
        for part in (split.train, split.test):
            if y[part].min() == y[part].max():
                raise ValueError("AUC needs both classes present")
    else:
        y = sims
    train = DesignMatrix(X[split.train], y[split.train], cat_idx, names)
    model = fit_model(model_kind, train, task, folds=folds, seed=seed, params=params)
    scores = mlcore.predict(model, X[split.test])
    if task == "clf":
        report["auc"] = auc(scores, y[split.test])
    else:
        train_mean = float(np.mean(sims[split.train]))
        report["train_mean"] = train_mean
        report["reduced_mae_pct"] = reduced_mae_ratio(scores, sims[split.test], train_mean)
    if hasattr(model, "chosen_lambda"):
        report["lambda"] = model.chosen_lambda
    elif hasattr(model, "l1_lambda"):
        report["lambda"] = model.l1_lambda
    if hasattr(model, "pruning_alpha") and model.pruning_alpha is not None:
        report["pruning_alpha"] = model.pruning_alpha
    return report, model


CATEGORY_COMBINATIONS = (
    ("interest",),
    ("social",),
    ("demographic",),
    ("social", "demographic"),
    ("interest", "demographic"),
    ("interest", "social"),
    ("interest", "social", "demographic"),
)


def ablation_sweep(samples: SampleTable, task: str = "clf", seed: int = 0, folds: int = 10) -> list[dict]:
    """Pruned-tree protocol over the seven feature-category combinations."""
    out = []
    for combo in CATEGORY_COMBINATIONS:
        report, _ = run_protocol(samples, "tree", task, seed=seed, categories=combo, folds=folds)
        out.append(report)
    return out
