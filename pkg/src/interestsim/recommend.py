"""Cold-start top-N recommendation: neighbor selection strategies, list
generation, and accuracy/diversity scoring.

Targets are day-0-active users (so ground truth exists) treated as cold:
every strategy except the oracle sees only their pre-day-0 data and
demographics.  Recommendation lists are the top-N day-0-popular videos
among the selected neighbors.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._util import subrng
from .corpus import Corpus, active_users
from .mlcore import predict as model_predict
from .pairfeat import PairFeaturizer
from .profiling import KINDS, ProfileIndex


@dataclass(frozen=True)
class PredictedSim:
    """Rank candidates by model-predicted similarity to the target."""

    kind: str
    model: object

    def name(self) -> str:
        return f"predicted-{self.kind}"


@dataclass(frozen=True)
class OracleSim:
    """Rank by the true day-0 similarity (upper-bound reference)."""

    kind: str

    def name(self) -> str:
        return f"oracle-{self.kind}"


@dataclass(frozen=True)
class DemographicSim:
    def name(self) -> str:
        return "demo"


@dataclass(frozen=True)
class FriendFilter:
    def name(self) -> str:
        return "friends"


@dataclass(frozen=True)
class PastLongTerm:
    def name(self) -> str:
        return "past"


@dataclass(frozen=True)
class RandomK:
    def name(self) -> str:
        return "random"


@dataclass(frozen=True)
class GlobalPopularity:
    def name(self) -> str:
        return "popular"


@dataclass(frozen=True)
class ExperimentConfig:
    n_targets: int = 2000
    n_candidates: int = 5000
    k_values: tuple[int, ...] = (15,)
    n_values: tuple[int, ...] = tuple(range(10, 101, 10))
    seed: int = 0

    def validate(self) -> None:
        if self.n_targets < 1 or self.n_candidates < 1:
            raise ValueError("n_targets and n_candidates must be >= 1")
        if any(k < 1 for k in self.k_values):
            raise ValueError("K values must be >= 1")
        if any(n < 1 for n in self.n_values):
            raise ValueError("N values must be >= 1")


class RecommenderContext:
    """Shared per-corpus caches: profile indexes and featurizers."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self._day0: dict[str, ProfileIndex] = {}
        self._past: dict[str, ProfileIndex] = {}
        self._featurizers: dict[str, PairFeaturizer] = {}

    def day0_index(self, kind: str) -> ProfileIndex:
        if kind not in self._day0:
            self._day0[kind] = ProfileIndex(self.corpus, (0, 0), kind)
        return self._day0[kind]

    def past_index(self, kind: str) -> ProfileIndex:
        if kind not in self._past:
            self._past[kind] = ProfileIndex(self.corpus, (-30, -1), kind)
        return self._past[kind]

    def featurizer(self, kind: str) -> PairFeaturizer:
        if kind not in self._featurizers:
            self._featurizers[kind] = PairFeaturizer(self.corpus, kind)
        return self._featurizers[kind]


def _top_k(scores: np.ndarray, ids: np.ndarray, k: int) -> list[int]:
    order = np.lexsort((ids, -scores))
    return [int(u) for u in ids[order[:k]]]


def _pair_scores(c: Corpus, target: int, candidates: np.ndarray, strategy, ctx: RecommenderContext) -> np.ndarray:
    t_arr = np.full(len(candidates), target, dtype=np.int64)
    if isinstance(strategy, OracleSim):
        return ctx.day0_index(strategy.kind).similarity_pairs(t_arr, candidates)
    if isinstance(strategy, PredictedSim):
        fz = ctx.featurizer(strategy.kind)
        cols = fz.extract_batch(t_arr, candidates)
        from .pairfeat import SampleTable

        table = SampleTable(strategy.kind, cols, None)
        X, _, _ = table.feature_matrix()
        return model_predict(strategy.model, X)
    if isinstance(strategy, PastLongTerm):
        return ctx.past_index("vbp").similarity_pairs(t_arr, candidates)
    if isinstance(strategy, DemographicSim):
        ut = c.users[target]
        scores = np.zeros(len(candidates))
        for i, v in enumerate(candidates):
            uv = c.users[int(v)]
            scores[i] = (
                (ut.gender == uv.gender)
                + (ut.city == uv.city)
                + (1.0 - abs(ut.age - uv.age) / 30.0)
            )
        return scores
    raise TypeError(f"strategy {strategy!r} does not score candidates")


def select_neighbors(
    c: Corpus,
    target: int,
    candidates,
    strategy,
    k: int,
    rng: np.random.Generator | None = None,
    ctx: RecommenderContext | None = None,
) -> list[int]:
    """Top-K candidate users under the strategy; ties break to lower id."""
    candidates = np.asarray(sorted(int(x) for x in candidates), dtype=np.int64)
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    if target in set(candidates.tolist()):
        raise ValueError("candidates must exclude the target")
    ctx = ctx if ctx is not None else RecommenderContext(c)
    if isinstance(strategy, GlobalPopularity):
        return [int(u) for u in candidates]  # K is irrelevant by design
    if isinstance(strategy, RandomK):
        if rng is None:
            raise ValueError("RandomK needs a seeded generator")
        take = min(k, len(candidates))
        return [int(u) for u in rng.choice(candidates, size=take, replace=False)]
    if isinstance(strategy, FriendFilter):
        friends = c.friends(target) & set(candidates.tolist())
        if not friends:
            return []
        ranked = sorted(friends, key=lambda u: (-c.message_stats(target, u)[1], u))
        return ranked[:k]
    scores = _pair_scores(c, target, candidates, strategy, ctx)
    return _top_k(scores, candidates, k)


def recommend_topn(c: Corpus, neighbors, n: int, ctx: RecommenderContext | None = None) -> list[int]:
    """Videos ranked by day-0 view count among the neighbors, ties by
    ascending video id, truncated at N."""
    counts: Counter[int] = Counter()
    for u in neighbors:
        for m in c.view_set(int(u), (0, 0)):
            counts[m] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [m for m, _ in ranked[:n]]


def accuracy_report(lists: dict[int, list[int]], truth: dict[int, frozenset[int]]) -> tuple[float, float, float]:
    """Micro-averaged precision, recall and F-measure over all targets."""
    if not any(lists.get(t) and truth.get(t) for t in lists):
        raise ValueError("need at least one target with a non-empty list and truth")
    hit = sum(len(set(lists[t]) & truth.get(t, frozenset())) for t in lists)
    total_rec = sum(len(lists[t]) for t in lists)
    total_truth = sum(len(truth.get(t, frozenset())) for t in lists)
    precision = hit / total_rec if total_rec else 0.0
    recall = hit / total_truth if total_truth else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f


def f_measure(lists: dict[int, list[int]], truth: dict[int, frozenset[int]]) -> float:
    return accuracy_report(lists, truth)[2]


def diversification(lists, n: int) -> float:
    """1 - average pairwise list overlap, overlap normalized by N."""
    lists = [list(l) for l in lists]
    t = len(lists)
    if t < 2:
        raise ValueError("diversification needs at least two targets")
    if n < 1:
        raise ValueError("N must be >= 1")
    counts: Counter[int] = Counter()
    for l in lists:
        if len(set(l)) != len(l):
            raise ValueError("recommendation lists must not contain duplicates")
        for m in l:
            counts[m] += 1
    overlap_sum = sum(cnt * (cnt - 1) // 2 for cnt in counts.values())
    return 1.0 - (2.0 * overlap_sum / n) / (t * (t - 1))


def sample_experiment_users(c: Corpus, cfg: ExperimentConfig) -> tuple[list[int], dict[int, np.ndarray]]:
    """Targets (day-0 active) and per-target candidate sets with the
    target's friends force-included."""
    actives = np.asarray(sorted(active_users(c, (0, 0))), dtype=np.int64)
    if len(actives) == 0:
        raise ValueError("no day-0-active users to target")
    rng = subrng(cfg.seed, "recommend.targets")
    n_t = min(cfg.n_targets, len(actives))
    targets = sorted(int(u) for u in rng.choice(actives, size=n_t, replace=False))
    all_ids = np.asarray(c.user_ids, dtype=np.int64)
    rng = subrng(cfg.seed, "recommend.candidates")
    candidates: dict[int, np.ndarray] = {}
    for t in targets:
        pool = all_ids[all_ids != t]
        take = min(cfg.n_candidates, len(pool))
        drawn = set(int(u) for u in rng.choice(pool, size=take, replace=False))
        drawn.update(int(u) for u in c.friends(t))
        drawn.discard(t)
        candidates[t] = np.asarray(sorted(drawn), dtype=np.int64)
    return targets, candidates


def run_experiment(c: Corpus, cfg: ExperimentConfig, strategies) -> list[dict]:
    """F-measure and Diversification across the strategy x K x N grid."""
    cfg.validate()
    targets, candidates = sample_experiment_users(c, cfg)
    ctx = RecommenderContext(c)
    truth = {t: c.view_set(t, (0, 0)) for t in targets}
    max_n = max(cfg.n_values)
    rows = []
    for strategy in strategies:
        for k in cfg.k_values:
            rng = subrng(cfg.seed, f"recommend.randomk.{k}")
            ranked_videos: dict[int, list[int]] = {}
            for t in targets:
                neighbors = select_neighbors(c, t, candidates[t], strategy, k, rng=rng, ctx=ctx)
                ranked_videos[t] = recommend_topn(c, neighbors, max_n, ctx)
            for n in cfg.n_values:
                lists = {t: ranked_videos[t][:n] for t in targets}
                precision, recall, f = accuracy_report(lists, truth)
                div = diversification(list(lists.values()), n)
                rows.append(
                    {
                        "strategy": strategy.name(),
                        "K": k,
                        "N": n,
                        "precision": precision,
                        "recall": recall,
                        "f_measure": f,
                        "diversification": div,
                    }
                )
    return rows


def write_report(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "K", "N", "precision", "recall", "f_measure", "diversification"])
        for r in rows:
            writer.writerow(
                [
                    r["strategy"],
                    r["K"],
                    r["N"],
                    "%.9g" % r["precision"],
                    "%.9g" % r["recall"],
                    "%.9g" % r["f_measure"],
                    "%.9g" % r["diversification"],
                ]
            )
