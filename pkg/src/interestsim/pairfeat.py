"""Ten-slot feature records for ordered (target, helper) user pairs.

The target plays the cold-start role: its day-0 behavior is masked from
every feature, including the population statistics behind the helper's
individuality, so day-0 labels can never leak into the inputs.  The
helper is the active side and contributes its day-0 profile.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Window, active_users
from .mlcore.data import DesignMatrix
from .profiling import (
    KINDS,
    ProfileIndex,
    build_ptp,
    build_rtp,
    tag_similarity,
    video_similarity,
    _window_population,
)

PAST_WINDOW: Window = (-30, -1)
DAY0: Window = (0, 0)

GENDER_PAIR_CODES = {"MM": 0.0, "MF": 1.0, "FF": 2.0}

FEATURE_COLUMNS = (
    "gender_pair",
    "age_target",
    "age_helper",
    "city_target",
    "city_helper",
    "same_city",
    "friendship",
    "common_friend_ratio",
    "common_groups",
    "msg_count_month",
    "msg_days_month",
    "past_sim_month",
    "has_past",
    "helper_individuality",
    "has_individuality",
)

CATEGORICAL_COLUMNS = ("gender_pair", "city_target", "city_helper")

FEATURE_CATEGORIES = {
    "demographic": (
        "gender_pair",
        "age_target",
        "age_helper",
        "city_target",
        "city_helper",
        "same_city",
    ),
    "social": (
        "friendship",
        "common_friend_ratio",
        "common_groups",
        "msg_count_month",
        "msg_days_month",
    ),
    "interest": (
        "past_sim_month",
        "has_past",
        "helper_individuality",
        "has_individuality",
    ),
}


@dataclass(frozen=True)
class FeatureRecord:
    gender_pair: str  # canonical unordered: MM / MF / FF
    age_target: int
    age_helper: int
    city_target: int
    city_helper: int
    same_city: bool
    friendship: bool
    common_friend_ratio: float
    common_groups: int
    msg_count_month: int
    msg_days_month: int
    past_sim_month: float
    has_past: bool
    helper_individuality: float
    has_individuality: bool

    def as_row(self) -> list[float]:
        return [
            GENDER_PAIR_CODES[self.gender_pair],
            float(self.age_target),
            float(self.age_helper),
            float(self.city_target),
            float(self.city_helper),
            float(self.same_city),
            float(self.friendship),
            self.common_friend_ratio,
            float(self.common_groups),
            float(self.msg_count_month),
            float(self.msg_days_month),
            self.past_sim_month,
            float(self.has_past),
            self.helper_individuality,
            float(self.has_individuality),
        ]


@dataclass(frozen=True)
class PairSample:
    target: int
    helper: int
    kind: str
    features: FeatureRecord
    label_sim: float | None = None


def canonical_gender_pair(g1: str, g2: str) -> str:
    n_f = (g1 == "F") + (g2 == "F")
    return ("MM", "MF", "FF")[n_f]


def common_friend_ratio(c: Corpus, u: int, v: int) -> float:
    fu = c.friends(u)
    fv = c.friends(v)
    if not fu or not fv:
        return 0.0
    return len(fu & fv) / (math.sqrt(len(fu)) * math.sqrt(len(fv)))


def _masked_individuality(c: Corpus, target: int, helper: int, kind: str) -> tuple[float, bool]:
    """Helper's day-0 individuality with the target removed from the
    active population, so the value is blind to the target's day-0 data."""
    target_videos = c.view_set(target, DAY0)
    target_active = bool(target_videos)
    if kind == "vbp":
        helper_videos = c.view_set(helper, DAY0)
        if not helper_videos:
            return 0.0, False
        actives = active_users(c, DAY0)
        viewer_counts: dict[int, int] = {}
        for a in actives:
            for m in c.view_set(a, DAY0):
                viewer_counts[m] = viewer_counts.get(m, 0) + 1
        n = len(actives) - (1 if target_active else 0)
        if n <= 0:
            return 0.0, True
        num = sum(
            viewer_counts[m] - (1 if m in target_videos else 0) for m in helper_videos
        )
        return num / (math.sqrt(len(helper_videos)) * n), True

    ptp = build_ptp(c, helper, DAY0)
    if not ptp.weights:
        return 0.0, False
    n_active, counts = _window_population(c, DAY0)
    target_tags: set[int] = set()
    for m in target_videos:
        target_tags.update(c.videos[m].tags)
    n = n_active - (1 if target_active else 0)
    if n <= 0:
        return 0.0, True
    masked_counts = {
        t: counts[t] - (1 if t in target_tags else 0) for t in ptp.weights
    }
    if kind == "ptp":
        weights = ptp.weights
    else:
        weights = {}
        for t, w in ptp.weights.items():
            factor = math.log2(n / masked_counts[t]) if masked_counts[t] > 0 else 0.0
            if factor > 0:
                weights[t] = w * factor
    if not weights:
        return 0.0, True
    num = sum(w * masked_counts[t] for t, w in weights.items())
    norm = math.sqrt(sum(w * w for w in weights.values()))
    return num / (norm * n), True


def _past_similarity(c: Corpus, target: int, helper: int, kind: str) -> tuple[float, bool]:
    if kind == "vbp":
        st = c.view_set(target, PAST_WINDOW)
        sh = c.view_set(helper, PAST_WINDOW)
        if not st or not sh:
            return 0.0, False
        return video_similarity(c, target, helper, PAST_WINDOW), True
    build = build_ptp if kind == "ptp" else build_rtp
    pt = build(c, target, PAST_WINDOW)
    ph = build(c, helper, PAST_WINDOW)
    if not pt.weights or not ph.weights:
        return 0.0, False
    return tag_similarity(pt, ph), True


def extract(c: Corpus, target: int, helper: int, kind: str) -> FeatureRecord:
    """Single-pair reference extraction; the batch path must agree exactly."""
    if kind not in KINDS:
        raise ValueError(f"unknown profile kind {kind!r}")
    if target not in c.users:
        raise KeyError(f"unknown user {target}")
    if helper not in c.users:
        raise KeyError(f"unknown user {helper}")
    if target == helper:
        raise ValueError("target and helper must differ")
    ut = c.users[target]
    uh = c.users[helper]
    msg_count, msg_days = c.message_stats(target, helper)
    past_sim, has_past = _past_similarity(c, target, helper, kind)
    indiv, has_indiv = _masked_individuality(c, target, helper, kind)
    key = (min(target, helper), max(target, helper))
    return FeatureRecord(
        gender_pair=canonical_gender_pair(ut.gender, uh.gender),
        age_target=ut.age,
        age_helper=uh.age,
        city_target=ut.city,
        city_helper=uh.city,
        same_city=ut.city == uh.city,
        friendship=key in c.friend_edges,
        common_friend_ratio=common_friend_ratio(c, target, helper),
        common_groups=len(c.groups(target) & c.groups(helper)),
        msg_count_month=msg_count,
        msg_days_month=msg_days,
        past_sim_month=past_sim,
        has_past=has_past,
        helper_individuality=indiv,
        has_individuality=has_indiv,
    )


class PairFeaturizer:
    """Vectorized feature extraction over many pairs of one corpus/kind."""

    def __init__(self, c: Corpus, kind: str):
        if kind not in KINDS:
            raise ValueError(f"unknown profile kind {kind!r}")
        self.corpus = c
        self.kind = kind
        self.day0 = ProfileIndex(c, DAY0, kind)
        self.past = ProfileIndex(c, PAST_WINDOW, kind)
        # day-0 PTP/VBP structure drives individuality for every kind
        self.day0_base = self.day0 if kind in ("ptp", "vbp") else ProfileIndex(c, DAY0, "ptp")

        ids = list(c.user_ids)
        self._ages = np.array([c.users[u].age for u in ids], dtype=np.float64)
        self._cities = np.array([c.users[u].city for u in ids], dtype=np.float64)
        self._is_f = np.array([c.users[u].gender == "F" for u in ids])

        base = self.day0_base
        Wp = base.ptp_matrix if self.kind != "vbp" else base.W
        self._Wp = Wp.tocsr()
        self._own = (self._Wp != 0).astype(np.float64).tocsr()
        counts = base.item_user_counts.astype(np.float64)
        self._counts = counts
        self._num0 = np.asarray(self._Wp @ counts).ravel()
        self._pnorm = np.sqrt(np.asarray(self._Wp.multiply(self._Wp).sum(axis=1)).ravel())
        self._n_active = base.n_active
        if self.kind == "rtp":
            lgc = np.zeros_like(counts)
            owned = counts > 0
            lgc[owned] = np.log2(counts[owned])
            b_ok = counts > 1
            b_col = np.zeros_like(counts)
            b_col[b_ok] = lgc[b_ok] - np.log2(counts[b_ok] - 1.0)
            self._lgc = lgc

            def colscale(cols):
                return self._Wp.multiply(cols[np.newaxis, :]).tocsr()

            P = self._Wp
            self._SA1 = np.asarray(P @ counts).ravel()
            self._SA2 = np.asarray(P @ (counts * lgc)).ravel()
            self._SB1 = np.asarray(P.multiply(P).sum(axis=1)).ravel()
            P2 = P.multiply(P).tocsr()
            self._SB2 = np.asarray(P2 @ lgc).ravel()
            self._SB3 = np.asarray(P2 @ (lgc * lgc)).ravel()
            # per-entry matrices for overlap corrections (B_i = p_i * b_col)
            self._M_p = P
            self._M_plgc = colscale(lgc)
            self._M_Bc1 = colscale(b_col * (counts - 1.0))  # B_i * (c_i - 1) entries are p_i*b*(c-1)
            self._M_pB = P.multiply(colscale(b_col))  # p_i * B_i = p_i^2 * b
            self._M_plgcB = P.multiply(colscale(b_col * lgc))
            self._M_B2 = colscale(b_col).multiply(colscale(b_col))

    def rows(self, user_ids) -> np.ndarray:
        return self.day0.rows_for(user_ids)

    def label_similarity(self, targets, helpers) -> np.ndarray:
        return self.day0.similarity_pairs(targets, helpers)

    def _batch_individuality(self, rt: np.ndarray, rh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        target_active = self.day0_base.active_mask[rt]
        n_masked = self._n_active - target_active.astype(np.float64)
        has = self._pnorm[rh] > 0
        own_t = self._own[rt]
        values = np.zeros(len(rt))
        ok = has & (n_masked > 0)
        if self.kind in ("ptp", "vbp"):
            corr = np.asarray(self._Wp[rh].multiply(own_t).sum(axis=1)).ravel()
            num = self._num0[rh] - corr
            values[ok] = num[ok] / (self._pnorm[rh][ok] * n_masked[ok])
            return values, has
        # rtp: recompute damped weights under the masked population
        L = np.zeros(len(rt))
        pos = n_masked > 0
        L[pos] = np.log2(n_masked[pos])
        ov_p = np.asarray(self._M_p[rh].multiply(own_t).sum(axis=1)).ravel()
        ov_plgc = np.asarray(self._M_plgc[rh].multiply(own_t).sum(axis=1)).ravel()
        ov_Bc1 = np.asarray(self._M_Bc1[rh].multiply(own_t).sum(axis=1)).ravel()
        ov_pB = np.asarray(self._M_pB[rh].multiply(own_t).sum(axis=1)).ravel()
        ov_plgcB = np.asarray(self._M_plgcB[rh].multiply(own_t).sum(axis=1)).ravel()
        ov_B2 = np.asarray(self._M_B2[rh].multiply(own_t).sum(axis=1)).ravel()
        num = (
            L * self._SA1[rh]
            - self._SA2[rh]
            + ov_Bc1
            - L * ov_p
            + ov_plgc
        )
        norm_sq = (
            L * L * self._SB1[rh]
            - 2.0 * L * self._SB2[rh]
            + self._SB3[rh]
            + 2.0 * (L * ov_pB - ov_plgcB)
            + ov_B2
        )
        norm_sq = np.maximum(norm_sq, 0.0)
        norm = np.sqrt(norm_sq)
        good = ok & (norm > 1e-12)
        values[good] = num[good] / (norm[good] * n_masked[good])
        return values, has

    def extract_batch(self, targets, helpers) -> dict[str, np.ndarray]:
        c = self.corpus
        targets = np.asarray(targets, dtype=np.int64)
        helpers = np.asarray(helpers, dtype=np.int64)
        if np.any(targets == helpers):
            raise ValueError("target and helper must differ")
        rt = self.rows(targets)
        rh = self.rows(helpers)

        n_f = self._is_f[rt].astype(np.int64) + self._is_f[rh].astype(np.int64)
        edge_set = c.friend_edges
        friendship = np.fromiter(
            (
                (min(int(a), int(b)), max(int(a), int(b))) in edge_set
                for a, b in zip(targets, helpers)
            ),
            dtype=bool,
            count=len(targets),
        )
        cfr = np.empty(len(targets))
        groups = np.empty(len(targets), dtype=np.int64)
        msg_count = np.empty(len(targets), dtype=np.int64)
        msg_days = np.empty(len(targets), dtype=np.int64)
        friends_of = c.friends_of
        groups_of = c.groups_of
        totals = c.msg_totals
        empty: frozenset[int] = frozenset()
        for i in range(len(targets)):
            a = int(targets[i])
            b = int(helpers[i])
            fa = friends_of.get(a, empty)
            fb = friends_of.get(b, empty)
            if fa and fb:
                cfr[i] = len(fa & fb) / math.sqrt(len(fa) * len(fb))
            else:
                cfr[i] = 0.0
            groups[i] = len(groups_of.get(a, empty) & groups_of.get(b, empty))
            key = (a, b) if a < b else (b, a)
            mc, md = totals.get(key, (0, 0))
            msg_count[i] = mc
            msg_days[i] = md

        past_t_norm = self.past.row_norms[self.past.rows_for(targets)]
        past_h_norm = self.past.row_norms[self.past.rows_for(helpers)]
        has_past = (past_t_norm > 0) & (past_h_norm > 0)
        past_sim = np.zeros(len(targets))
        any_past = np.nonzero(has_past)[0]
        if any_past.size:
            past_sim[any_past] = self.past.similarity_pairs(
                targets[any_past], helpers[any_past]
            )
        indiv, has_indiv = self._batch_individuality(rt, rh)

        return {
            "target": targets,
            "helper": helpers,
            "gender_pair": n_f.astype(np.float64),
            "age_target": self._ages[rt],
            "age_helper": self._ages[rh],
            "city_target": self._cities[rt],
            "city_helper": self._cities[rh],
            "same_city": (self._cities[rt] == self._cities[rh]).astype(np.float64),
            "friendship": friendship.astype(np.float64),
            "common_friend_ratio": cfr,
            "common_groups": groups.astype(np.float64),
            "msg_count_month": msg_count.astype(np.float64),
            "msg_days_month": msg_days.astype(np.float64),
            "past_sim_month": past_sim,
            "has_past": has_past.astype(np.float64),
            "helper_individuality": indiv,
            "has_individuality": has_indiv.astype(np.float64),
        }


class SampleTable:
    """Columnar sequence of PairSample rows."""

    def __init__(self, kind: str, columns: dict[str, np.ndarray], labels: np.ndarray | None):
        self.kind = kind
        self.columns = columns
        self.labels = labels
        self._n = len(columns["target"])

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i: int) -> PairSample:
        cols = self.columns
        code = int(cols["gender_pair"][i])
        rec = FeatureRecord(
            gender_pair=("MM", "MF", "FF")[code],
            age_target=int(cols["age_target"][i]),
            age_helper=int(cols["age_helper"][i]),
            city_target=int(cols["city_target"][i]),
            city_helper=int(cols["city_helper"][i]),
            same_city=bool(cols["same_city"][i]),
            friendship=bool(cols["friendship"][i]),
            common_friend_ratio=float(cols["common_friend_ratio"][i]),
            common_groups=int(cols["common_groups"][i]),
            msg_count_month=int(cols["msg_count_month"][i]),
            msg_days_month=int(cols["msg_days_month"][i]),
            past_sim_month=float(cols["past_sim_month"][i]),
            has_past=bool(cols["has_past"][i]),
            helper_individuality=float(cols["helper_individuality"][i]),
            has_individuality=bool(cols["has_individuality"][i]),
        )
        label = float(self.labels[i]) if self.labels is not None else None
        return PairSample(int(cols["target"][i]), int(cols["helper"][i]), self.kind, rec, label)

    def feature_matrix(self, categories=None) -> tuple[np.ndarray, tuple[int, ...], tuple[str, ...]]:
        if categories is None:
            selected = list(FEATURE_COLUMNS)
        else:
            unknown = set(categories) - set(FEATURE_CATEGORIES)
            if unknown:
                raise ValueError(f"unknown feature categories {sorted(unknown)}")
            selected = [
                name
                for cat in ("demographic", "social", "interest")
                if cat in categories
                for name in FEATURE_CATEGORIES[cat]
            ]
        X = np.column_stack([self.columns[name] for name in selected])
        cat_idx = tuple(i for i, name in enumerate(selected) if name in CATEGORICAL_COLUMNS)
        return X, cat_idx, tuple(selected)

    def to_design(self, categories=None, labels=None) -> DesignMatrix:
        X, cat_idx, names = self.feature_matrix(categories)
        y = labels if labels is not None else self.labels
        if y is None:
            raise ValueError("sample table carries no labels")
        return DesignMatrix(X, y, cat_idx, names)


def extract_columns(fz: PairFeaturizer, targets, helpers, threads: int = 1) -> dict[str, np.ndarray]:
    """Chunked batch extraction; identical output for any thread count."""
    targets = np.asarray(targets, dtype=np.int64)
    helpers = np.asarray(helpers, dtype=np.int64)
    if threads <= 1 or len(targets) < 2 * threads:
        return fz.extract_batch(targets, helpers)
    from ._util import parallel_map

    bounds = np.linspace(0, len(targets), threads + 1).astype(int)
    chunks = [(targets[a:b], helpers[a:b]) for a, b in zip(bounds, bounds[1:]) if b > a]
    parts = parallel_map(lambda tp: fz.extract_batch(*tp), chunks, threads)
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def build_training_set(c: Corpus, n_pairs: int, kind: str, seed: int, threads: int = 1) -> SampleTable:
    """Uniform ordered pairs of day-0-active users with day-0 labels."""
    actives = sorted(active_users(c, DAY0))
    if len(actives) < 2:
        raise ValueError("need at least two day-0-active users")
    rng = np.random.default_rng(seed)
    ids = np.asarray(actives, dtype=np.int64)
    n = len(ids)
    t_idx = rng.integers(0, n, size=n_pairs)
    shift = rng.integers(1, n, size=n_pairs)
    h_idx = (t_idx + shift) % n
    targets = ids[t_idx]
    helpers = ids[h_idx]
    fz = PairFeaturizer(c, kind)
    columns = extract_columns(fz, targets, helpers, threads)
    labels = fz.label_similarity(targets, helpers)
    return SampleTable(kind, columns, labels)


CSV_HEADER = ["target", "helper", "kind", "label_sim", *FEATURE_COLUMNS]

_INT_COLUMNS = {
    "target",
    "helper",
    "age_target",
    "age_helper",
    "city_target",
    "city_helper",
    "same_city",
    "friendship",
    "common_groups",
    "msg_count_month",
    "msg_days_month",
    "has_past",
    "has_individuality",
    "gender_pair",
}


def write_samples(table: SampleTable, path) -> None:
    """Samples as CSV, floats at 9 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        cols = table.columns
        for i in range(len(table)):
            row = [int(cols["target"][i]), int(cols["helper"][i]), table.kind]
            row.append("%.9g" % table.labels[i] if table.labels is not None else "")
            for name in FEATURE_COLUMNS:
                v = cols[name][i]
                row.append(int(v) if name in _INT_COLUMNS else "%.9g" % v)
            writer.writerow(row)


def read_samples(path) -> SampleTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected sample CSV header in {path}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"no samples in {path}")
    kinds = {r[2] for r in rows}
    if len(kinds) != 1:
        raise ValueError(f"mixed profile kinds in {path}: {sorted(kinds)}")
    columns: dict[str, np.ndarray] = {}
    columns["target"] = np.array([int(r[0]) for r in rows], dtype=np.int64)
    columns["helper"] = np.array([int(r[1]) for r in rows], dtype=np.int64)
    labels = None
    if rows[0][3] != "":
        labels = np.array([float(r[3]) for r in rows])
    for j, name in enumerate(FEATURE_COLUMNS, start=4):
        columns[name] = np.array([float(r[j]) for r in rows])
    return SampleTable(kinds.pop(), columns, labels)
