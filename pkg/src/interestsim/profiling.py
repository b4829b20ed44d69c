"""Tag-based and video-based user interest profiles and their similarities.

Two tag weighting schemes are supported: ``ptp`` weights a tag by the
number of viewed videos carrying it, ``rtp`` additionally damps tags that
are popular across the whole active population (TF-IDF style).  ``vbp``
profiles are the raw viewed-video sets.  Population statistics (active
user count, per-tag owner counts) are always computed over the same day
window as the profiles themselves.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Window, active_users, check_window

KINDS = ("ptp", "rtp", "vbp")
TAG_KINDS = ("ptp", "rtp")


@dataclass(frozen=True)
class TagProfile:
    owner: int
    window: Window
    kind: str  # "ptp" or "rtp"
    weights: dict[int, float]  # tag id -> weight > 0; absent tags weigh 0


@dataclass(frozen=True)
class VideoProfile:
    owner: int
    window: Window
    videos: frozenset[int]


@dataclass(frozen=True)
class Individuality:
    user: int
    kind: str
    value: float  # >= 0; 0 for an empty profile, at most sqrt(profile size)


def _window_population(c: Corpus, window: Window) -> tuple[int, dict[int, int]]:
    """Active-user count and per-tag owner counts over ``window``."""
    actives = active_users(c, window)
    counts: dict[int, int] = {}
    for u in actives:
        tags: set[int] = set()
        for m in c.view_set(u, window):
            tags.update(c.videos[m].tags)
        for t in tags:
            counts[t] = counts.get(t, 0) + 1
    return len(actives), counts


def build_ptp(c: Corpus, u: int, window: Window) -> TagProfile:
    """Profile weighting tag i by the count of viewed videos tagged i."""
    if u not in c.users:
        raise KeyError(f"unknown user {u}")
    check_window(window)
    counter: Counter[int] = Counter()
    for m in c.view_set(u, window):
        counter.update(c.videos[m].tags)
    return TagProfile(u, window, "ptp", {t: float(n) for t, n in counter.items()})


def build_rtp(c: Corpus, u: int, window: Window) -> TagProfile:
    """PTP weights damped by log2(|U| / |U_i|) over the same window.

    Tags owned by every active user get an exact-zero weight and are
    dropped from the map.
    """
    ptp = build_ptp(c, u, window)
    n_active, counts = _window_population(c, window)
    weights: dict[int, float] = {}
    for t, w in ptp.weights.items():
        factor = math.log2(n_active / counts[t])
        if factor > 0.0:
            weights[t] = w * factor
    return TagProfile(u, window, "rtp", weights)


def build_vbp(c: Corpus, u: int, window: Window) -> VideoProfile:
    if u not in c.users:
        raise KeyError(f"unknown user {u}")
    return VideoProfile(u, window, c.view_set(u, window))


def tag_similarity(p: TagProfile, q: TagProfile) -> float:
    """Cosine similarity of two weight vectors; 0 if either has zero norm."""
    if p.kind != q.kind:
        raise ValueError(f"profile kind mismatch: {p.kind} vs {q.kind}")
    if not p.weights or not q.weights:
        return 0.0
    dot = sum(w * q.weights[t] for t, w in p.weights.items() if t in q.weights)
    np_ = math.sqrt(sum(w * w for w in p.weights.values()))
    nq = math.sqrt(sum(w * w for w in q.weights.values()))
    if np_ == 0.0 or nq == 0.0:
        return 0.0
    return dot / (np_ * nq)


def video_similarity(c: Corpus, u: int, v: int, window: Window) -> float:
    """|I_u ∩ I_v| / (sqrt(|I_u|) * sqrt(|I_v|)); 0 if either set is empty."""
    su = c.view_set(u, window)
    sv = c.view_set(v, window)
    if not su or not sv:
        return 0.0
    return len(su & sv) / (math.sqrt(len(su)) * math.sqrt(len(sv)))


def individuality(c: Corpus, u: int, kind: str, window: Window) -> Individuality:
    """Expected affinity of a user's profile to the active population.

    For tag kinds this is sum_i w_i * |U_i| / (||w||_2 * |U|); for ``vbp``
    the same formula with per-video viewer counts over binary weights.
    Empty profile yields 0.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown profile kind {kind!r}")
    if kind == "vbp":
        vids = c.view_set(u, window)
        if not vids:
            return Individuality(u, kind, 0.0)
        actives = active_users(c, window)
        viewer_counts = Counter()
        for a in actives:
            for m in c.view_set(a, window):
                viewer_counts[m] += 1
        num = sum(viewer_counts[m] for m in vids)
        return Individuality(u, kind, num / (math.sqrt(len(vids)) * len(actives)))
    profile = build_ptp(c, u, window) if kind == "ptp" else build_rtp(c, u, window)
    if not profile.weights:
        return Individuality(u, kind, 0.0)
    n_active, counts = _window_population(c, window)
    num = sum(w * counts[t] for t, w in profile.weights.items())
    norm = math.sqrt(sum(w * w for w in profile.weights.values()))
    return Individuality(u, kind, num / (norm * n_active))


def self_similarity_series(
    c: Corpus, u: int, kind: str, lags: list[int]
) -> list[float | None]:
    """Cosine between the day-0 profile and each day-(-lag) profile.

    Entries are None where the user is inactive on that lag day (or on
    day 0, in which case every entry is None).
    """
    if kind not in TAG_KINDS:
        raise ValueError(f"self-similarity is defined for tag kinds, got {kind!r}")
    build = build_ptp if kind == "ptp" else build_rtp
    current = build(c, u, (0, 0))
    out: list[float | None] = []
    for lag in lags:
        if lag < 0 or -lag < -30:
            raise ValueError(f"lag {lag} outside [0, 30]")
        if not current.weights:
            out.append(None)
            continue
        past = build(c, u, (-lag, -lag))
        out.append(tag_similarity(current, past) if past.weights else None)
    return out


class ProfileIndex:
    """Sparse user-by-item weight matrix for one (window, kind) pair.

    Rows follow ``corpus.user_ids`` order and include inactive users as
    empty rows, so the same row indexing works across windows.  Columns
    are sorted tag ids for tag kinds and sorted video ids for ``vbp``.
    """

    def __init__(self, corpus: Corpus, window: Window, kind: str):
        if kind not in KINDS:
            raise ValueError(f"unknown profile kind {kind!r}")
        check_window(window)
        self.corpus = corpus
        self.window = window
        self.kind = kind
        self.user_ids = np.asarray(corpus.user_ids, dtype=np.int64)
        self.row_of = {u: i for i, u in enumerate(corpus.user_ids)}

        lo, hi = window
        rows, cols = [], []
        if kind == "vbp":
            items = sorted(corpus.videos)
        else:
            items = sorted(corpus.tag_vocab)
        self.item_ids = np.asarray(items, dtype=np.int64)
        item_col = {m: j for j, m in enumerate(items)}

        if kind == "vbp":
            for u, days in corpus.views_by_user.items():
                seen: set[int] = set()
                for d, vids in days.items():
                    if lo <= d <= hi:
                        seen.update(vids)
                r = self.row_of[u]
                for m in seen:
                    rows.append(r)
                    cols.append(item_col[m])
            data = np.ones(len(rows), dtype=np.float64)
            W = sp.csr_matrix(
                (data, (rows, cols)), shape=(len(self.user_ids), len(items))
            )
        else:
            vals = []
            for u, days in corpus.views_by_user.items():
                seen = set()
                for d, vids in days.items():
                    if lo <= d <= hi:
                        seen.update(vids)
                if not seen:
                    continue
                counter: Counter[int] = Counter()
                for m in seen:
                    counter.update(corpus.videos[m].tags)
                r = self.row_of[u]
                for t, n in counter.items():
                    rows.append(r)
                    cols.append(item_col[t])
                    vals.append(float(n))
            W = sp.csr_matrix(
                (np.asarray(vals), (rows, cols)),
                shape=(len(self.user_ids), len(items)),
            )

        active_rows = np.asarray((W != 0).sum(axis=1)).ravel() > 0
        self.active_mask = active_rows
        self.n_active = int(active_rows.sum())
        # per-item owner counts |U_i| (owners are active by construction)
        self.item_user_counts = np.asarray((W != 0).sum(axis=0)).ravel().astype(np.int64)

        self.ptp_matrix = W if kind != "vbp" else None
        if kind == "rtp":
            factor = np.zeros(len(items))
            owned = self.item_user_counts > 0
            factor[owned] = np.log2(self.n_active / self.item_user_counts[owned])
            W = W.multiply(factor[np.newaxis, :]).tocsr()
            W.eliminate_zeros()
        self.W = W
        norms = np.sqrt(np.asarray(self.W.multiply(self.W).sum(axis=1)).ravel())
        self.row_norms = norms
        inv = np.zeros_like(norms)
        nz = norms > 0
        inv[nz] = 1.0 / norms[nz]
        self.W_normalized = sp.diags(inv) @ self.W

    def rows_for(self, user_ids) -> np.ndarray:
        return np.asarray(
            [self.row_of[int(u)] for u in np.asarray(user_ids).ravel()], dtype=np.int64
        )

    def similarity_pairs(self, users_a, users_b) -> np.ndarray:
        """Pairwise similarity for aligned id arrays (vectorized)."""
        ra = self.rows_for(users_a)
        rb = self.rows_for(users_b)
        A = self.W_normalized[ra]
        B = self.W_normalized[rb]
        return np.asarray(A.multiply(B).sum(axis=1)).ravel()

    def is_active(self, user_ids) -> np.ndarray:
        return self.active_mask[self.rows_for(user_ids)]

    def individuality_values(self, user_ids) -> np.ndarray:
        """Vectorized individuality; 0 for empty profiles."""
        rows = self.rows_for(user_ids)
        counts = self.item_user_counts.astype(np.float64)
        num = np.asarray(self.W[rows] @ counts).ravel()
        norms = self.row_norms[rows]
        out = np.zeros(len(rows))
        nz = norms > 0
        out[nz] = num[nz] / (norms[nz] * self.n_active)
        return out
