import math

import numpy as np
import pytest

from interestsim.corpus import UserRecord, VideoRecord
from interestsim.profiling import (
    ProfileIndex,
    build_ptp,
    build_rtp,
    individuality,
    self_similarity_series,
    tag_similarity,
    video_similarity,
)

from conftest import make_corpus


def test_ptp_empty_window():
    c = make_corpus(views=[(1, 10, -20)])
    assert build_ptp(c, 1, (-5, 0)).weights == {}


def test_ptp_counts_videos_per_tag():
    # video 10 carries {100, 101}, video 11 carries {101, 102}
    c = make_corpus(views=[(1, 10, 0), (1, 11, 0)])
    assert build_ptp(c, 1, (0, 0)).weights == {100: 1.0, 101: 2.0, 102: 1.0}


def test_ptp_matches_bruteforce_tally(small_corpus):
    c, _ = small_corpus
    rng = np.random.default_rng(5)
    for u in rng.choice(np.array(c.user_ids), 12, replace=False):
        prof = build_ptp(c, int(u), (-30, 0))
        tally: dict[int, int] = {}
        vids = {m for (uu, m, d) in c.views if uu == int(u)}
        for m in vids:
            for t in c.videos[m].tags:
                tally[t] = tally.get(t, 0) + 1
        assert prof.weights == {t: float(n) for t, n in tally.items()}


def test_rtp_hand_arithmetic():
    # 4 active users; u1 views video A (tag 100 exclusive to u1) plus three
    # videos sharing tag 101 owned by everyone
    users = {i: UserRecord(i, "M", 20, 0) for i in range(1, 5)}
    videos = {
        1: VideoRecord(1, frozenset({100})),
        2: VideoRecord(2, frozenset({101})),
        3: VideoRecord(3, frozenset({101})),
        4: VideoRecord(4, frozenset({101})),
    }
    views = [(1, 1, 0), (1, 2, 0), (1, 3, 0), (1, 4, 0)]
    views += [(u, 2, 0) for u in (2, 3, 4)]
    c = make_corpus(users=users, videos=videos, views=views)
    assert build_ptp(c, 1, (0, 0)).weights == {100: 1.0, 101: 3.0}
    rtp = build_rtp(c, 1, (0, 0))
    # w(100) = 1 * log2(4/1) = 2; w(101) = 3 * log2(4/4) = 0 -> dropped
    assert rtp.weights == {100: 2.0}
    assert rtp.weights.get(101, 0.0) == 0.0


def test_rtp_bounded_by_log_population(small_corpus):
    c, _ = small_corpus
    from interestsim.corpus import active_users

    n_active = len(active_users(c, (0, 0)))
    for u in list(c.user_ids)[:40]:
        ptp = build_ptp(c, u, (0, 0))
        rtp = build_rtp(c, u, (0, 0))
        for t, w in rtp.weights.items():
            assert w <= ptp.weights[t] * math.log2(n_active) + 1e-12


def test_tag_similarity_exact_values():
    c = make_corpus(views=[(1, 10, 0), (1, 11, 0)])
    p = build_ptp(c, 1, (0, 0))
    assert tag_similarity(p, p) == pytest.approx(1.0, abs=1e-12)
    q = build_ptp(c, 2, (0, 0))  # empty
    assert tag_similarity(p, q) == 0.0


def test_tag_similarity_hand_arithmetic():
    from interestsim.profiling import TagProfile

    p = TagProfile(1, (0, 0), "ptp", {1: 1.0, 2: 2.0})
    q = TagProfile(2, (0, 0), "ptp", {2: 1.0, 3: 1.0})
    assert tag_similarity(p, q) == pytest.approx(2 / math.sqrt(10), abs=1e-12)


def test_tag_similarity_kind_mismatch():
    from interestsim.profiling import TagProfile

    p = TagProfile(1, (0, 0), "ptp", {1: 1.0})
    q = TagProfile(2, (0, 0), "rtp", {1: 1.0})
    with pytest.raises(ValueError):
        tag_similarity(p, q)


def test_tag_similarity_scale_invariance():
    from interestsim.profiling import TagProfile

    rng = np.random.default_rng(0)
    for _ in range(50):
        tags = rng.choice(30, size=8, replace=False)
        wa = {int(t): float(w) for t, w in zip(tags[:5], rng.random(5) * 5 + 0.1)}
        wb = {int(t): float(w) for t, w in zip(tags[2:], rng.random(6) * 5 + 0.1)}
        p = TagProfile(1, (0, 0), "ptp", wa)
        q = TagProfile(2, (0, 0), "ptp", wb)
        scale = float(rng.random() * 10 + 0.01)
        ps = TagProfile(1, (0, 0), "ptp", {t: w * scale for t, w in wa.items()})
        assert tag_similarity(p, q) == pytest.approx(tag_similarity(ps, q), abs=1e-12)
        assert tag_similarity(p, q) == pytest.approx(tag_similarity(q, p), abs=1e-12)


def test_video_similarity_values():
    c = make_corpus(views=[(1, 10, 0), (1, 11, 0), (2, 11, 0), (2, 12, 0), (3, 10, 0), (3, 11, 0)])
    assert video_similarity(c, 1, 3, (0, 0)) == pytest.approx(1.0)
    assert video_similarity(c, 1, 2, (0, 0)) == pytest.approx(0.5)
    assert video_similarity(c, 1, 4, (0, 0)) == 0.0


def test_individuality_exact_values():
    # one video carrying one tag, viewed by every user -> H = 1
    users = {i: UserRecord(i, "M", 20, 0) for i in (1, 2)}
    videos = {10: VideoRecord(10, frozenset({100}))}
    c = make_corpus(users=users, videos=videos, views=[(1, 10, 0), (2, 10, 0)])
    assert individuality(c, 1, "ptp", (0, 0)).value == pytest.approx(1.0)
    # profile {t: 3} with tag owned by half the active users -> 0.5
    users = {i: UserRecord(i, "M", 20, 0) for i in (1, 2, 3, 4)}
    videos = {
        10: VideoRecord(10, frozenset({100})),
        11: VideoRecord(11, frozenset({100})),
        12: VideoRecord(12, frozenset({100})),
        13: VideoRecord(13, frozenset({200})),
    }
    views = [(1, 10, 0), (1, 11, 0), (1, 12, 0), (2, 10, 0), (3, 13, 0), (4, 13, 0)]
    c = make_corpus(users=users, videos=videos, views=views)
    assert build_ptp(c, 1, (0, 0)).weights == {100: 3.0}
    assert individuality(c, 1, "ptp", (0, 0)).value == pytest.approx(0.5)


def test_individuality_empty_profile_zero():
    c = make_corpus(views=[(1, 10, 0)])
    assert individuality(c, 2, "ptp", (0, 0)).value == 0.0


def test_individuality_nonnegative_and_cauchy_schwarz_bounded(small_corpus):
    c, _ = small_corpus
    for kind in ("ptp", "rtp"):
        idx = ProfileIndex(c, (0, 0), kind)
        vals = idx.individuality_values(np.array(c.user_ids))
        profile_sizes = np.asarray((idx.W != 0).sum(axis=1)).ravel()
        assert np.all(vals >= 0)
        assert np.all(vals <= np.sqrt(np.maximum(profile_sizes, 1)) + 1e-12)


def test_self_similarity_lag_zero_and_static_user():
    views = [(1, 10, d) for d in range(-30, 1)]
    c = make_corpus(views=views)
    series = self_similarity_series(c, 1, "ptp", [0, 1, 5, 30])
    assert all(v == pytest.approx(1.0) for v in series)


def test_self_similarity_absent_when_inactive():
    c = make_corpus(views=[(1, 10, 0), (1, 11, -2)])
    series = self_similarity_series(c, 1, "ptp", [1, 2])
    assert series[0] is None
    assert series[1] is not None


def test_generalization_video_implies_tag_overlap(small_corpus):
    c, _ = small_corpus
    idx_v = ProfileIndex(c, (0, 0), "vbp")
    idx_p = ProfileIndex(c, (0, 0), "ptp")
    rng = np.random.default_rng(4)
    ids = np.array(c.user_ids)
    a = rng.choice(ids, 4000)
    b = rng.choice(ids, 4000)
    sv = idx_v.similarity_pairs(a, b)
    sp = idx_p.similarity_pairs(a, b)
    assert np.all(sp[sv > 0] > 0)
    for arr in (sv, sp):
        assert np.all(arr >= 0) and np.all(arr <= 1 + 1e-12)


def test_rtp_universal_tag_damped():
    # a tag owned by every active user adds nothing to RTP similarity
    users = {i: UserRecord(i, "M", 20, 0) for i in (1, 2)}
    videos = {
        10: VideoRecord(10, frozenset({100})),
        11: VideoRecord(11, frozenset({100, 200})),
        12: VideoRecord(12, frozenset({100, 300})),
    }
    c = make_corpus(users=users, videos=videos, views=[(1, 10, 0), (1, 11, 0), (2, 10, 0), (2, 12, 0)])
    r1 = build_rtp(c, 1, (0, 0))
    r2 = build_rtp(c, 2, (0, 0))
    assert 100 not in r1.weights and 100 not in r2.weights
    assert tag_similarity(r1, r2) == 0.0  # only disjoint rare tags remain
