import pytest

from interestsim.corpus import Corpus, UserRecord, VideoRecord
from interestsim.synthgen import GenConfig, generate


def make_corpus(
    users=None,
    videos=None,
    views=(),
    friends=(),
    memberships=(),
    messages=None,
):
    """Hand-built corpus for small exact-value tests."""
    if users is None:
        users = {
            1: UserRecord(1, "M", 20, 0),
            2: UserRecord(2, "F", 25, 0),
            3: UserRecord(3, "F", 30, 1),
            4: UserRecord(4, "M", 35, 1),
        }
    if videos is None:
        videos = {
            10: VideoRecord(10, frozenset({100, 101})),
            11: VideoRecord(11, frozenset({101, 102})),
            12: VideoRecord(12, frozenset({103})),
            13: VideoRecord(13, frozenset({100})),
        }
    return Corpus(
        users=users,
        videos=videos,
        views=set(views),
        friend_edges=set(friends),
        memberships=set(memberships),
        messages=messages or {},
    )


@pytest.fixture(scope="session")
def small_corpus():
    """Seeded synthetic corpus shared by tests that only need realistic shape."""
    corpus, latent = generate(
        GenConfig(seed=11, n_users=300, n_videos=150, n_tags=60, n_topics=8, n_cities=5, n_groups=12)
    )
    return corpus, latent
