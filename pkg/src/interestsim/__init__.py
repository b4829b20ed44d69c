"""Tag-based interest profiling, similarity prediction and cold-start recommendation."""

__version__ = "0.1.0"

from .corpus import Corpus, active_users, load_corpus, write_corpus
from .synthgen import GenConfig, LatentAssignment, generate

__all__ = [
    "Corpus",
    "GenConfig",
    "LatentAssignment",
    "active_users",
    "generate",
    "load_corpus",
    "write_corpus",
    "__version__",
]
