"""Seed derivation and deterministic fan-out helpers."""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def subseed(seed: int, step: str) -> np.random.SeedSequence:
    """Derive a child seed from (seed, step name).

    Stable across runs and platforms, so adding a new generation step
    never reshuffles the draws of existing ones.
    """
    digest = hashlib.sha256(step.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(words))


def subrng(seed: int, step: str) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, step))


def parallel_map(fn, items: list, threads: int = 1) -> list:
    """Order-preserving map; results are identical for any thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
