"""Named, reproducible random streams derived from one integer seed."""

from __future__ import annotations

import hashlib

import numpy as np


def _key(part: str | int) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def substream(seed: int, *path: str | int) -> np.random.Generator:
    """Return a generator for the stream named by ``path`` under ``seed``.

    Streams with different paths are statistically independent, and adding a
    new path never changes the numbers drawn from an existing one.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(p) for p in path))
    return np.random.default_rng(seq)
