"""Deterministic named substreams from one 64-bit seed.

Every Monte Carlo consumer derives its own generator from (seed, labels),
so results are byte-reproducible regardless of evaluation order or
parallelism, and adding a new consumer never shifts another one's stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(*labels) -> tuple:
    """Stable 128-bit spawn key derived from the label path."""
    h = hashlib.sha256()
    for label in labels:
        h.update(repr(label).encode("utf-8"))
        h.update(b"\x1f")
    digest = h.digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


def rng_stream(seed: int, *labels) -> np.random.Generator:
    """Generator for the substream named by `labels` under `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=stream_key(*labels))
    return np.random.default_rng(ss)
