"""Reproducible random streams and uniform permutation prefixes.

Streams
-------
Every random quantity is drawn from an :class:`RngStream` identified by
``(master_seed, stream_id)``.  The generator behind a stream is numpy's
``PCG64`` (128-bit state) seeded through ``SeedSequence(master_seed,
spawn_key=(stream_id, *path))``; both algorithms are fixed by numpy's
stability guarantees, so a given key yields the same sequence on every
platform.

Monte Carlo code derives stream ids as ``replication * 2**20 + purpose``
(:func:`stream_id`), so replication ``r`` always sees the same numbers no
matter which worker evaluates it or in what order.

Prefixes
--------
Statistics only read the first ``b`` entries of each random permutation, so
only those are generated, by a partial Fisher-Yates shuffle that is
vectorized across many prefixes at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "Purpose",
    "RngStream",
    "draw_bundle",
    "draw_prefix",
    "draw_prefixes",
    "iter_bundles",
    "stream_id",
]

PURPOSE_BITS = 20
#: upper bound on the number of indices materialized per chunk of bundles
CHUNK_ELEMENTS = 1 << 21


class Purpose(enum.IntEnum):
    # base of the TEST/CRITICAL/CONFIDENCE substreams used by one inference call
    INFERENCE = 0
    DATA = 1
    GRAPH = 2
    CRITICAL = 3
    CONFIDENCE = 4
    TEST = 5
    LAMBDA = 6


def stream_id(replication: int, purpose: int) -> int:
    if not 0 <= purpose < (1 << PURPOSE_BITS):
        raise ValueError("purpose code out of range")
    if replication < 0:
        raise ValueError("replication index must be non-negative")
    return (int(replication) << PURPOSE_BITS) + int(purpose)


@dataclass
class RngStream:
    """Single-owner random stream keyed by ``(seed, stream_id, *path)``."""

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def for_replication(cls, seed: int, replication: int, purpose: int) -> "RngStream":
        return cls(seed, stream_id(replication, purpose))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def substream(self, code: int) -> "RngStream":
        """Fresh stream keyed under this one; independent of this stream's position."""
        return RngStream(self.seed, self.stream_id, (*self.path, int(code)))

    def fresh(self) -> "RngStream":
        """Same key, rewound to the start."""
        return RngStream(self.seed, self.stream_id, self.path)


def _check(n: int, b: int) -> None:
    if b < 1:
        raise ValueError(f"prefix length must be positive, got {b}")
    if b > n:
        raise ValueError(f"prefix length b={b} exceeds n={n}")


def draw_prefixes(rng: RngStream, n: int, b: int, count: int) -> np.ndarray:
    """``count`` independent uniform ``b``-prefixes of permutations of ``range(n)``.

    Position ``k`` swaps slot ``k`` with a uniform slot ``j_k`` in ``[k, n)``
    of a virtual identity pool.  Only slots touched by earlier swaps differ
    from the identity, so each pool lookup scans the previous ``k`` swap
    targets instead of materializing the pool.  Exactly ``count * b`` bounded
    integers are consumed.
    """
    _check(n, b)
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.empty((0, b), dtype=np.int64)
    dtype = np.int32 if n < 2 ** 31 else np.int64
    targets = rng.generator.integers(np.arange(b), n, size=(count, b)).astype(dtype).T.copy()
    out = np.empty((b, count), dtype=dtype)
    moved = np.empty((b, count), dtype=dtype)  # value left in slot targets[t] after step t
    for k in range(b):
        j = targets[k]
        val = j.copy()
        at_k = np.full(count, k, dtype=dtype)
        for t in range(k):
            np.copyto(val, moved[t], where=targets[t] == j)
            np.copyto(at_k, moved[t], where=targets[t] == k)
        out[k] = val
        moved[k] = at_k
    return np.ascontiguousarray(out.T)


def draw_prefix(rng: RngStream, n: int, b: int) -> np.ndarray:
    """One uniform ordered ``b``-tuple of distinct indices in ``range(n)``."""
    if b < 2:
        raise ValueError("prefix length must be at least 2")
    return draw_prefixes(rng, n, b, 1)[0]


def draw_bundle(rng: RngStream, n: int, b: int, R: int) -> np.ndarray:
    """``R`` independent prefixes as an ``(R, b)`` integer array."""
    if b < 2:
        raise ValueError("prefix length must be at least 2")
    return draw_prefixes(rng, n, b, R)


def iter_bundles(rng: RngStream, n: int, b: int, R: int, count: int) -> Iterator[np.ndarray]:
    """Yield ``count`` bundles as ``(chunk, R, b)`` arrays.

    Chunk sizes depend only on ``(R, b)``, so the sequence of bundles is a
    pure function of the stream key and the arguments.
    """
    if b < 2:
        raise ValueError("prefix length must be at least 2")
    _check(n, b)
    per_chunk = max(1, CHUNK_ELEMENTS // max(1, R * b))
    done = 0
    while done < count:
        k = min(per_chunk, count - done)
        yield draw_prefixes(rng, n, b, k * R).reshape(k, R, b)
        done += k
