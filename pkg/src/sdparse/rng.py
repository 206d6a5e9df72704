"""Seeded randomness with named child streams.

Every stream is backed by numpy's Philox bit generator, a counter-based
64-bit algorithm with a fixed, platform-independent output sequence, so
an identical seed plus an identical call sequence reproduces identical
values on any machine. Child streams are derived statelessly from a text
label (hashed into a SeedSequence spawn key), which lets independent
consumers (parameter init, dropout, shuffling, corpus generation) draw
without perturbing each other's sequences.
"""

from __future__ import annotations

import zlib

import numpy as np


class Rng:
    """A deterministic random stream identified by (seed, label path)."""

    def __init__(self, seed: int, _seq: np.random.SeedSequence | None = None):
        self.seed = int(seed)
        self._seq = _seq if _seq is not None else np.random.SeedSequence(self.seed)
        self._gen = np.random.Generator(np.random.Philox(self._seq))

    def child(self, label: str) -> "Rng":
        """Derive an independent stream; the same label always yields the same stream."""
        key = zlib.crc32(label.encode("utf-8"))
        seq = np.random.SeedSequence(
            entropy=self._seq.entropy, spawn_key=tuple(self._seq.spawn_key) + (key,)
        )
        return Rng(self.seed, seq)

    def random(self, size=None) -> np.ndarray:
        return self._gen.random(size=size, dtype=np.float64)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def normal(self, size=None, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        return self._gen.normal(mean, std, size=size)

    def integers(self, low: int, high: int, size=None):
        """Integers drawn uniformly from [low, high)."""
        return self._gen.integers(low, high, size=size)

    def choice(self, seq, p=None):
        idx = self._gen.choice(len(seq), p=p)
        return seq[int(idx)]

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def shuffled(self, items: list) -> list:
        """A shuffled copy; the input list is left untouched."""
        order = self._gen.permutation(len(items))
        return [items[int(i)] for i in order]
