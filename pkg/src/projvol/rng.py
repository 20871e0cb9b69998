"""Seeded-randomness contract: splittable, reproducible streams.

Every randomized component owns an :class:`RngState` derived from the
experiment seed plus a structured key (replica index, role, round, ...).
Identical (seed, key) pairs always produce identical draw sequences, and
sibling streams are statistically independent, so parallel replicas are
reproducible from (seed, replica index) alone.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngState:
    """Immutable handle on a deterministic random stream."""

    seed: int
    key: tuple = field(default_factory=tuple)

    def split(self, *key):
        """Child stream; children with distinct keys are independent."""
        return RngState(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self):
        """Fresh numpy Generator at the start of this stream.

        Calling twice returns generators that replay the same sequence;
        hold on to one generator when consuming a stream incrementally.
        """
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def stream(seed, *key):
    """Shorthand for RngState(seed).split(*key).generator()."""
    return RngState(int(seed)).split(*key).generator()
