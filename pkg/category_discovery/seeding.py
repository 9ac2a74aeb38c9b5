"""Counter-based seed derivation.

Every random stream in a run descends from one root seed. A sub-seed is the
first 32-bit word generated by ``SeedSequence(root, spawn_key=counters)``,
so the seed of trial ``(i, j, k)`` depends only on the root and its counters
and never on which process or in which order the trial runs.
"""
from __future__ import annotations

from typing import List

import numpy as np  # type: ignore


def derive_seed(root: int, *counters: int) -> int:
    """Return the sub-seed for the given counter path under `root`."""
    sequence = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(c) for c in counters))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def child_sequences(root: int, count: int) -> List[np.random.SeedSequence]:
    """Spawn `count` independent child sequences, one per voter or worker."""
    return np.random.SeedSequence(int(root)).spawn(count)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
