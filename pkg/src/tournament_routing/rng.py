"""Counter-based seed derivation.

Every random quantity in a run is drawn from a generator keyed by
``(master_seed, stream, *counters)``. Window ``t`` of a sweep therefore sees
the same numbers regardless of which other windows ran before it, or in which
process, which keeps results bit-stable under reordering or parallel runs.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

# Stream ids. Changing these changes every published number; append only.
TOPOLOGY = 0
PAIRS = 1
CAPACITY = 2
ROUTING = 3
ANALYTIC_ENSEMBLE = 4


def derive_seed(master_seed: int, stream: int, *counters: int) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream), *map(int, counters)))


def derive_rng(master_seed: int, stream: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stream, *counters))


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept an int, SeedSequence or Generator and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_seed(seed: np.random.SeedSequence, i: int) -> np.random.SeedSequence:
    # built explicitly rather than via spawn(), which mutates the parent
    return np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, int(i)))


def split_seeds(seed: SeedLike, n: int) -> list[np.random.SeedSequence]:
    """Deterministically split one seed into ``n`` independent seed sequences."""
    if isinstance(seed, np.random.Generator):
        # consumes state from the parent, as any draw would
        return [np.random.SeedSequence(int(s)) for s in seed.integers(0, 2**63 - 1, size=n)]
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [child_seed(seed, i) for i in range(n)]


def split(seed: SeedLike, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in split_seeds(seed, n)]
