"""Seed plumbing: public APIs take plain ints, internals pass SeedSequences."""
from __future__ import annotations

import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Wrap ints (or int sequences) in a SeedSequence; pass sequences through."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)
