"""Deterministic seed derivation.

Child seeds are mixed from a master seed plus fixed integer path components,
so adding a new consumer (another method, another repeat) never shifts the
random streams of existing ones.
"""

from __future__ import annotations

import numpy as np


def derive_seed(master: int, *path: int) -> int:
    """Mix ``master`` with integer path components into a child seed."""
    parts = [int(master), *(int(p) for p in path)]
    if any(p < 0 for p in parts):
        raise ValueError(f"seed components must be nonnegative, got {parts}")
    return int(np.random.SeedSequence(parts).generate_state(1, dtype=np.uint64)[0])
