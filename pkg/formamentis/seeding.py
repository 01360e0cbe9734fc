"""Deterministic seed derivation for randomized stages."""

from __future__ import annotations

import numpy as np


def derive_seed(seed: int, index: int) -> int:
    """Independent 32-bit seed for stream ``index`` of a run seeded with ``seed``.

    Streams depend only on (seed, index), never on scheduling order.
    """
    state = np.random.SeedSequence([int(seed), int(index)]).generate_state(1)
    return int(state[0])
