"""Counter-based random streams keyed by (master seed, domain, unit index).

Every independent work unit (a block of trials, a chunk of walkers) draws from
its own Philox stream, so results do not depend on how units are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

TRIALS = 0
WALKERS = 1
MOMENTS = 2


def stream(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def worker_count() -> int:
    """Worker cap from ``NANOSENTRY_THREADS`` (default 1)."""
    raw = os.environ.get("NANOSENTRY_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"NANOSENTRY_THREADS must be an integer, got {raw!r}") from None
