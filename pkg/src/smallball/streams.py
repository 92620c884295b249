"""Counter-based random streams for reproducible parallel Monte Carlo.

Every unit of work (a trial, a grid cell, a bisection step) derives its own
generator from ``stream(master_seed, *path)``.  The Philox bit generator is
counter-based, so streams for distinct paths are independent, and results do
not depend on scheduling order or thread count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "child_seed", "sign_matrix"]


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for work unit ``path`` under ``master_seed``.

    The same (seed, path) pair always yields the same stream; distinct
    paths yield statistically independent streams.
    """
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(p) for p in path)
    )
    return np.random.Generator(np.random.Philox(ss))


def child_seed(master_seed: int, *path: int) -> int:
    """A u63 seed for a sub-computation that manages its own streams."""
    return int(stream(master_seed, *path).integers(2**63))


def sign_matrix(rng: np.random.Generator, draws: int, n: int) -> np.ndarray:
    """Draw a (draws, n) matrix of independent +-1 signs.

    Shared by every Rademacher-type estimator so that matched seeds mean
    matched sign draws.
    """
    return rng.integers(0, 2, size=(draws, n)).astype(np.float64) * 2.0 - 1.0
