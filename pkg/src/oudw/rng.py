"""Random stream derivation.

Every random draw in the package comes from a PCG64 generator whose state is
derived from ``(seed, index)`` through :class:`numpy.random.SeedSequence`
spawn keys. Path ``i`` of an experiment therefore sees the same numbers
whether it runs alone, in a batch, or on another thread.
"""

from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 20110613
SEED_ENV_VAR = "OUDW_SEED"


def default_seed() -> int:
    value = os.environ.get(SEED_ENV_VAR)
    if value is None or value.strip() == "":
        return DEFAULT_SEED
    return int(value)


def stream(seed: int, index: int = 0, domain: int = 0) -> np.random.Generator:
    """Generator for stream ``index`` of ``seed``.

    ``domain`` separates unrelated consumers (path simulation, W sampling)
    that might otherwise reuse the same ``(seed, index)`` pair.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(domain, index))
    return np.random.Generator(np.random.PCG64(ss))


# stream domains
PATHS = 0
W_KL = 1
W_PATH = 2
LAPLACE = 3
