"""Reproducible random streams.

Every random quantity in the package is addressed by a root 64-bit seed plus
a path of integers, e.g. ``stream(seed, TRAIN, step, Z_NOISE)``.  The path is
folded into a :class:`numpy.random.SeedSequence` spawn key and drives a
Philox (counter-based) bit generator, so any sub-stream can be regenerated
without replaying the ones before it.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-12

# Stream tags. Kept as small ints because spawn keys must be integers.
TRAIN = 1
PROBE = 2
DIAG = 3
CV_INIT = 4
GRAPH = 5
DATA = 6
VAL_DATA = 7
BASELINE = 8
THETA_INIT = 9

Z_NOISE = 0
COND_NOISE = 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def clamp_uniform(v):
    """Clamp uniforms into ``[EPS, 1 - EPS]`` so Gumbel transforms stay finite."""
    return np.clip(v, EPS, 1.0 - EPS)


def uniform_seeds(rng: np.random.Generator, shape) -> np.ndarray:
    return clamp_uniform(rng.random(shape))
