"""Linear Gaussian SEM simulation: ``X = W^T X + eps`` with ``eps ~ N(0, I)``."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import rng as rngmod
from .graphs import Dag


@dataclass(frozen=True)
class WeightedSem:
    w: np.ndarray  # (k, k); w[i, j] is the coefficient of X_i in X_j
    dag: Dag


def sample_sem(sem: WeightedSem, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. rows, each variable filled in topological order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = sem.w.shape[0]
    noise = rng.standard_normal((n, k))
    x = np.zeros((n, k))
    for j in sem.dag.topological_order():
        x[:, j] = x @ sem.w[:, j] + noise[:, j]
    return x


def gen_sem_data(dag: Dag, n: int, seed: int):
    """Weights ``U([-2, -0.5] u [0.5, 2])`` on the edges of ``dag`` plus ``n`` samples."""
    g = rngmod.stream(seed, rngmod.DATA)
    mag = g.uniform(0.5, 2.0, dag.adjacency.shape)
    sign = np.where(g.random(dag.adjacency.shape) < 0.5, -1.0, 1.0)
    sem = WeightedSem(dag.adjacency * mag * sign, dag)
    return sem, sample_sem(sem, n, rngmod.stream(seed, rngmod.DATA, 1))


def write_data(x: np.ndarray, path) -> None:
    np.savetxt(Path(path), x, delimiter=",", fmt="%.17g")


def read_data(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(Path(path), delimiter=",", dtype=np.float64))
