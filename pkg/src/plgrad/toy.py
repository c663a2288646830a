"""Toy assignment benchmark: ``f(P_b) = ||P_b - P_t||_F^2``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ._tensor import as_tensor
from .objectives import MatrixObjective
from .plackett_luce import all_permutations
from .relaxed_sort import hard_permutation_matrix


@dataclass(frozen=True)
class TargetMatrix:
    k: int
    t: float
    m: np.ndarray


def target_matrix(k: int, t: float) -> TargetMatrix:
    """``1/k + t`` on the diagonal, ``1/k - t/(k-1)`` elsewhere."""
    if k < 2:
        raise ValueError("k must be >= 2")
    off = 1.0 / k - t / (k - 1)
    if off < 0:
        raise ValueError(f"t={t} makes off-diagonal entries negative for k={k}")
    m = np.full((k, k), off)
    np.fill_diagonal(m, 1.0 / k + t)
    return TargetMatrix(k, float(t), m)


def toy_loss(P, target: TargetMatrix):
    """Squared Frobenius distance; batched over leading dims, numpy or torch."""
    if P.shape[-2:] != target.m.shape:
        raise ValueError(f"matrix shape {tuple(P.shape[-2:])} != {target.m.shape}")
    if isinstance(P, torch.Tensor):
        return ((P - as_tensor(target.m)) ** 2).sum((-2, -1))
    return ((np.asarray(P) - target.m) ** 2).sum((-2, -1))


def toy_objective(target: TargetMatrix) -> MatrixObjective:
    return MatrixObjective(lambda P: toy_loss(P, target))


def brute_force_optimum(k: int, t: float):
    """Exhaustive minimum over all ``k!`` permutations (first one on ties)."""
    target = target_matrix(k, t)
    perms = all_permutations(k)
    losses = toy_loss(hard_permutation_matrix(perms, validate=False), target).numpy()
    best = int(np.argmin(losses))
    return perms[best], float(losses[best])
