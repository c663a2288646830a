"""Continuous relaxation of the descending sort onto unimodal row-stochastic matrices."""

from __future__ import annotations

import torch

from ._tensor import as_index, as_tensor
from .plackett_luce import _check_perm


def relaxed_permutation_matrix(z, tau) -> torch.Tensor:
    """Relaxed sort matrix ``sigma(z, tau)``, shape ``(..., k, k)``.

    Row ``i`` (1-based) is ``softmax_j([(k + 1 - 2i) z_j - sum_l |z_j - z_l|] / tau)``.
    Its argmax is the item ranked ``i``-th in descending order, and rows
    collapse onto the hard sort matrix as ``tau -> 0``.
    """
    z = as_tensor(z)
    tau = as_tensor(tau)
    if torch.any(tau <= 0):
        raise ValueError("tau must be positive")
    k = z.shape[-1]
    spread = (z.unsqueeze(-1) - z.unsqueeze(-2)).abs().sum(-1)
    scale = (k + 1 - 2 * torch.arange(1, k + 1, dtype=z.dtype))
    logits = scale.unsqueeze(-1) * z.unsqueeze(-2) - spread.unsqueeze(-2)
    if tau.dim():
        tau = tau[..., None, None]
    return torch.softmax(logits / tau, -1)


def hard_permutation_matrix(b, validate: bool = True) -> torch.Tensor:
    """Binary matrix with ones at ``(i, b_i)``; batched over leading dims."""
    b = as_index(b)
    k = b.shape[-1]
    if validate:
        _check_perm(b, k)
    out = torch.zeros(*b.shape, k, dtype=torch.float64)
    return out.scatter(-1, b.unsqueeze(-1), 1.0)
