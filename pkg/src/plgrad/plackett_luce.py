"""Plackett-Luce distribution over permutations.

Permutations are 0-indexed integer vectors ``b`` listing items from first
(largest Gumbel key) to last.  Every function accepts a single score vector
of shape ``(k,)`` or a batch ``(B, k)`` and broadcasts against ``b``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch

from ._tensor import as_index, as_tensor
from .gumbel import sample_gumbel, sample_truncated_gumbel

MAX_ENUM_K = 8


def _check_perm(b: torch.Tensor, k: int) -> None:
    if b.shape[-1] != k:
        raise ValueError(f"permutation length {b.shape[-1]} != k={k}")
    ref = torch.arange(k).expand_as(b)
    if not torch.equal(torch.sort(b, dim=-1).values, ref):
        raise ValueError("b is not a permutation of range(k)")


def _broadcast(theta, b):
    theta = as_tensor(theta)
    b = as_index(b)
    if theta.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: theta has {theta.shape[-1]} "
                         f"entries, permutation has {b.shape[-1]}")
    shape = torch.broadcast_shapes(theta.shape, b.shape)
    return theta.expand(shape), b.expand(shape)


def reverse_logcumsumexp(x: torch.Tensor) -> torch.Tensor:
    """``out[..., i] = logsumexp(x[..., i:])``."""
    return torch.flip(torch.logcumsumexp(torch.flip(x, (-1,)), -1), (-1,))


def argsort_desc(z) -> torch.Tensor:
    """Descending argsort; ties go to the lower index."""
    return torch.sort(as_tensor(z), dim=-1, descending=True, stable=True).indices


def invert(b) -> torch.Tensor:
    """Position of each item: ``invert(b)[b[i]] == i``."""
    return torch.argsort(as_index(b), dim=-1)


def normalize(theta) -> torch.Tensor:
    theta = as_tensor(theta)
    return theta - torch.logsumexp(theta, -1, keepdim=True)


def log_prob(theta, b) -> torch.Tensor:
    theta, b = _broadcast(theta, b)
    tb = torch.gather(theta, -1, b)
    return (tb - reverse_logcumsumexp(tb)).sum(-1)


def grad_log_prob(theta, b) -> torch.Tensor:
    """Closed-form score function ``d/dtheta log p(b | theta)``.

    For the item at position ``i`` the coordinate is
    ``1 - sum_{j<=i} exp(theta_{b_i}) / Theta_j`` with
    ``Theta_j = sum_{u>=j} exp(theta_{b_u})``.  Each summand is at most 1,
    so the masked exponentials cannot overflow.
    """
    theta, b = _broadcast(theta, b)
    k = theta.shape[-1]
    with torch.no_grad():
        tb = torch.gather(theta, -1, b)
        log_cum = reverse_logcumsumexp(tb)
        diff = tb.unsqueeze(-1) - log_cum.unsqueeze(-2)
        mask = torch.ones(k, k, dtype=torch.bool).tril()
        diff = diff.masked_fill(~mask, float("-inf"))
        g_pos = 1.0 - torch.exp(diff).sum(-1)
        return torch.zeros_like(theta).scatter(-1, b, g_pos)


def sample(theta, seeds):
    """Gumbel-argsort sampler.

    Returns ``(b, z)`` with ``z_i = theta_i - log(-log v_i)`` and ``b`` the
    descending order of ``z``.  ``z`` stays attached to ``theta``'s graph.
    """
    theta = as_tensor(theta)
    z = sample_gumbel(theta, seeds)
    return argsort_desc(z.detach()), z


@dataclass
class ConditionalGumbelDraw:
    z_tilde: torch.Tensor
    # Theta_i = sum_{j>=i} exp(theta_{b_j}) on normalized scores, in position order.
    cumulative_scores: torch.Tensor
    seeds: torch.Tensor
    # logsumexp(theta); z_tilde lives on the unnormalized location scale.
    shift: torch.Tensor


def sample_conditional(theta, b, seeds, validate: bool = True) -> ConditionalGumbelDraw:
    """Reparametrized draw of Gumbel keys ``z`` conditioned on ``argsort(z) = b``.

    The chain runs on normalized scores: the first key is a standard Gumbel
    and the key at position ``i`` is a Gumbel with location ``log Theta_i``
    truncated at the key of position ``i - 1``.  Adding back
    ``logsumexp(theta)`` maps the draw onto the keys of ``Gumbel(theta)``,
    so ``(b, z_tilde)`` has the same joint law as ``(argsort z, z)``.
    ``seeds[..., i]`` drives position ``i``.  Differentiable in ``theta``.
    """
    theta, b = _broadcast(theta, b)
    v = as_tensor(seeds)
    shape = torch.broadcast_shapes(theta.shape, v.shape)
    theta, b, v = theta.expand(shape), b.expand(shape), v.expand(shape)
    if validate:
        _check_perm(b, theta.shape[-1])
    shift = torch.logsumexp(theta, -1, keepdim=True)
    tb = torch.gather(theta - shift, -1, b)
    log_cum = reverse_logcumsumexp(tb)

    keys = [sample_gumbel(0.0, v[..., 0])]
    for i in range(1, theta.shape[-1]):
        keys.append(sample_truncated_gumbel(log_cum[..., i], keys[-1], v[..., i]))
    z_pos = torch.stack(keys, -1) + shift
    z_tilde = torch.gather(z_pos, -1, invert(b))
    return ConditionalGumbelDraw(z_tilde, torch.exp(log_cum), v, shift.squeeze(-1))


def mode(theta) -> torch.Tensor:
    return argsort_desc(theta)


@lru_cache(maxsize=None)
def _perms(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.int64).reshape(-1, k)


def all_permutations(k: int) -> np.ndarray:
    """All ``k!`` permutations in lexicographic order, shape ``(k!, k)``."""
    if k > MAX_ENUM_K:
        raise ValueError(f"enumeration limited to k <= {MAX_ENUM_K}, got k={k}")
    return _perms(k)


def enumerate_distribution(theta):
    """Exact distribution as ``(perms, probs)``, perms in lexicographic order."""
    theta = as_tensor(theta).detach()
    perms = all_permutations(theta.shape[-1])
    probs = torch.exp(log_prob(theta, perms))
    return perms, probs.numpy()
