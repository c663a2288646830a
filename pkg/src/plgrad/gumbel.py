"""Gumbel and truncated-Gumbel primitives (unit scale).

All functions accept floats, numpy arrays or float64 tensors, broadcast their
arguments and return tensors, so they can sit inside a differentiable graph.
Uniform seeds are clamped to ``[1e-12, 1 - 1e-12]`` before use.
"""

from __future__ import annotations

import torch

from ._tensor import as_tensor
from .rng import EPS


def _seed(v) -> torch.Tensor:
    return as_tensor(v).clamp(EPS, 1.0 - EPS)


def sample_gumbel(mu, v) -> torch.Tensor:
    """Reparametrized Gumbel(mu, 1) draw: ``mu - log(-log v)``."""
    return as_tensor(mu) - torch.log(-torch.log(_seed(v)))


def sample_truncated_gumbel(mu, z0, v) -> torch.Tensor:
    """Draw from Gumbel(mu, 1) conditioned on ``z <= z0``.

    Inverse-CDF transform ``-log(-log(v) / exp(mu) + exp(-z0))`` evaluated as
    ``-logaddexp(log(-log v) - mu, -z0)``; ``z0 = +inf`` gives the
    untruncated sampler.
    """
    mu = as_tensor(mu)
    z0 = as_tensor(z0)
    return -torch.logaddexp(torch.log(-torch.log(_seed(v))) - mu, -z0)


def log_pdf_gumbel(mu, z) -> torch.Tensor:
    t = as_tensor(mu) - as_tensor(z)
    return t - torch.exp(t)


def log_cdf_gumbel(mu, z) -> torch.Tensor:
    return -torch.exp(as_tensor(mu) - as_tensor(z))


def cdf_gumbel(mu, z) -> torch.Tensor:
    return torch.exp(log_cdf_gumbel(mu, z))
