"""Learned control variates for the PL-RELAX and PL-REBAR estimators.

RELAX uses ``c(z) = f(sigma(z, tau)) + rho(z)`` where ``rho`` is a
two-layer ReLU network (the relaxed term is dropped for black-box
objectives).  REBAR uses ``c(z) = eta * f(sigma(z, tau))``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
import torch

from . import rng as rngmod
from ._tensor import as_tensor
from .relaxed_sort import relaxed_permutation_matrix


@dataclass
class ControlVariateParams:
    w1: torch.Tensor      # (h, k)
    b1: torch.Tensor      # (h,)
    w2: torch.Tensor      # (1, h)
    b2: torch.Tensor      # (1,)
    log_tau: torch.Tensor  # ()
    eta: torch.Tensor     # ()

    @property
    def names(self) -> list[str]:
        return [f.name for f in fields(self)]

    def as_dict(self) -> dict[str, torch.Tensor]:
        return {n: getattr(self, n) for n in self.names}

    @classmethod
    def from_dict(cls, d) -> "ControlVariateParams":
        return cls(**{k: as_tensor(v) for k, v in d.items()})

    def leaves(self) -> "ControlVariateParams":
        """Detached copies that track gradients."""
        return ControlVariateParams(**{n: t.detach().clone().requires_grad_(True)
                                       for n, t in self.as_dict().items()})

    def detach(self) -> "ControlVariateParams":
        return ControlVariateParams(**{n: t.detach().clone() for n, t in self.as_dict().items()})

    @property
    def tau(self) -> torch.Tensor:
        return torch.exp(self.log_tau)


def cv_init(k: int, hidden: int = 64, seed: int = 0) -> ControlVariateParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, ``tau = 1``, ``eta = 1``."""
    if k < 1 or hidden < 1:
        raise ValueError("k and hidden must be >= 1")
    g = rngmod.stream(seed, rngmod.CV_INIT)
    a1, a2 = 1.0 / np.sqrt(k), 1.0 / np.sqrt(hidden)
    return ControlVariateParams(
        w1=as_tensor(g.uniform(-a1, a1, (hidden, k))),
        b1=as_tensor(g.uniform(-a1, a1, hidden)),
        w2=as_tensor(g.uniform(-a2, a2, (1, hidden))),
        b2=as_tensor(g.uniform(-a2, a2, 1)),
        log_tau=as_tensor(0.0),
        eta=as_tensor(1.0),
    )


def rho(params: ControlVariateParams, z) -> torch.Tensor:
    z = as_tensor(z)
    hidden = torch.relu(z @ params.w1.T + params.b1)
    return (hidden @ params.w2.T).squeeze(-1) + params.b2.squeeze(-1)


def _checked(out: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(out).all():
        raise FloatingPointError("control variate produced a non-finite value")
    return out


def cv_eval_relax(params: ControlVariateParams, z, f_relaxed=None) -> torch.Tensor:
    """``f_relaxed(sigma(z, tau)) + rho(z)``; batched over leading dims of ``z``."""
    out = rho(params, z)
    if f_relaxed is not None:
        out = out + f_relaxed(relaxed_permutation_matrix(z, params.tau))
    return _checked(out)


def cv_eval_rebar(params: ControlVariateParams, z, f_relaxed) -> torch.Tensor:
    if f_relaxed is None:
        raise ValueError("REBAR needs an objective with a relaxed evaluation path")
    return _checked(params.eta * f_relaxed(relaxed_permutation_matrix(z, params.tau)))
