"""Variational optimization ``min_theta E_{PL(theta)}[f(b)]`` with control-variate training."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from . import plackett_luce as pl
from . import rng as rngmod
from ._tensor import as_tensor
from .control_variate import ControlVariateParams, cv_init
from .estimators import ALL_ESTIMATORS, NoiseSeeds, estimate, exact_objective, variance_diag

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    iters: int = 5000
    lr_theta: float = 0.1
    lr_phi: float = 1e-3
    batch_size: int = 1
    estimator: str = "relax"
    seed: int = 0
    log_every: int = 100
    variance_probe_n: int = 64
    hidden: int = 64
    mc_probe_n: int = 512

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.lr_theta <= 0 or self.lr_phi <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1 or self.log_every < 1:
            raise ValueError("batch_size and log_every must be >= 1")
        if self.variance_probe_n < 2:
            raise ValueError("variance_probe_n must be >= 2")
        if self.estimator not in ALL_ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState | None, lr: float,
              betas=(0.9, 0.999), eps: float = 1e-8):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    state = state or AdamState()
    b1, b2 = betas
    t = state.step + 1
    new_params, m_new, v_new = {}, {}, {}
    for name, p in params.items():
        p = as_tensor(p).detach()
        g = as_tensor(grads[name]).detach()
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {tuple(g.shape)} != param shape {tuple(p.shape)} for {name}")
        m = b1 * state.m.get(name, torch.zeros_like(p)) + (1 - b1) * g
        v = b2 * state.v.get(name, torch.zeros_like(p)) + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_params[name] = p - lr * m_hat / (v_hat.sqrt() + eps)
        m_new[name], v_new[name] = m, v
    return new_params, AdamState(t, m_new, v_new)


@dataclass
class TraceRow:
    iteration: int
    objective: float
    log_variance: float
    theta_hash: str


@dataclass
class TrainResult:
    theta: torch.Tensor
    cv: ControlVariateParams
    trace: list[TraceRow]

    @property
    def decision(self) -> np.ndarray:
        return pl.mode(self.theta).numpy()


def theta_hash(theta) -> str:
    return hashlib.sha1(as_tensor(theta).detach().numpy().tobytes()).hexdigest()[:12]


def objective_probe(f, theta, config: TrainConfig, iteration: int) -> float:
    """Exact expectation for ``k <= 8``, otherwise a Monte-Carlo mean."""
    k = theta.shape[-1]
    if k <= pl.MAX_ENUM_K:
        return exact_objective(f, theta)
    seeds = rngmod.uniform_seeds(rngmod.stream(config.seed, rngmod.PROBE, iteration, 1),
                                 (config.mc_probe_n, k))
    b, _ = pl.sample(theta, seeds)
    return float(as_tensor(f(b)).mean())


def train(f, k: int, config: TrainConfig, theta0=None, cv0: ControlVariateParams | None = None,
          callback=None) -> TrainResult:
    """Run ``config.iters`` simultaneous updates of theta (Adam) and the control variate.

    Each step averages ``batch_size`` single-sample estimates; the control
    variate follows the batch-mean gradient of the squared gradient norm.
    """
    theta = torch.zeros(k, dtype=torch.float64) if theta0 is None else as_tensor(theta0).clone()
    cv = cv0 if cv0 is not None else cv_init(k, config.hidden, config.seed)
    st_theta = st_phi = None
    trace: list[TraceRow] = []
    for it in range(1, config.iters + 1):
        seeds = NoiseSeeds.draw(config.batch_size, k, config.seed, rngmod.TRAIN, it)
        try:
            out = estimate(config.estimator, f, theta, cv, seeds, need_phi_grad=True)
        except FloatingPointError as exc:
            raise DivergenceError(f"iteration {it}: {exc}") from exc
        new, st_theta = adam_step({"theta": theta}, {"theta": out.grad_theta.mean(0)},
                                  st_theta, config.lr_theta)
        theta = new["theta"]
        if out.grad_phi is not None:
            new_cv, st_phi = adam_step(cv.as_dict(), out.grad_phi, st_phi, config.lr_phi)
            cv = ControlVariateParams(**new_cv)

        if it % config.log_every == 0 or it == config.iters:
            if not torch.isfinite(theta).all():
                raise DivergenceError(f"theta became non-finite at iteration {it}")
            obj = objective_probe(f, theta, config, it)
            if not np.isfinite(obj):
                raise DivergenceError(f"objective became non-finite at iteration {it}")
            diag = variance_diag(config.estimator, f, theta, cv, config.variance_probe_n,
                                 config.seed, rngmod.PROBE, it)
            row = TraceRow(it, obj, diag["log_total_variance"], theta_hash(theta))
            trace.append(row)
            log.debug("iter %d objective %.6f log-var %.3f", it, obj, row.log_variance)
            if callback is not None:
                callback(row)
    return TrainResult(theta, cv, trace)
