"""Gradient estimators for ``d/dtheta E_{b ~ PL(theta)}[f(b)]``.

All stochastic estimators are batched: ``seeds`` carries ``(B, k)`` uniforms
for the Gumbel keys and, independently, for the conditional keys.  Each row is
an independent single-sample estimate; averaging is left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import plackett_luce as pl
from . import rng as rngmod
from ._tensor import as_tensor
from .control_variate import ControlVariateParams, cv_eval_rebar, cv_eval_relax

STOCHASTIC = ("reinforce", "relax", "rebar")
ALL_ESTIMATORS = ("exact",) + STOCHASTIC


@dataclass
class NoiseSeeds:
    z: np.ndarray     # (B, k) uniforms for the Gumbel keys
    cond: np.ndarray  # (B, k) uniforms for the conditional keys

    @classmethod
    def draw(cls, batch: int, k: int, seed: int, *path: int) -> "NoiseSeeds":
        return cls(rngmod.uniform_seeds(rngmod.stream(seed, *path, rngmod.Z_NOISE), (batch, k)),
                   rngmod.uniform_seeds(rngmod.stream(seed, *path, rngmod.COND_NOISE), (batch, k)))

    def __len__(self) -> int:
        return self.z.shape[0]

    def chunk(self, start: int, stop: int) -> "NoiseSeeds":
        return NoiseSeeds(self.z[start:stop], self.cond[start:stop])


@dataclass
class EstimatorOutput:
    grad_theta: np.ndarray            # (B, k)
    f_value: np.ndarray               # (B,)
    grad_phi: dict | None = None      # batch-mean gradient of |grad_theta|^2
    aux: dict = field(default_factory=dict)


def _check_finite(fb: torch.Tensor) -> None:
    if not torch.isfinite(fb).all():
        raise FloatingPointError("objective returned a non-finite value")


def exact_objective(f, theta) -> float:
    perms, probs = pl.enumerate_distribution(theta)
    return float(np.dot(probs, as_tensor(f(perms)).numpy()))


def exact_grad(f, theta) -> np.ndarray:
    """``sum_b p(b) f(b) grad log p(b)`` by enumeration (k <= 8)."""
    theta = as_tensor(theta).detach()
    perms, probs = pl.enumerate_distribution(theta)
    fb = as_tensor(f(perms)).numpy()
    scores = pl.grad_log_prob(theta, perms).numpy()
    return (probs * fb) @ scores


def reinforce_grad(f, theta, seeds: NoiseSeeds) -> EstimatorOutput:
    theta = as_tensor(theta).detach()
    b, z = pl.sample(theta, seeds.z)
    fb = as_tensor(f(b))
    _check_finite(fb)
    g = fb.unsqueeze(-1) * pl.grad_log_prob(theta, b)
    return EstimatorOutput(g.numpy(), fb.numpy(), None, {"b": b.numpy(), "z": z.numpy()})


def _cv_estimator(f, theta, cv: ControlVariateParams, seeds: NoiseSeeds, cv_fn,
                  need_phi_grad: bool) -> EstimatorOutput:
    theta = as_tensor(theta).detach()
    params = cv.leaves() if need_phi_grad else cv.detach()
    batch, k = seeds.z.shape
    # One copy of theta per row gives per-sample reparametrization gradients.
    th = theta.expand(batch, k).clone().requires_grad_(True)
    b, z = pl.sample(th, seeds.z)
    fb = as_tensor(f(b))
    _check_finite(fb)
    z_tilde = pl.sample_conditional(th, b, seeds.cond, validate=False).z_tilde

    c_z = cv_fn(params, z)
    c_zt = cv_fn(params, z_tilde)
    diff = (c_z - c_zt).sum()
    if diff.requires_grad:
        (d_c,) = torch.autograd.grad(diff, th, create_graph=need_phi_grad, allow_unused=True)
    else:
        d_c = None
    if d_c is None:
        d_c = torch.zeros_like(th)

    score = pl.grad_log_prob(theta, b)
    g = (fb - c_zt).unsqueeze(-1) * score + d_c

    grad_phi = None
    if need_phi_grad:
        surrogate = (g ** 2).sum(-1).mean()
        tensors = params.as_dict()
        if surrogate.requires_grad:
            grads = torch.autograd.grad(surrogate, list(tensors.values()), allow_unused=True)
        else:
            grads = [None] * len(tensors)
        grad_phi = {n: (torch.zeros_like(t) if gr is None else gr.detach())
                    for (n, t), gr in zip(tensors.items(), grads)}
    aux = {"b": b.numpy(), "z": z.detach().numpy(), "z_tilde": z_tilde.detach().numpy()}
    return EstimatorOutput(g.detach().numpy(), fb.numpy(), grad_phi, aux)


def relax_grad(f, theta, cv: ControlVariateParams, seeds: NoiseSeeds,
               need_phi_grad: bool = True) -> EstimatorOutput:
    """PL-RELAX with ``c(z) = f(sigma(z, tau)) + rho(z)``.

    ``f.relaxed`` supplies the relaxed term; black-box objectives
    (``relaxed is None``) use ``rho`` alone.
    """
    relaxed = getattr(f, "relaxed", None)
    return _cv_estimator(f, theta, cv, seeds,
                         lambda p, z: cv_eval_relax(p, z, relaxed), need_phi_grad)


def rebar_grad(f, theta, cv: ControlVariateParams, seeds: NoiseSeeds,
               need_phi_grad: bool = True) -> EstimatorOutput:
    relaxed = getattr(f, "relaxed", None)
    if relaxed is None:
        raise ValueError("PL-REBAR needs an objective with a relaxed evaluation path")
    return _cv_estimator(f, theta, cv, seeds,
                         lambda p, z: cv_eval_rebar(p, z, relaxed), need_phi_grad)


def estimate(name: str, f, theta, cv, seeds: NoiseSeeds,
             need_phi_grad: bool = True) -> EstimatorOutput:
    """Dispatch by estimator name; ``exact`` repeats the exact gradient per row."""
    if name == "exact":
        g = exact_grad(f, theta)
        return EstimatorOutput(np.tile(g, (len(seeds), 1)), np.full(len(seeds), np.nan))
    if name == "reinforce":
        return reinforce_grad(f, theta, seeds)
    if name == "relax":
        return relax_grad(f, theta, cv, seeds, need_phi_grad)
    if name == "rebar":
        return rebar_grad(f, theta, cv, seeds, need_phi_grad)
    raise ValueError(f"unknown estimator {name!r}; choose from {ALL_ESTIMATORS}")


def sample_gradients(name: str, f, theta, cv, seeds: NoiseSeeds,
                     chunk: int = 50_000) -> np.ndarray:
    """Per-draw gradient estimates ``(n, k)``, evaluated in chunks."""
    out = [estimate(name, f, theta, cv, seeds.chunk(i, i + chunk), need_phi_grad=False).grad_theta
           for i in range(0, len(seeds), chunk)]
    return np.concatenate(out, 0)


def sample_moments(grads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and unbiased per-coordinate variance; exactly zero for a constant sample."""
    if np.all(grads == grads[:1]):
        return grads[0].copy(), np.zeros(grads.shape[1])
    return grads.mean(axis=0), grads.var(axis=0, ddof=1)


def variance_diag(name: str, f, theta, cv, n: int, seed: int, *path: int) -> dict:
    """Mean, per-coordinate unbiased variance and log total variance over ``n`` draws."""
    if n < 2:
        raise ValueError("n must be >= 2")
    k = as_tensor(theta).shape[-1]
    seeds = NoiseSeeds.draw(n, k, seed, *path)
    grads = sample_gradients(name, f, theta, cv, seeds)
    mean, var = sample_moments(grads)
    total = float(var.sum())
    return {
        "mean": mean,
        "variance": var,
        "std_error": np.sqrt(var / n),
        "log_total_variance": float(np.log(total)) if total > 0 else float("-inf"),
    }
