"""Reverse-mode gradients of small scalar programs, plus a finite-difference checker.

A *program* is any Python callable taking named float64 tensors and returning
a scalar tensor.  Graphs are recorded define-by-run by torch autograd; the
estimators use the same machinery directly (including double backward for the
control-variate objective), this module is the checked, inspectable surface.
"""

from __future__ import annotations

from typing import Callable, Mapping, NamedTuple

import numpy as np
import torch

from ._tensor import as_tensor

Program = Callable[..., torch.Tensor]


class GradientError(RuntimeError):
    pass


def _leaves(inputs: Mapping[str, object]) -> dict[str, torch.Tensor]:
    return {name: as_tensor(x).detach().clone().requires_grad_(True)
            for name, x in inputs.items()}


def evaluate_with_gradient(program: Program, inputs: Mapping[str, object]):
    """Run ``program(**inputs)`` and backpropagate.

    Returns ``(value, grads)`` with ``grads[name]`` a numpy array shaped like
    the input.  Inputs the output does not depend on get zero gradients.
    """
    leaves = _leaves(inputs)
    out = program(**leaves)
    if not isinstance(out, torch.Tensor) or out.numel() != 1:
        raise ValueError("program output must be a scalar tensor")
    if not out.requires_grad:
        raise GradientError("program output is not differentiable in any input")
    names = list(leaves)
    grads = torch.autograd.grad(out.reshape(()), [leaves[n] for n in names],
                                allow_unused=True)
    result = {}
    for n, g in zip(names, grads):
        result[n] = np.zeros(leaves[n].shape) if g is None else g.detach().numpy()
    return float(out.detach()), result


def evaluate(program: Program, inputs: Mapping[str, object]) -> float:
    with torch.no_grad():
        return float(program(**{n: as_tensor(x) for n, x in inputs.items()}))


class FDReport(NamedTuple):
    max_rel_error: float
    n_compared: int
    # (input name, flat index) pairs skipped because the function has a kink there.
    excluded: list


def finite_difference_check(program: Program, inputs: Mapping[str, object],
                            h: float = 1e-5, kink_tol: float | None = None) -> FDReport:
    """Compare reverse-mode gradients against central differences.

    The error for a coordinate is ``|ad - fd| / max(1, |ad|, |fd|)``.  A
    coordinate is excluded when its one-sided slopes disagree by more than
    ``kink_tol`` (default ``sqrt(h)``, relative to the same scale), which is
    how non-differentiable points such as ReLU at zero show up.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if kink_tol is None:
        kink_tol = np.sqrt(h)
    _, grads = evaluate_with_gradient(program, inputs)
    base = {n: np.array(as_tensor(x).detach().numpy(), dtype=np.float64)
            for n, x in inputs.items()}
    f0 = evaluate(program, base)

    worst, n_cmp, excluded = 0.0, 0, []
    for name, arr in base.items():
        flat_ad = grads[name].reshape(-1)
        for idx in range(arr.size):
            vals = []
            for step in (h, -h):
                pert = dict(base)
                x = arr.copy().reshape(-1)
                x[idx] += step
                pert[name] = x.reshape(arr.shape)
                vals.append(evaluate(program, pert))
            fp, fm = vals
            fd = (fp - fm) / (2 * h)
            fwd, bwd = (fp - f0) / h, (f0 - fm) / h
            ad = flat_ad[idx]
            scale = max(1.0, abs(ad), abs(fd))
            if abs(fwd - bwd) > kink_tol * scale:
                excluded.append((name, idx))
                continue
            worst = max(worst, abs(ad - fd) / scale)
            n_cmp += 1
    return FDReport(worst, n_cmp, excluded)
