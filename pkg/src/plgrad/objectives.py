"""Objective wrappers the estimators consume.

An objective maps a batch of permutations ``(B, k)`` to values ``(B,)``.
Objectives that can also be evaluated on relaxed (row-stochastic) matrices
expose a ``relaxed`` callable; black-box objectives set it to ``None``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import torch

from ._tensor import as_index, as_tensor
from .relaxed_sort import hard_permutation_matrix


class MatrixObjective:
    """``f(P_b)`` for a differentiable function of a permutation matrix."""

    def __init__(self, fn: Callable[[torch.Tensor], torch.Tensor]):
        self.fn = fn

    def __call__(self, perms) -> torch.Tensor:
        b = as_index(perms)
        with torch.no_grad():
            return as_tensor(self.fn(hard_permutation_matrix(b, validate=False)))

    def relaxed(self, mats: torch.Tensor) -> torch.Tensor:
        return self.fn(mats)


class BlackBoxObjective:
    """Wraps a scalar function of one permutation; memoizes by permutation."""

    relaxed = None

    def __init__(self, fn: Callable[[tuple], float], cache: bool = True):
        self.fn = fn
        self.cache: dict[tuple, float] | None = {} if cache else None
        self.calls = 0

    def value(self, perm: tuple) -> float:
        if self.cache is not None and perm in self.cache:
            return self.cache[perm]
        self.calls += 1
        val = float(self.fn(perm))
        if self.cache is not None:
            self.cache[perm] = val
        return val

    def __call__(self, perms) -> torch.Tensor:
        arr = np.atleast_2d(np.asarray(as_index(perms)))
        out = [self.value(tuple(int(i) for i in row)) for row in arr]
        return as_tensor(out)
