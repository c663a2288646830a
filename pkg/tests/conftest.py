import numpy as np
import pytest
import torch

from plgrad.toy import target_matrix, toy_objective


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy4():
    return toy_objective(target_matrix(4, 0.05))


def perm_from_1(*items):
    """Test helper: 1-indexed tuple to a 0-indexed tensor."""
    return torch.tensor([i - 1 for i in items])
