import numpy as np
import torch

DTYPE = torch.float64


def as_tensor(x, dtype=DTYPE) -> torch.Tensor:
    """Float64 tensor view of ``x``; tensors keep their autograd history."""
    if isinstance(x, torch.Tensor):
        return x if x.dtype == dtype else x.to(dtype)
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=dtype)


def as_index(b) -> torch.Tensor:
    if isinstance(b, torch.Tensor):
        return b.long()
    return torch.as_tensor(np.asarray(b, dtype=np.int64))


def to_numpy(x) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().numpy()
    return np.asarray(x)
