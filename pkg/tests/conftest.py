import numpy as np
import pytest
import torch
from hypothesis import settings

settings.register_profile("suite", max_examples=25, deadline=None)
settings.load_profile("suite")


@pytest.fixture(autouse=True)
def _single_thread():
    # keep eigensolver timings stable and runs deterministic
    torch.set_num_threads(torch.get_num_threads())
    yield


def cplx(arr) -> torch.Tensor:
    return torch.as_tensor(np.asarray(arr, dtype=np.complex128))


def real(arr) -> torch.Tensor:
    return torch.as_tensor(np.asarray(arr, dtype=np.float64))
