import numpy as np
import pytest

from modescope import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param
