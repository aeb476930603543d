import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

from glassmix.model import (
    DisorderInstance,
    ModelParams,
    Repr,
    _parity_basis,
    sample_disorder,
)


def zero_disorder(n: int, p: int) -> DisorderInstance:
    """Instance with every coupling zero: H identically 0."""
    masks, _ = _parity_basis(n, p)
    return DisorderInstance(params=ModelParams(n=n, p=p), repr=Repr.PARITY,
                            couplings=np.zeros(masks.size), seed=0)


@pytest.fixture
def zero_inst():
    return zero_disorder(6, 3)


@pytest.fixture
def inst_n8p3():
    return sample_disorder(ModelParams(n=8, p=3), seed=20)


@pytest.fixture
def inst_n10p3():
    return sample_disorder(ModelParams(n=10, p=3), seed=11)
