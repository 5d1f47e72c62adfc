import numpy as np
import pytest
from hypothesis import settings

from GonoDyn.models.operator import InheritanceTensor
from GonoDyn.operators.hemophilia import HemophiliaOperator

settings.register_profile("gono", max_examples=50, deadline=None)
settings.load_profile("gono")


@pytest.fixture
def hemophilia() -> HemophiliaOperator:
    return HemophiliaOperator()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def all_female_tensor() -> InheritanceTensor:
    # n = nu = 1, every offspring is female
    return InheritanceTensor(gamma_f=[[[1.0]]], gamma_m=[[[0.0]]])
