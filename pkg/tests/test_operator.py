import math

import numpy as np
import pytest

from GonoDyn.models.operator import InheritanceTensor, PopulationState, SimplexState
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


def test_hemophilia_tensor_shape(hemophilia):
    t = hemophilia.tensor
    assert (t.n, t.nu) == (2, 2)
    assert t.non_negative
    assert not t.signed


def test_tensor_arrays_are_read_only(hemophilia):
    with pytest.raises(ValueError):
        hemophilia.tensor.gamma_f[0, 0, 0] = 1.0


def test_row_sum_violation_names_the_pair():
    with pytest.raises(GonoDynException) as exc:
        InheritanceTensor(gamma_f=[[[0.45]]], gamma_m=[[[0.45]]])
    assert exc.value.exception_type == ExceptionType.INVALID_TENSOR
    assert "pair (1,1)" in str(exc.value)


def test_negative_coefficients_need_signed_flag():
    with pytest.raises(GonoDynException) as exc:
        InheritanceTensor(gamma_f=[[[1.5]]], gamma_m=[[[-0.5]]])
    assert exc.value.exception_type == ExceptionType.INVALID_TENSOR

    t = InheritanceTensor(gamma_f=[[[1.5]]], gamma_m=[[[-0.5]]], signed=True)
    assert not t.non_negative


def test_inconsistent_block_shapes():
    with pytest.raises(GonoDynException) as exc:
        InheritanceTensor(gamma_f=np.full((1, 1, 2), 0.25), gamma_m=np.full((1, 1, 2), 0.25))
    assert exc.value.exception_type == ExceptionType.INVALID_TENSOR


def test_non_finite_tensor():
    with pytest.raises(GonoDynException):
        InheritanceTensor(gamma_f=[[[math.nan]]], gamma_m=[[[0.5]]])


def test_state_blocks():
    s = PopulationState(female=(1.0, 2.0), male=(3.0, 4.0))
    assert (s.n, s.nu, s.dim) == (2, 2, 4)
    assert s.female_sum == 3.0
    assert s.male_sum == 7.0
    assert s.total == 10.0
    assert s.block_product == 21.0
    np.testing.assert_array_equal(s.as_array(), [1.0, 2.0, 3.0, 4.0])


def test_state_from_array():
    s = PopulationState.from_array([1.0, 2.0, 3.0], 1)
    assert s.female == (1.0,)
    assert s.male == (2.0, 3.0)
    with pytest.raises(GonoDynException) as exc:
        PopulationState.from_array([1.0, 2.0], 2)
    assert exc.value.exception_type == ExceptionType.DIMENSION_MISMATCH


def test_state_rejects_non_finite():
    with pytest.raises(GonoDynException) as exc:
        PopulationState(female=(math.inf,), male=(1.0,))
    assert exc.value.exception_type == ExceptionType.INVALID_STATE


@pytest.mark.parametrize(
    "female, male",
    [
        ((1.0, 0.0), (0.0, 0.0)),
        ((0.5, 0.5), (0.5, 0.0)),
        ((-0.1, 0.6), (0.5, 0.0)),
    ],
)
def test_simplex_state_rejects(female, male):
    with pytest.raises(GonoDynException) as exc:
        SimplexState(female=female, male=male)
    assert exc.value.exception_type == ExceptionType.NOT_ON_SIMPLEX


def test_simplex_state_accepts_quarter_point():
    s = SimplexState.from_state(PopulationState(female=(0.25, 0.25), male=(0.25, 0.25)))
    assert s.total == pytest.approx(1.0)


def test_exception_rendering():
    exc = GonoDynException("bad thing", ExceptionType.ANNIHILATED_STATE)
    assert str(exc) == "ANNIHILATED_STATE: bad thing"
    exc.step = 3
    assert str(exc) == "ANNIHILATED_STATE at step 3: bad thing"
