from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from GonoDyn.models.operator import InheritanceTensor, PopulationState
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import P_STAR, S2, HemophiliaOperator, exact_row_sums, hemophilia_state
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException

coordinate = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def test_rows_sum_to_one_exactly():
    assert exact_row_sums() == [Fraction(1)] * 4


def test_raw_image_of_ones(hemophilia):
    image = hemophilia.apply_raw(hemophilia_state(1.0, 1.0, 1.0, 1.0)).as_array()
    np.testing.assert_allclose(image, [3 / 4, 13 / 12, 19 / 12, 7 / 12], atol=1e-15)


def test_fixed_points_are_fixed(hemophilia):
    np.testing.assert_array_equal(hemophilia.raw_image(np.zeros(4)), np.zeros(4))
    np.testing.assert_allclose(hemophilia.raw_image(np.array(S2)), S2, atol=1e-15)


def test_jacobian_at_s2(hemophilia):
    expected = np.array(
        [
            [1.0, 0.5, 1.0, 0.0],
            [0.0, 0.5, 0.0, 1.0],
            [1.0, 0.5, 1.0, 1.0],
            [0.0, 0.5, 0.0, 0.0],
        ]
    )
    np.testing.assert_allclose(hemophilia.jacobian_raw(hemophilia_state(*S2)), expected, atol=1e-15)


def test_jacobian_at_origin_vanishes(hemophilia):
    np.testing.assert_array_equal(hemophilia.raw_jacobian(np.zeros(4)), np.zeros((4, 4)))


def test_batch_matches_rows(hemophilia, rng):
    states = rng.uniform(-3.0, 3.0, size=(5, 4))
    batch = hemophilia.raw_image(states)
    for row, image in zip(states, batch):
        np.testing.assert_allclose(hemophilia.raw_image(row), image, atol=1e-14)


def test_dimension_mismatch(hemophilia):
    with pytest.raises(GonoDynException) as exc:
        hemophilia.raw_image(np.ones(3))
    assert exc.value.exception_type == ExceptionType.DIMENSION_MISMATCH
    with pytest.raises(GonoDynException) as exc:
        hemophilia.apply_raw(PopulationState(female=(1.0,), male=(1.0, 1.0, 1.0)))
    assert exc.value.exception_type == ExceptionType.DIMENSION_MISMATCH


def test_normalized_image_of_quarter_point(hemophilia):
    image = hemophilia.normalized_image(np.full(4, 0.25))
    np.testing.assert_allclose(image, [3 / 16, 13 / 48, 19 / 48, 7 / 48], atol=1e-15)
    assert image.sum() == pytest.approx(1.0, abs=1e-15)


def test_normalized_fixes_p(hemophilia):
    np.testing.assert_allclose(hemophilia.normalized_image(np.array(P_STAR)), P_STAR, atol=1e-15)


def test_normalized_refuses_annihilated_state(hemophilia):
    with pytest.raises(GonoDynException) as exc:
        hemophilia.normalized_image(np.array([1.0, 0.0, 0.0, 0.0]))
    assert exc.value.exception_type == ExceptionType.ANNIHILATED_STATE


def test_normalized_jacobian_matches_differences(hemophilia, rng):
    s = rng.uniform(0.1, 1.0, size=4)
    h = 1e-6
    fd = np.column_stack(
        [(hemophilia.normalized_image(s + h * e) - hemophilia.normalized_image(s - h * e)) / (2 * h) for e in np.eye(4)]
    )
    np.testing.assert_allclose(hemophilia.normalized_jacobian(s), fd, atol=1e-6)


@given(st.tuples(coordinate, coordinate, coordinate, coordinate))
def test_sum_product_identity(s):
    hemophilia = HemophiliaOperator()
    state = hemophilia_state(*s)
    scale = max(1.0, (abs(s[0]) + abs(s[1])) * (abs(s[2]) + abs(s[3])))
    assert hemophilia.sum_product_residual(state) <= 1e-12 * scale


@given(st.tuples(coordinate, coordinate, coordinate, coordinate), st.floats(min_value=-3.0, max_value=3.0))
def test_block_bilinearity(s, lam):
    hemophilia = HemophiliaOperator()
    # W is linear in the female block for a fixed male block
    s = np.array(s)
    scaled = s.copy()
    scaled[:2] *= lam
    np.testing.assert_allclose(hemophilia.raw_image(scaled), lam * hemophilia.raw_image(s), atol=1e-9)


def test_one_by_one_tensor():
    op = GonosomalOperator(InheritanceTensor(gamma_f=[[[0.5]]], gamma_m=[[[0.5]]]))
    np.testing.assert_allclose(op.raw_image(np.array([2.0, 3.0])), [3.0, 3.0])
    assert op.name == "custom"
