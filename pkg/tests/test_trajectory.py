import numpy as np
import pytest

from GonoDyn.models.operator import Mode, PopulationState, StopReason
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import P_STAR, S2, hemophilia_state
from GonoDyn.operators.trajectory import IterateRecorder, coordinate_names, iterate, iterate_batch, trajectory_table
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


def test_iterate_to_origin(hemophilia):
    record = iterate(hemophilia, hemophilia_state(1.0, 0.0, 1.0, 0.0))
    assert record.stop_reason == StopReason.CONVERGED_TO_POINT
    assert np.max(np.abs(record.limit.as_array())) <= 1e-10


def test_iterate_diverges(hemophilia):
    record = iterate(hemophilia, hemophilia_state(3.0, 0.0, 3.0, 0.0))
    assert record.stop_reason == StopReason.DIVERGED
    assert record.limit is None


def test_boundary_product_lands_on_s2(hemophilia):
    record = iterate(hemophilia, hemophilia_state(4.0, 0.0, 1.0, 0.0))
    assert record.stop_reason == StopReason.CONVERGED_TO_POINT
    np.testing.assert_allclose(record.limit.as_array(), S2, atol=1e-12)


def test_fixed_start_converges_in_one_step(hemophilia):
    record = iterate(hemophilia, hemophilia_state(*S2))
    assert record.stop_reason == StopReason.CONVERGED_TO_POINT
    assert record.steps_taken == 1


def test_normalized_run_approaches_p_slowly(hemophilia):
    record = iterate(hemophilia, hemophilia_state(0.25, 0.25, 0.25, 0.25), Mode.NORMALIZED, budget=500)
    assert record.stop_reason == StopReason.BUDGET_EXHAUSTED
    assert np.max(np.abs(record.final.as_array() - np.array(P_STAR))) <= 1e-2
    assert record.steps[-1] == 500


def test_normalized_needs_simplex_start(hemophilia):
    with pytest.raises(GonoDynException) as exc:
        iterate(hemophilia, hemophilia_state(1.0, 1.0, 1.0, 1.0), Mode.NORMALIZED)
    assert exc.value.exception_type == ExceptionType.NOT_ON_SIMPLEX


def test_annihilation_reports_step(all_female_tensor):
    op = GonosomalOperator(all_female_tensor)
    with pytest.raises(GonoDynException) as exc:
        iterate(op, PopulationState(female=(0.5,), male=(0.5,)), Mode.NORMALIZED)
    assert exc.value.exception_type == ExceptionType.ANNIHILATED_STATE
    assert exc.value.step == 1
    assert "at step 1" in str(exc.value)


@pytest.mark.parametrize("budget, tol, div", [(0, 1e-12, 1e12), (10, 0.0, 1e12), (10, 1e-12, -1.0)])
def test_bad_knobs(hemophilia, budget, tol, div):
    with pytest.raises(GonoDynException) as exc:
        iterate(hemophilia, hemophilia_state(1.0, 0.0, 1.0, 0.0), budget=budget, tol_fp=tol, div_threshold=div)
    assert exc.value.exception_type == ExceptionType.INVALID_ARGUMENT


def test_recorder_thins_and_keeps_final(hemophilia):
    recorder = IterateRecorder(hemophilia, keep_all=3, thin_every=5)
    for k in range(13):
        recorder.add(k, np.full(4, float(k)))
    record = recorder.record(Mode.RAW, StopReason.BUDGET_EXHAUSTED, 12)
    assert record.steps == [0, 1, 2, 3, 5, 10, 12]
    assert record.final.as_array()[0] == 12.0


def test_batch_agrees_with_single_runs(hemophilia):
    states = np.array([[1.0, 0.0, 1.0, 0.0], [3.0, 0.0, 3.0, 0.0], [4.0, 0.0, 1.0, 0.0], [0.2, 0.1, 0.3, 0.1]])
    outcome = iterate_batch(hemophilia, states)
    for state, reason, final in zip(states, outcome.stop_reasons, outcome.finals):
        record = iterate(hemophilia, PopulationState.from_array(state, 2))
        assert reason == record.stop_reason
        if reason == StopReason.CONVERGED_TO_POINT:
            np.testing.assert_allclose(final, record.limit.as_array(), atol=1e-12)
    assert outcome.count(StopReason.DIVERGED) == 1


def test_coordinate_names():
    assert coordinate_names(2, 2) == ["x", "y", "u", "v"]
    assert coordinate_names(1, 3) == ["f1", "m1", "m2", "m3"]


def test_trajectory_table(hemophilia):
    record = iterate(hemophilia, hemophilia_state(1.0, 1.0, 1.0, 1.0), budget=3)
    df = trajectory_table(record)
    assert list(df.columns) == ["step", "x", "y", "u", "v", "sum", "product"]
    assert list(df.step) == [0, 1, 2, 3]
    assert df["product"].iloc[0] == 4.0
    # sum of W(s) equals the block product of s
    assert df["sum"].iloc[1] == pytest.approx(df["product"].iloc[0], abs=1e-12)
