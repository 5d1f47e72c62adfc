import inspect
import math

import numpy as np
import pytest

from GonoDyn.analysis import invariant_sets as sets
from GonoDyn.models.reports import LimitKind
from GonoDyn.operators.hemophilia import hemophilia_state
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException

SAMPLES = 500


def test_predicates_are_vectorized():
    s = np.array([[2.0, 0.0, 2.0, 0.0], [1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, 1.0, 1.0]])
    np.testing.assert_array_equal(sets.in_J(s), [True, False, False])
    np.testing.assert_array_equal(sets.in_P(s), [True, True, False])
    np.testing.assert_array_equal(sets.in_Q(s, 4.0), [True, True, False])
    np.testing.assert_array_equal(sets.in_N0(s), [False, False, True])
    np.testing.assert_array_equal(sets.in_P0(s), [False, False, False])


def test_membership_of_s2():
    m = sets.membership(hemophilia_state(2.0, 0.0, 2.0, 0.0))
    assert m.in_I and m.in_J and m.in_P and m.in_Q4
    assert not (m.in_P0 or m.in_O or m.in_F or m.in_N)
    assert m.q_level == 4.0
    assert all(type(v) is bool for k, v in m.model_dump().items() if k.startswith("in_"))


def test_membership_needs_hemophilia_shape():
    from GonoDyn.models.operator import PopulationState

    with pytest.raises(GonoDynException) as exc:
        sets.membership(PopulationState(female=(1.0,), male=(1.0,)))
    assert exc.value.exception_type == ExceptionType.DIMENSION_MISMATCH


@pytest.mark.parametrize(
    "x0, k, expected",
    [(3.0, 0, 3.0), (3.0, 1, 4.5), (3.0, 2, 10.125), (-3.0, 0, -3.0), (-3.0, 1, 4.5), (1.0, 2, 0.125), (0.0, 5, 0.0)],
)
def test_closed_form_J(x0, k, expected):
    assert sets.closed_form_J(x0, k) == pytest.approx(expected, rel=1e-12)


def test_closed_form_J_extremes():
    assert sets.closed_form_J(3.0, 60) == math.inf
    assert sets.closed_form_J(1.0, 2000) == 0.0
    with pytest.raises(GonoDynException):
        sets.closed_form_J(1.0, -1)


@pytest.mark.parametrize(
    "state, kind, rule",
    [
        ((1.0, 1.0, 1.0, 1.0), LimitKind.ZERO, "(i)-2"),
        ((0.5, 0.5, 0.5, 0.5), LimitKind.ZERO, "(i)-1"),
        ((2.0, 0.0, 2.0, 0.0), LimitKind.S2, "q4-fixed"),
        ((3.0, 0.0, 3.0, 0.0), LimitKind.INFINITY, "(ii)-a"),
        ((-1.0, 0.0, -3.0, 0.0), LimitKind.ZERO, "(i)-3"),
        ((-3.0, 0.0, -3.0, 0.0), LimitKind.INFINITY, "(ii)-b"),
        ((-0.5, -0.5, 0.5, 0.5), LimitKind.ZERO, "(i)-4"),
        ((0.5, 0.5, -0.5, -0.5), LimitKind.ZERO, "(i)-5"),
        ((0.1, -0.1, 3.0, 3.0), LimitKind.UNDECIDED, "undecided"),
    ],
)
def test_classify_limit(state, kind, rule):
    verdict = sets.classify_limit(hemophilia_state(*state))
    assert verdict.kind == kind
    assert verdict.rule == rule


def test_witnesses():
    assert sets.classify_limit(hemophilia_state(1.0, 1.0, 1.0, 1.0)).witness.step == 0
    verdict = sets.classify_limit(hemophilia_state(3.0, 0.0, 3.0, 0.0))
    assert verdict.witness.quantity == "xu/4"
    assert verdict.witness.value == pytest.approx(2.25)
    record = sets.classify_limit(hemophilia_state(5.0, 5.0, 5.0, 5.0)).to_record()
    assert record["witness.quantity"] == "xu/4"
    assert float(record["witness.value"]) == 6.25


def test_classifier_needs_positive_budget():
    with pytest.raises(GonoDynException) as exc:
        sets.LimitClassifier(probe_budget=0)
    assert exc.value.exception_type == ExceptionType.INVALID_ARGUMENT


def test_lemma1_suite():
    reports = sets.verify_lemma1(samples=SAMPLES, rng_seed=7)
    assert len(reports) == 11
    assert all(r.passed for r in reports), [r.to_record() for r in reports if not r.passed]
    assert reports[0].property_id == "lemma1.invariance.I"


@pytest.mark.parametrize(
    "check",
    [
        sets.verify_lemma2,
        sets.verify_lemma3_identity,
        sets.verify_lemma4,
        sets.verify_lemma5_bound,
        sets.verify_closed_form_J,
        sets.verify_classifier_soundness,
    ],
)
def test_property_checks(check):
    report = check(SAMPLES, 7)
    assert report.passed, report.to_record()
    assert report.samples > 0


def test_i_trichotomy():
    report = sets.verify_i_trichotomy()
    assert report.samples == 10
    assert report.passed, report.to_record()


def test_suites_are_reproducible():
    first = [r.to_record() for r in sets.verify_lemma1(samples=100, rng_seed=3)]
    second = [r.to_record() for r in sets.verify_lemma1(samples=100, rng_seed=3)]
    assert first == second


def test_i_trichotomy_close_to_four():
    report = sets.verify_i_trichotomy((3.99, 4.0, 4.01))
    assert report.samples == 6
    assert report.passed, report.to_record()
    default = inspect.signature(sets.verify_i_trichotomy).parameters["products"].default
    assert default == (1.0, 3.99, 4.0, 4.01, 9.0)


@pytest.mark.parametrize("sampler, predicate", [(sets.sample_P0, sets.in_P0), (sets.sample_F, sets.in_F)])
def test_clause_samplers_land_in_their_sets(sampler, predicate):
    states = sampler(np.random.default_rng(5), 200)
    assert states.shape == (200, 4)
    assert predicate(states).all()


def test_q4_boundary_verdicts():
    states = sets.sample_Q4_boundary(np.random.default_rng(3), 40)
    assert states.shape == (41, 4)
    np.testing.assert_allclose(states.sum(axis=1), 4.0, atol=1e-14)
    verdicts = [sets.classify_limit(hemophilia_state(*s)) for s in states]
    rules = {v.rule for v in verdicts}
    assert {"(i)-2", "q4-fixed"} <= rules
    assert verdicts[-1].kind == LimitKind.S2
    assert all(v.kind == LimitKind.ZERO for v in verdicts[:-1])


def test_classifier_soundness_covers_every_family():
    report = sets.verify_classifier_soundness(600, 11)
    assert report.passed, report.to_record()
    for tally in ("P0 100/100", "F 100/100", "Q4_boundary 101/101"):
        assert tally in report.detail
    undecided = int(report.detail.split()[0])
    assert report.samples + undecided == 601
