import numpy as np
import pytest

from GonoDyn.utils.exceptions import ExceptionType, GonoDynException
from GonoDyn.utils.funcs import (
    format_float,
    lexicographic_first,
    parse_state,
    rng_stream,
    sample_simplex_state,
    sup_norm,
    uniform_simplex,
)


def test_parse_state():
    assert parse_state("1, 0.5,-2,3e-1") == [1.0, 0.5, -2.0, 0.3]


@pytest.mark.parametrize("text", ["", "1,,2", "1;2", "1,nan", "1,inf", "a"])
def test_parse_state_rejects(text):
    with pytest.raises(GonoDynException) as exc:
        parse_state(text)
    assert exc.value.exception_type == ExceptionType.INVALID_STATE


def test_rng_stream_is_per_sample():
    a = rng_stream(42, 3).uniform(size=3)
    np.testing.assert_array_equal(a, rng_stream(42, 3).uniform(size=3))
    assert not np.array_equal(a, rng_stream(42, 4).uniform(size=3))


def test_uniform_simplex(rng):
    pts = uniform_simplex(rng, 4, 1000)
    assert pts.shape == (1000, 4)
    np.testing.assert_allclose(pts.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(pts >= 0)
    # each coordinate has mean 1/4 under the uniform law
    np.testing.assert_allclose(pts.mean(axis=0), 0.25, atol=0.02)


def test_sample_simplex_state_has_both_sexes(rng):
    for _ in range(50):
        s = sample_simplex_state(rng, 2, 3)
        assert s[:2].sum() > 1e-9 and s[2:].sum() > 1e-9


def test_small_helpers():
    assert sup_norm(np.array([1.0, -3.0])) == 3.0
    assert sup_norm(np.array([])) == 0.0
    assert format_float(0.1 + 0.2) == "0.30000000000000004"
    assert lexicographic_first([]) is None
    first = lexicographic_first([np.array([1.0, 2.0]), np.array([1.0, -1.0]), np.array([2.0, -5.0])])
    np.testing.assert_array_equal(first, [1.0, -1.0])
