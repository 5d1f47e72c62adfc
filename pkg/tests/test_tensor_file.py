import numpy as np
import pytest

from GonoDyn.integration.tensor_file import parse_tensor_text, read_tensor_file
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException

HEMOPHILIA_TEXT = """\
# hemophilia: female types XX, XX^h; male types XY, X^hY
2 2
1/2 0   1/2 0      # (1,1)
0   1/2 1/2 0      # (1,2)
1/4 1/4 1/4 1/4    # (2,1)
0   1/3 1/3 1/3    # (2,2)
"""


def test_parses_builtin_equivalent(hemophilia):
    t = parse_tensor_text(HEMOPHILIA_TEXT)
    np.testing.assert_allclose(t.gamma_f, hemophilia.tensor.gamma_f, atol=1e-15)
    np.testing.assert_allclose(t.gamma_m, hemophilia.tensor.gamma_m, atol=1e-15)
    assert not t.signed


def test_decimal_rows_within_file_tolerance():
    t = parse_tensor_text("1 2\n0.3333333333 0.3333333333 0.3333333333\n0.5 0.25 0.25\n")
    assert (t.n, t.nu) == (1, 2)
    assert t.gamma_f[0, 1, 0] == 0.5
    assert t.gamma_m[0, 0, 1] == pytest.approx(0.3333333333)


def test_signed_header():
    t = parse_tensor_text("1 1 signed\n1.5 -0.5\n")
    assert t.signed
    assert not t.non_negative


@pytest.mark.parametrize(
    "text",
    [
        "",
        "2\n",
        "1 1 unsigned\n0.5 0.5\n",
        "a 1\n0.5 0.5\n",
        "0 1\n",
        "1 1\n0.5 0.5\n0.5 0.5\n",
        "1 1\n0.5\n",
        "1 1\n0.5 x\n",
        "1 1\n0.45 0.45\n",
        "1 1\n1.5 -0.5\n",
        "1 1\n1e400 -1e400\n",
        "1 1 signed\n1e400 -1e400\n",
    ],
)
def test_invalid_files(text):
    with pytest.raises(GonoDynException) as exc:
        parse_tensor_text(text)
    assert exc.value.exception_type == ExceptionType.INVALID_TENSOR


def test_row_sum_message_names_pair():
    with pytest.raises(GonoDynException) as exc:
        parse_tensor_text("1 2\n0.5 0.25 0.25\n0.3 0.3 0.3\n")
    assert "pair (1,2)" in str(exc.value)


def test_read_file(tmp_path):
    path = tmp_path / "hemophilia.txt"
    path.write_text(HEMOPHILIA_TEXT)
    assert read_tensor_file(path).n == 2


def test_unreadable_file(tmp_path):
    with pytest.raises(GonoDynException) as exc:
        read_tensor_file(tmp_path / "missing.txt")
    assert exc.value.exception_type == ExceptionType.UNREADABLE_FILE
