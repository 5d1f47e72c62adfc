from fractions import Fraction
from pathlib import Path
from typing import List

import numpy as np

from GonoDyn.models.operator import InheritanceTensor
from GonoDyn.utils.constants import FILE_ROW_SUM_TOL
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException

SIGNED_FLAG = "signed"


def _content_lines(text: str) -> List[List[str]]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    return lines


def _coefficient(token: str, line_no: int) -> float:
    try:
        # "1/3" is accepted as well as decimals
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError, OverflowError):
        raise GonoDynException(
            f"row {line_no}: '{token}' is not a finite number", ExceptionType.INVALID_TENSOR
        )


def parse_tensor_text(text: str, row_sum_tol: float = FILE_ROW_SUM_TOL) -> InheritanceTensor:
    """Header "n nu" (optionally followed by "signed"), then one row per pair (i, k) with i outer.

    Each row lists the female offspring coefficients 1..n followed by the male ones 1..nu.
    """
    lines = _content_lines(text)
    if not lines:
        raise GonoDynException("empty tensor file", ExceptionType.INVALID_TENSOR)

    header = lines[0]
    if len(header) not in (2, 3) or (len(header) == 3 and header[2] != SIGNED_FLAG):
        raise GonoDynException(
            f"header must be 'n nu' or 'n nu {SIGNED_FLAG}', got '{' '.join(header)}'",
            ExceptionType.INVALID_TENSOR,
        )
    try:
        n, nu = int(header[0]), int(header[1])
    except ValueError:
        raise GonoDynException(f"bad dimensions in header '{' '.join(header)}'", ExceptionType.INVALID_TENSOR)
    if n < 1 or nu < 1:
        raise GonoDynException(f"dimensions must be positive, got {n} {nu}", ExceptionType.INVALID_TENSOR)

    rows = lines[1:]
    if len(rows) != n * nu:
        raise GonoDynException(
            f"expected {n * nu} coefficient rows, found {len(rows)}", ExceptionType.INVALID_TENSOR
        )
    gamma_f = np.zeros((n, nu, n))
    gamma_m = np.zeros((n, nu, nu))
    for idx, row in enumerate(rows):
        if len(row) != n + nu:
            raise GonoDynException(
                f"row {idx + 1}: expected {n + nu} coefficients, found {len(row)}",
                ExceptionType.INVALID_TENSOR,
            )
        values = [_coefficient(token, idx + 1) for token in row]
        i, k = divmod(idx, nu)
        gamma_f[i, k, :] = values[:n]
        gamma_m[i, k, :] = values[n:]

    return InheritanceTensor(
        gamma_f=gamma_f,
        gamma_m=gamma_m,
        row_sum_tol=row_sum_tol,
        signed=len(header) == 3,
    )


def read_tensor_file(path: Path | str, row_sum_tol: float = FILE_ROW_SUM_TOL) -> InheritanceTensor:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise GonoDynException(f"cannot read tensor file {path}: {e}", ExceptionType.UNREADABLE_FILE)
    return parse_tensor_text(text, row_sum_tol)
