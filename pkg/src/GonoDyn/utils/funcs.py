from datetime import datetime
from typing import List, Sequence

import numpy as np

from GonoDyn.utils.constants import BOUNDARY_REJECT
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


def print_dt(*args, **kw):
    print("[%s]" % (datetime.now()), *args, **kw)


def sup_norm(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(arr)))


def sup_norm_rows(arr: np.ndarray) -> np.ndarray:
    return np.max(np.abs(arr), axis=-1)


def rng_stream(rng_seed: int, index: int) -> np.random.Generator:
    """Independent generator for one sample, so results do not depend on batch order."""
    return np.random.default_rng([rng_seed, index])


def uniform_simplex(rng: np.random.Generator, dim: int, size: int | None = None) -> np.ndarray:
    # normalized exponential spacings are uniform on the simplex
    shape = (dim,) if size is None else (size, dim)
    e = rng.exponential(1.0, size=shape)
    return e / e.sum(axis=-1, keepdims=True)


def sample_simplex_state(rng: np.random.Generator, n: int, nu: int) -> np.ndarray:
    """Uniform point of the simplex whose female and male blocks both keep mass above the rejection margin."""
    while True:
        s = uniform_simplex(rng, n + nu)
        if s[:n].sum() > BOUNDARY_REJECT and s[n:].sum() > BOUNDARY_REJECT:
            return s


def parse_state(text: str) -> List[float]:
    """Comma separated decimal floats with '.' as separator, independent of locale."""
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise GonoDynException(f"cannot parse state '{text}'", ExceptionType.INVALID_STATE)
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise GonoDynException(f"cannot parse state '{text}'", ExceptionType.INVALID_STATE)
    if not all(np.isfinite(values)):
        raise GonoDynException(f"state '{text}' is not finite", ExceptionType.INVALID_STATE)
    return values


def format_float(value: float) -> str:
    return repr(float(value))


def lexicographic_first(rows: Sequence[np.ndarray]) -> np.ndarray | None:
    if len(rows) == 0:
        return None
    return min(rows, key=lambda r: tuple(float(v) for v in r))
