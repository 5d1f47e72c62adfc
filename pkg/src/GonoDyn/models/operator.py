from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from GonoDyn.utils.constants import ANNIHILATION_GUARD, ROW_SUM_TOL, SIMPLEX_TOL
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


class Mode(str, Enum):
    RAW = "raw"
    NORMALIZED = "normalized"


class StopReason(str, Enum):
    CONVERGED_TO_POINT = "ConvergedToPoint"
    DIVERGED = "Diverged"
    BUDGET_EXHAUSTED = "BudgetExhausted"


def _frozen_array(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


class InheritanceTensor(BaseModel):
    """Coefficients gamma_f[i, k, j] and gamma_m[i, k, l] of a gonosomal inheritance law.

    For every mating pair (i, k) the female and male coefficients together sum to one
    within `row_sum_tol`. Unless `signed` is set they are also non-negative, so each
    pair's row is a probability vector.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma_f: np.ndarray
    gamma_m: np.ndarray
    row_sum_tol: float = ROW_SUM_TOL
    # signed tensors may carry negative coefficients; only the raw operator accepts them
    signed: bool = False

    @field_validator("gamma_f", "gamma_m", mode="before")
    @classmethod
    def to_array(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def check_probabilities(self) -> "InheritanceTensor":
        gf, gm = self.gamma_f, self.gamma_m
        if gf.ndim != 3 or gm.ndim != 3:
            raise GonoDynException(
                "tensor blocks must be three dimensional", ExceptionType.INVALID_TENSOR
            )
        n, nu, n_out = gf.shape
        if n < 1 or nu < 1 or n_out != n or gm.shape != (n, nu, nu):
            raise GonoDynException(
                f"inconsistent block shapes {gf.shape} and {gm.shape}",
                ExceptionType.INVALID_TENSOR,
            )
        if not (np.all(np.isfinite(gf)) and np.all(np.isfinite(gm))):
            raise GonoDynException("tensor has non-finite entries", ExceptionType.INVALID_TENSOR)
        if not self.signed and not self.non_negative:
            raise GonoDynException("tensor has negative entries", ExceptionType.INVALID_TENSOR)
        row_sums = gf.sum(axis=2) + gm.sum(axis=2)
        bad = np.argwhere(np.abs(row_sums - 1.0) > self.row_sum_tol)
        if len(bad) > 0:
            i, k = (int(v) for v in bad[0])
            raise GonoDynException(
                f"coefficients of pair ({i + 1},{k + 1}) sum to {row_sums[i, k]!r}",
                ExceptionType.INVALID_TENSOR,
            )
        return self

    @property
    def non_negative(self) -> bool:
        return bool(np.all(self.gamma_f >= 0) and np.all(self.gamma_m >= 0))

    @property
    def n(self) -> int:
        return self.gamma_f.shape[0]

    @property
    def nu(self) -> int:
        return self.gamma_f.shape[1]


class PopulationState(BaseModel):
    model_config = ConfigDict(frozen=True)

    female: Tuple[float, ...] = Field(min_length=1)
    male: Tuple[float, ...] = Field(min_length=1)

    @field_validator("female", "male")
    @classmethod
    def check_finite(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(np.isfinite(value)):
            raise GonoDynException("state has non-finite coordinates", ExceptionType.INVALID_STATE)
        return value

    @classmethod
    def from_array(cls, arr, n: int) -> "PopulationState":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 1 or not 0 < n < arr.size:
            raise GonoDynException(
                f"cannot split {arr.shape} into a female block of size {n}",
                ExceptionType.DIMENSION_MISMATCH,
            )
        return cls(female=tuple(arr[:n].tolist()), male=tuple(arr[n:].tolist()))

    @property
    def n(self) -> int:
        return len(self.female)

    @property
    def nu(self) -> int:
        return len(self.male)

    @property
    def dim(self) -> int:
        return self.n + self.nu

    def as_array(self) -> np.ndarray:
        return np.array(self.female + self.male, dtype=float)

    @property
    def female_sum(self) -> float:
        return float(sum(self.female))

    @property
    def male_sum(self) -> float:
        return float(sum(self.male))

    @property
    def total(self) -> float:
        return self.female_sum + self.male_sum

    @property
    def block_product(self) -> float:
        return self.female_sum * self.male_sum


class SimplexState(PopulationState):
    """Point of the probability simplex with mass in both sexes."""

    @model_validator(mode="after")
    def check_simplex(self) -> "SimplexState":
        arr = self.as_array()
        if np.any(arr < -SIMPLEX_TOL) or abs(arr.sum() - 1.0) > SIMPLEX_TOL:
            raise GonoDynException(
                f"{arr.tolist()} is not on the simplex", ExceptionType.NOT_ON_SIMPLEX
            )
        if self.female_sum <= ANNIHILATION_GUARD or self.male_sum <= ANNIHILATION_GUARD:
            raise GonoDynException(
                f"{arr.tolist()} has an empty sex block", ExceptionType.NOT_ON_SIMPLEX
            )
        return self

    @classmethod
    def from_state(cls, state: PopulationState) -> "SimplexState":
        return cls(female=state.female, male=state.male)


class TrajectoryRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode: Mode
    iterates: List[PopulationState]
    # step index of every stored iterate; differs from position once thinning starts
    steps: List[int]
    stop_reason: StopReason
    steps_taken: int
    limit: PopulationState | None = None

    @property
    def final(self) -> PopulationState:
        return self.iterates[-1]
