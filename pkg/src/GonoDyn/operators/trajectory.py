from typing import Callable, List

import numpy as np
import pandas as pd
from pandera.typing import DataFrame
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm

from GonoDyn.models.operator import Mode, PopulationState, SimplexState, StopReason, TrajectoryRecord
from GonoDyn.models.tables import TrajectoryTable
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.utils.constants import BUDGET, DIV_THRESHOLD, KEEP_ALL_ITERATES, THIN_EVERY, TOL_FP
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException
from GonoDyn.utils.funcs import sup_norm, sup_norm_rows


def check_knobs(budget: int, tol_fp: float, div_threshold: float) -> None:
    if budget < 1:
        raise GonoDynException(f"budget must be at least 1, got {budget}", ExceptionType.INVALID_ARGUMENT)
    if not tol_fp > 0:
        raise GonoDynException(f"tol_fp must be positive, got {tol_fp}", ExceptionType.INVALID_ARGUMENT)
    if not div_threshold > 0:
        raise GonoDynException(
            f"div_threshold must be positive, got {div_threshold}", ExceptionType.INVALID_ARGUMENT
        )


def step_function(op: GonosomalOperator, mode: Mode) -> Callable[[np.ndarray], np.ndarray]:
    match mode:
        case Mode.RAW:
            return op.raw_image
        case Mode.NORMALIZED:
            if not op.tensor.non_negative:
                raise GonoDynException(
                    "normalized mode needs non-negative coefficients", ExceptionType.INVALID_TENSOR
                )
            return op.normalized_image
        case _:
            raise GonoDynException(f"unknown mode {mode}", ExceptionType.INVALID_ARGUMENT)


class IterateRecorder:
    """Keeps every iterate up to `keep_all` steps, then every `thin_every`-th one."""

    def __init__(self, op: GonosomalOperator, keep_all: int = KEEP_ALL_ITERATES, thin_every: int = THIN_EVERY) -> None:
        self.op = op
        self.keep_all = keep_all
        self.thin_every = thin_every
        self.iterates: List[PopulationState] = []
        self.steps: List[int] = []
        self.last: tuple[int, np.ndarray] | None = None

    def add(self, step: int, arr: np.ndarray) -> None:
        self.last = (step, arr)
        if step <= self.keep_all or step % self.thin_every == 0:
            self._store(step, arr)

    def _store(self, step: int, arr: np.ndarray) -> None:
        self.iterates.append(self.op.to_state(arr))
        self.steps.append(step)

    def close(self) -> None:
        if self.last is not None and (not self.steps or self.steps[-1] != self.last[0]):
            self._store(*self.last)

    def record(
        self, mode: Mode, stop_reason: StopReason, steps_taken: int, limit: np.ndarray | None = None
    ) -> TrajectoryRecord:
        self.close()
        return TrajectoryRecord(
            mode=mode,
            iterates=self.iterates,
            steps=self.steps,
            stop_reason=stop_reason,
            steps_taken=steps_taken,
            limit=None if limit is None else self.op.to_state(limit),
        )


def iterate(
    op: GonosomalOperator,
    s0: PopulationState,
    mode: Mode = Mode.RAW,
    budget: int = BUDGET,
    tol_fp: float = TOL_FP,
    div_threshold: float = DIV_THRESHOLD,
) -> TrajectoryRecord:
    check_knobs(budget, tol_fp, div_threshold)
    cur = op.check_state(s0)
    step = step_function(op, mode)
    if mode == Mode.NORMALIZED:
        SimplexState.from_state(s0)

    recorder = IterateRecorder(op)
    recorder.add(0, cur)
    if sup_norm(cur) > div_threshold:
        return recorder.record(mode, StopReason.DIVERGED, 0)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, budget + 1):
            try:
                nxt = step(cur)
            except GonoDynException as exc:
                exc.step = k - 1
                raise
            if not np.all(np.isfinite(nxt)):
                return recorder.record(mode, StopReason.DIVERGED, k)
            recorder.add(k, nxt)
            if sup_norm(nxt) > div_threshold:
                return recorder.record(mode, StopReason.DIVERGED, k)
            if sup_norm(nxt - cur) <= tol_fp and fixed_point_residual(step, nxt) <= tol_fp:
                return recorder.record(mode, StopReason.CONVERGED_TO_POINT, k, nxt)
            cur = nxt

    return recorder.record(mode, StopReason.BUDGET_EXHAUSTED, budget)


def fixed_point_residual(step: Callable[[np.ndarray], np.ndarray], arr: np.ndarray) -> float:
    try:
        return sup_norm(step(arr) - arr)
    except GonoDynException:
        return float("inf")


class BatchOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    stop_reasons: List[StopReason]
    steps_taken: np.ndarray
    finals: np.ndarray

    def count(self, reason: StopReason) -> int:
        return sum(1 for r in self.stop_reasons if r == reason)


def iterate_batch(
    op: GonosomalOperator,
    states: np.ndarray,
    mode: Mode = Mode.RAW,
    budget: int = BUDGET,
    tol_fp: float = TOL_FP,
    div_threshold: float = DIV_THRESHOLD,
    verbose: bool = False,
) -> BatchOutcome:
    """Vectorized `iterate` over the rows of `states`, keeping only each row's final iterate.

    Stop rules are the same as in `iterate`, applied row by row.
    """
    check_knobs(budget, tol_fp, div_threshold)
    cur = op.check_array(states).copy()
    if cur.ndim != 2:
        raise GonoDynException("states must be a 2-d array", ExceptionType.DIMENSION_MISMATCH)
    step = step_function(op, mode)
    size = len(cur)
    reasons = np.full(size, StopReason.BUDGET_EXHAUSTED, dtype=object)
    steps_taken = np.full(size, budget, dtype=int)
    active = np.ones(size, dtype=bool)

    diverged = sup_norm_rows(cur) > div_threshold
    reasons[diverged] = StopReason.DIVERGED
    steps_taken[diverged] = 0
    active &= ~diverged

    with np.errstate(over="ignore", invalid="ignore"):
        for k in tqdm(range(1, budget + 1), desc=f"Iterating {size} states", disable=not verbose):
            idx = np.flatnonzero(active)
            if len(idx) == 0:
                break
            try:
                nxt = step(cur[idx])
            except GonoDynException as exc:
                exc.step = k - 1
                raise
            blown = ~np.all(np.isfinite(nxt), axis=1)
            blown |= sup_norm_rows(np.where(np.isfinite(nxt), nxt, 0.0)) > div_threshold
            moved = sup_norm_rows(np.where(blown[:, None], 0.0, nxt - cur[idx]))
            candidates = ~blown & (moved <= tol_fp)
            settled = np.zeros(len(idx), dtype=bool)
            if np.any(candidates):
                residual = sup_norm_rows(step(nxt[candidates]) - nxt[candidates])
                settled[np.flatnonzero(candidates)[residual <= tol_fp]] = True

            finite_rows = np.all(np.isfinite(nxt), axis=1)
            cur[idx[finite_rows]] = nxt[finite_rows]
            reasons[idx[blown]] = StopReason.DIVERGED
            reasons[idx[settled]] = StopReason.CONVERGED_TO_POINT
            steps_taken[idx[blown | settled]] = k
            active[idx[blown | settled]] = False

    return BatchOutcome(stop_reasons=list(reasons), steps_taken=steps_taken, finals=cur)


def coordinate_names(n: int, nu: int) -> List[str]:
    if n == 2 and nu == 2:
        return ["x", "y", "u", "v"]
    return [f"f{i}" for i in range(1, n + 1)] + [f"m{i}" for i in range(1, nu + 1)]


def trajectory_table(record: TrajectoryRecord) -> DataFrame[TrajectoryTable]:
    first = record.iterates[0]
    names = coordinate_names(first.n, first.nu)
    df = pd.DataFrame([s.as_array() for s in record.iterates], columns=names)
    df.insert(0, "step", np.asarray(record.steps, dtype=np.int64))
    df["sum"] = [s.total for s in record.iterates]
    df["product"] = [s.block_product for s in record.iterates]
    return TrajectoryTable.validate(df)
