from enum import Enum
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from GonoDyn.models.operator import Mode, PopulationState, StopReason
from GonoDyn.utils.funcs import format_float


class Classification(str, Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    SADDLE = "Saddle"
    NON_HYPERBOLIC = "NonHyperbolic"


class LimitKind(str, Enum):
    ZERO = "Zero"
    S2 = "S2"
    INFINITY = "Infinity"
    UNDECIDED = "Undecided"


def _state_record(prefix: str, state: PopulationState) -> Dict[str, str]:
    return {f"{prefix}.{i}": format_float(v) for i, v in enumerate(state.as_array())}


class FixedPointReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode: Mode
    point: PopulationState
    residual: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: Classification
    note: str | None = None

    def to_record(self) -> Dict[str, str]:
        record = {"mode": self.mode.value}
        record.update(_state_record("point", self.point))
        record["residual"] = format_float(self.residual)
        for i, ev in enumerate(self.eigenvalues):
            record[f"eigenvalue.{i}.re"] = format_float(ev.real)
            record[f"eigenvalue.{i}.im"] = format_float(ev.imag)
        record["classification"] = self.classification.value
        if self.note:
            record["note"] = self.note
        return record


class FixedPointSearch(BaseModel):
    reports: List[FixedPointReport]
    seeds_tried: int
    seeds_dropped: int


class SetMembership(BaseModel):
    in_I: bool
    in_J: bool
    in_P: bool
    in_P0: bool
    in_Q4: bool
    in_O: bool
    in_N: bool
    in_N0: bool
    in_N1: bool
    in_F: bool
    # smallest a with s in Q_a, only when s is in P
    q_level: float | None = None

    def to_record(self) -> Dict[str, str]:
        record = {name.removeprefix("in_"): str(flag).lower() for name, flag in self if name.startswith("in_")}
        if self.q_level is not None:
            record["q_level"] = format_float(self.q_level)
        return record


class LimitWitness(BaseModel):
    step: int | None = None
    quantity: str | None = None
    value: float | None = None


class LimitVerdict(BaseModel):
    kind: LimitKind
    rule: str
    description: str
    witness: LimitWitness = Field(default_factory=LimitWitness)

    def to_record(self) -> Dict[str, str]:
        record = {"kind": self.kind.value, "rule": self.rule, "description": self.description}
        if self.witness.step is not None:
            record["witness.step"] = str(self.witness.step)
        if self.witness.quantity is not None:
            record["witness.quantity"] = self.witness.quantity
            record["witness.value"] = format_float(self.witness.value)
        return record


class PropertyReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    property_id: str
    samples: int
    failures: int = 0
    first_counterexample: List[float] | None = None
    detail: str | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_record(self) -> Dict[str, str]:
        record = {
            "property": self.property_id,
            "samples": str(self.samples),
            "failures": str(self.failures),
            "passed": str(self.passed).lower(),
        }
        if self.first_counterexample is not None:
            record["counterexample"] = ",".join(format_float(v) for v in self.first_counterexample)
        if self.detail:
            record["detail"] = self.detail
        return record


class BoundCheck(BaseModel):
    name: str
    step: int
    value: float
    bound: float
    holds: bool


class EstimateReport(BaseModel):
    state: PopulationState
    checks: List[BoundCheck]
    # v(n+1) / y(n) for the probed steps where y(n) is positive
    contraction_ratios: Dict[int, float]
    max_contraction_ratio: float
    stated_constant_exceedances: List[int]

    @property
    def violations(self) -> List[BoundCheck]:
        return [c for c in self.checks if not c.holds]


class ScanFailure(BaseModel):
    sample_index: int
    state: List[float]
    step: int
    reason: str


class ConjectureScanReport(BaseModel):
    samples: int
    rng_seed: int
    tol: float
    budget: int
    converged: int
    budget_exhausted: int
    max_steps_observed: int
    worst_final_distance: float
    worst_final_load: float
    failures: List[ScanFailure]
    histogram: Dict[int, int]

    def to_record(self) -> Dict[str, str]:
        return {
            "samples": str(self.samples),
            "rng_seed": str(self.rng_seed),
            "tol": format_float(self.tol),
            "budget": str(self.budget),
            "converged": str(self.converged),
            "budget_exhausted": str(self.budget_exhausted),
            "failures": str(len(self.failures)),
            "max_steps_observed": str(self.max_steps_observed),
            "worst_final_distance": format_float(self.worst_final_distance),
            "worst_final_load": format_float(self.worst_final_load),
        }


class TrajectorySummary(BaseModel):
    stop_reason: StopReason
    steps_taken: int
    limit: PopulationState | None = None

    def to_record(self) -> Dict[str, str]:
        record = {"stop_reason": self.stop_reason.value, "steps_taken": str(self.steps_taken)}
        if self.limit is not None:
            record.update(_state_record("limit", self.limit))
        return record


class RunConfig(BaseModel):
    samples: int = Field(gt=0)
    rng_seed: int
    verbose: bool = False
