from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from pandera.typing import DataFrame
from tqdm import tqdm

from GonoDyn.models.operator import InheritanceTensor, PopulationState, SimplexState
from GonoDyn.models.reports import (
    BoundCheck,
    ConjectureScanReport,
    EstimateReport,
    PropertyReport,
    ScanFailure,
)
from GonoDyn.models.tables import ScanFailureTable, StepHistogramTable
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import P_STAR, HemophiliaOperator
from GonoDyn.operators.reduced import ReducedSystem
from GonoDyn.operators.trajectory import coordinate_names
from GonoDyn.utils.constants import (
    ANNIHILATION_GUARD,
    CONTRACTION_BOUND,
    ESTIMATE_PROBE_STEPS,
    ESTIMATE_SLACK,
    FIXED_POINT_TOL,
    LOAD_SLACK,
    RNG_SEED,
    SAMPLES,
    SCAN_BUDGET,
    SCAN_TOL,
    SIMPLEX_TOL,
    STATED_CONTRACTION,
    VERIFY_SAMPLES,
)
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException
from GonoDyn.utils.funcs import (
    lexicographic_first,
    print_dt,
    rng_stream,
    sample_simplex_state,
    sup_norm,
    sup_norm_rows,
)

HEMOPHILIA_COORDINATES = {"x": 0, "y": 1, "u": 2, "v": 3}
# L(V(s)) = L - (4/27) L^2 + O(L^3) along the slow direction f = 2m near p
LOAD_DECAY_CONSTANT = 4 / 27


def ec_condition(t: InheritanceTensor) -> bool:
    """True when every coefficient row puts mass on both sexes, i.e. V maps the simplex minus O into itself."""
    if not t.non_negative:
        raise GonoDynException("coefficients must be non-negative", ExceptionType.INVALID_TENSOR)
    return ec_violation_witness(t) is None


def ec_violation_witness(t: InheritanceTensor) -> Tuple[int, int] | None:
    """First pair (i, k), 0-based, whose offspring are all female or all male."""
    female = t.gamma_f.sum(axis=2)
    male = t.gamma_m.sum(axis=2)
    bad = np.argwhere((female <= 0) | (male <= 0))
    if len(bad) == 0:
        return None
    return int(bad[0][0]), int(bad[0][1])


def concentrated_state(t: InheritanceTensor, i: int, k: int) -> np.ndarray:
    s = np.zeros(t.n + t.nu)
    s[i] = 0.5
    s[t.n + k] = 0.5
    return s


def verify_ec_converse(t: InheritanceTensor) -> PropertyReport:
    witness = ec_violation_witness(t)
    if witness is None:
        return PropertyReport(property_id="normalized.ec_converse", samples=0, detail="condition holds, nothing to refute")
    op = GonosomalOperator(t)
    state = concentrated_state(t, *witness)
    image = op.raw_image(state)
    female, male = op.block_sums(image)
    annihilated = female <= ANNIHILATION_GUARD or male <= ANNIHILATION_GUARD
    return PropertyReport(
        property_id="normalized.ec_converse",
        samples=1,
        failures=0 if annihilated else 1,
        first_counterexample=None if annihilated else state.tolist(),
        detail=f"pair ({witness[0] + 1},{witness[1] + 1})",
    )


def _check_normalizable(op: GonosomalOperator) -> None:
    if not op.tensor.non_negative:
        raise GonoDynException("normalized operator needs non-negative coefficients", ExceptionType.INVALID_TENSOR)


def apply_normalized(op: GonosomalOperator, s: SimplexState) -> SimplexState:
    _check_normalizable(op)
    arr = op.check_state(SimplexState.from_state(s))
    image = op.normalized_image(arr)
    return SimplexState(female=tuple(image[: op.n].tolist()), male=tuple(image[op.n :].tolist()))


def scale_invariance_residual(op: GonosomalOperator, s: np.ndarray, lam: float) -> float:
    if not lam > 0:
        raise GonoDynException(f"scale must be positive, got {lam}", ExceptionType.INVALID_ARGUMENT)
    s = op.check_array(s)
    return sup_norm(op.normalized_image(lam * s) - op.normalized_image(s))


def normalize_fp(s_raw: PopulationState) -> SimplexState:
    arr = s_raw.as_array()
    if np.any(arr < -SIMPLEX_TOL):
        raise GonoDynException(f"{arr.tolist()} has a negative coordinate", ExceptionType.INVALID_STATE)
    total = arr.sum()
    if total <= 0:
        raise GonoDynException("state has zero total mass", ExceptionType.INVALID_STATE)
    return SimplexState.from_state(PopulationState.from_array(arr / total, s_raw.n))


def denormalize_fp(s_simplex: SimplexState, op: GonosomalOperator | None = None) -> PopulationState:
    """s / Z with Z the product of the block sums; a raw fixed point when s is a normalized one.

    Raises NOT_FIXED_POINT when the result misses W(s) = s by more than
    FIXED_POINT_TOL relative to its size.
    """
    op = HemophiliaOperator() if op is None else op
    z = s_simplex.female_sum * s_simplex.male_sum
    raw = op.check_array(s_simplex.as_array() / z)
    residual = sup_norm(op.raw_image(raw) - raw)
    if residual > FIXED_POINT_TOL * max(1.0, sup_norm(raw)):
        raise GonoDynException(
            f"{s_simplex.as_array().tolist()} is not a normalized fixed point, raw residual {residual!r}",
            ExceptionType.NOT_FIXED_POINT,
        )
    return PopulationState.from_array(raw, s_simplex.n)


def verify_correspondence(op: GonosomalOperator, raw_fixed_points: Sequence[PopulationState]) -> PropertyReport:
    _check_normalizable(op)
    checked = 0
    failures: List[np.ndarray] = []
    for point in raw_fixed_points:
        arr = op.check_state(point)
        if np.any(arr < -SIMPLEX_TOL) or arr.sum() <= 0:
            continue
        checked += 1
        try:
            simplex = normalize_fp(point)
            back = denormalize_fp(simplex, op).as_array()
        except GonoDynException:
            failures.append(arr)
            continue
        residual = sup_norm(op.normalized_image(simplex.as_array()) - simplex.as_array())
        if residual > FIXED_POINT_TOL or sup_norm(back - arr) > 1e-10:
            failures.append(arr)
    first = lexicographic_first(failures)
    return PropertyReport(
        property_id="normalized.fixed_point_correspondence",
        samples=checked,
        failures=len(failures),
        first_counterexample=None if first is None else first.tolist(),
    )


def on_simplex_rows(s: np.ndarray, n: int) -> np.ndarray:
    female, male = s[:, :n].sum(axis=1), s[:, n:].sum(axis=1)
    return (
        np.all(np.isfinite(s), axis=1)
        & np.all(s >= -SIMPLEX_TOL, axis=1)
        & (np.abs(s.sum(axis=1) - 1.0) <= SIMPLEX_TOL)
        & (female > ANNIHILATION_GUARD)
        & (male > ANNIHILATION_GUARD)
    )


def verify_simplex_preservation(
    t: InheritanceTensor, samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED
) -> PropertyReport:
    if not ec_condition(t):
        raise GonoDynException("tensor fails the both-sexes condition", ExceptionType.INVALID_TENSOR)
    op = GonosomalOperator(t)
    states = np.array([sample_simplex_state(rng_stream(rng_seed, i), t.n, t.nu) for i in range(samples)])
    ok = on_simplex_rows(op.normalized_image(states), t.n)
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="normalized.simplex_preservation",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


# Hemophilia specific analytics; states are (x, y, u, v) on the simplex.
def _hemophilia_simplex(s: PopulationState) -> np.ndarray:
    if s.n != 2 or s.nu != 2:
        raise GonoDynException(f"expected a (2,2) state, got ({s.n},{s.nu})", ExceptionType.DIMENSION_MISMATCH)
    return SimplexState.from_state(s).as_array()


def carrier_fractions(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return s[..., 1] / (s[..., 0] + s[..., 1]), s[..., 3] / (s[..., 2] + s[..., 3])


def image_from_fractions(f: float, m: float) -> np.ndarray:
    """V(s) depends on s only through its carrier fractions."""
    return np.array([(2 - f) * (1 - m) / 4, (6 * m + 3 * f - 5 * f * m) / 12, (6 - 3 * f + f * m) / 12, f * (3 + m) / 12])


def hemophilia_load(s: np.ndarray) -> np.ndarray:
    f, m = carrier_fractions(s)
    return f + m


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num, den = np.broadcast_arrays(np.asarray(num, dtype=float), np.asarray(den, dtype=float))
    return np.divide(num, den, out=np.zeros(num.shape), where=den > 0)


def _bound_rows(s: np.ndarray, image: np.ndarray) -> List[Tuple[str, np.ndarray, np.ndarray, np.ndarray]]:
    """(name, lower, value, upper) for each two-sided bound on V(s); works on one state or a batch."""
    x, y, u, v = np.moveaxis(s, -1, 0)
    xp, yp, up, vp = np.moveaxis(image, -1, 0)
    female, male = x + y, u + v
    return [
        ("x'", _ratio(u, 4 * male), xp, np.minimum(_ratio(u, 2 * male), 0.5)),
        ("y'", _ratio(v, 3 * male), yp, np.minimum(_ratio(u + 2 * v, 4 * male), 0.5)),
        ("u'", np.maximum(0.25, _ratio(2 * x + y, 4 * female)), up, np.minimum(_ratio(3 * x + 2 * y, 6 * female), 0.5)),
        ("v'", _ratio(y, 4 * female), vp, np.minimum(_ratio(y, 3 * female), 1 / 3)),
        ("x'+y'", 1 / 3 + _ratio(u, 6 * male), xp + yp, np.full_like(xp, 0.5)),
        ("u'+v'", np.full_like(up, 0.5), up + vp, np.minimum(0.5 + _ratio(y * v, 6 * female * male), 2 / 3)),
        ("v'<=y'", vp, yp, up),
        ("x'<=u'", np.full_like(xp, -np.inf), xp, up),
    ]


def _within(lower: np.ndarray, value: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return (lower - ESTIMATE_SLACK <= value) & (value <= upper + ESTIMATE_SLACK)


def lemma_bounds(s: np.ndarray, image: np.ndarray, step: int) -> List[BoundCheck]:
    return [
        BoundCheck(
            name=f"{name} range",
            step=step,
            value=float(value),
            bound=float(upper),
            holds=bool(_within(lower, value, upper)),
        )
        for name, lower, value, upper in _bound_rows(s, image)
    ]


def estimate_orbit(states: np.ndarray, probe_steps: Sequence[int] = ESTIMATE_PROBE_STEPS) -> np.ndarray:
    op = HemophiliaOperator()
    last = max(max(probe_steps), 2) + 1
    orbit = [np.asarray(states, dtype=float)]
    for _ in range(last):
        orbit.append(op.normalized_image(orbit[-1]))
    return np.stack(orbit)


def contraction_ratios(orbit: np.ndarray, probe_steps: Sequence[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """y(n), v(n+1) and v(n+1)/y(n) for the probed n; the ratio is 0 where y(n) is below the slack."""
    steps = np.asarray(list(probe_steps), dtype=int)
    y_n, v_next = orbit[steps][..., 1], orbit[steps + 1][..., 3]
    measurable = y_n > ESTIMATE_SLACK
    return y_n, v_next, np.where(measurable, v_next / np.where(measurable, y_n, 1.0), 0.0)


def estimates_hold(orbit: np.ndarray, probe_steps: Sequence[int] = ESTIMATE_PROBE_STEPS) -> np.ndarray:
    ok = np.ones(orbit.shape[1:-1], dtype=bool)
    for step in (1, 2):
        for _, lower, value, upper in _bound_rows(orbit[step - 1], orbit[step]):
            ok &= _within(lower, value, upper)
    second_female = orbit[2][..., 0] + orbit[2][..., 1]
    ok &= _within(5 / 12, second_female, 0.5)
    y_n, v_next, _ = contraction_ratios(orbit, probe_steps)
    ok &= np.all(v_next <= CONTRACTION_BOUND * y_n + ESTIMATE_SLACK, axis=0)
    return ok


def check_estimates(s: PopulationState, probe_steps: Sequence[int] = ESTIMATE_PROBE_STEPS) -> EstimateReport:
    orbit = estimate_orbit(_hemophilia_simplex(s), probe_steps)

    checks = lemma_bounds(orbit[0], orbit[1], 1) + lemma_bounds(orbit[1], orbit[2], 2)
    second_female = orbit[2][0] + orbit[2][1]
    checks.append(
        BoundCheck(
            name="x''+y'' range",
            step=2,
            value=float(second_female),
            bound=0.5,
            holds=bool(_within(5 / 12, second_female, 0.5)),
        )
    )

    y_n, v_next, ratio = contraction_ratios(orbit, probe_steps)
    ratios: Dict[int, float] = {}
    exceedances = []
    for i, n in enumerate(probe_steps):
        checks.append(
            BoundCheck(
                name="v(n+1) <= 7/10 y(n)",
                step=n,
                value=float(v_next[i]),
                bound=float(CONTRACTION_BOUND * y_n[i]),
                holds=bool(v_next[i] <= CONTRACTION_BOUND * y_n[i] + ESTIMATE_SLACK),
            )
        )
        if y_n[i] > ESTIMATE_SLACK:
            ratios[n] = float(ratio[i])
            if ratios[n] > STATED_CONTRACTION:
                exceedances.append(n)

    return EstimateReport(
        state=s,
        checks=checks,
        contraction_ratios=ratios,
        max_contraction_ratio=max(ratios.values(), default=0.0),
        stated_constant_exceedances=exceedances,
    )


def verify_estimates(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED) -> List[PropertyReport]:
    """Bound violations fail; ratios above 13/24 are only counted."""
    states = np.array([sample_simplex_state(rng_stream(rng_seed, i), 2, 2) for i in range(samples)]).reshape(-1, 4)
    probe_steps = ESTIMATE_PROBE_STEPS
    orbit = estimate_orbit(states, probe_steps)
    ok = estimates_hold(orbit, probe_steps)
    y_n, _, ratio = contraction_ratios(orbit, probe_steps)
    exceeding = np.any((y_n > ESTIMATE_SLACK) & (ratio > STATED_CONTRACTION), axis=0)
    worst = float(ratio.max()) if ratio.size else 0.0

    first_violation = lexicographic_first(list(states[~ok]))
    first_exceedance = lexicographic_first(list(states[exceeding]))
    return [
        PropertyReport(
            property_id="normalized.estimate_bounds",
            samples=samples,
            failures=int((~ok).sum()),
            first_counterexample=None if first_violation is None else first_violation.tolist(),
        ),
        PropertyReport(
            property_id="normalized.contraction_13_24_exceedances",
            samples=samples,
            detail=(
                f"{int(exceeding.sum())} states exceed 13/24, largest ratio {worst!r}"
                + ("" if first_exceedance is None else f", first {first_exceedance.tolist()}")
            ),
        ),
    ]


def reduce_normalized(z: np.ndarray, eliminate: str = "u") -> np.ndarray:
    return ReducedSystem(HemophiliaOperator(), _coordinate(eliminate)).image(z)


def _coordinate(name: str) -> int:
    if name not in HEMOPHILIA_COORDINATES:
        raise GonoDynException(f"unknown coordinate '{name}'", ExceptionType.INVALID_ARGUMENT)
    return HEMOPHILIA_COORDINATES[name]


def reduced_jacobian_at(s: PopulationState, eliminate: str = "v") -> np.ndarray:
    arr = _hemophilia_simplex(s)
    system = ReducedSystem(HemophiliaOperator(), _coordinate(eliminate))
    return system.jacobian(system.restrict(arr))


def reduced_jacobian_fd(s: PopulationState, eliminate: str = "v") -> np.ndarray:
    arr = _hemophilia_simplex(s)
    system = ReducedSystem(HemophiliaOperator(), _coordinate(eliminate))
    return system.jacobian_fd(system.restrict(arr))


def transverse_contraction_rate(delta: float = 1e-6, steps: int = 10) -> float:
    """Geometric mean of |e(n+1) / e(n)| for e = f - 2m, started off the slow direction near p."""
    op = HemophiliaOperator()
    cur = np.array([0.5 * (1 - delta), 0.5 * delta, 0.5, 0.0])
    f, m = carrier_fractions(cur)
    deviations = [f - 2 * m]
    for _ in range(steps):
        cur = op.normalized_image(cur)
        f, m = carrier_fractions(cur)
        deviations.append(f - 2 * m)
    ratios = np.abs(np.array(deviations[1:]) / np.array(deviations[:-1]))
    return float(np.exp(np.mean(np.log(ratios))))


def load_after(steps: int, initial_load: float = 0.5) -> float:
    """Load after `steps` applications of V from a start on the slow direction f = 2m."""
    op = HemophiliaOperator()
    m = initial_load / 3
    f = 2 * m
    cur = np.array([0.5 * (1 - f), 0.5 * f, 0.5 * (1 - m), 0.5 * m])
    for _ in range(steps):
        cur = op.normalized_image(cur)
    return float(hemophilia_load(cur))


def verify_load_decay(steps: int = 20_000, initial_load: float = 0.5, band: Tuple[float, float] = (6.0, 7.5)) -> PropertyReport:
    scaled = steps * load_after(steps, initial_load)
    ok = band[0] <= scaled <= band[1]
    return PropertyReport(
        property_id="normalized.load_decay",
        samples=1,
        failures=0 if ok else 1,
        detail=f"n*L(n) = {scaled!r} at n = {steps}, 1/(decay constant) = {1 / LOAD_DECAY_CONSTANT!r}",
    )


def verify_local_stability(
    samples: int = 1_000, rng_seed: int = RNG_SEED, delta: float = 1e-3, steps: int = SCAN_BUDGET
) -> PropertyReport:
    """Starts within delta of p stay within 3 delta while their load never rises."""
    op = HemophiliaOperator()
    p = np.array(P_STAR)
    starts = np.array([(1 - delta) * p + delta * sample_simplex_state(rng_stream(rng_seed, i), 2, 2) for i in range(samples)])
    cur = starts.copy()
    load = hemophilia_load(cur)
    ok = sup_norm_rows(cur - p) <= delta
    for _ in range(steps):
        cur = op.normalized_image(cur)
        new_load = hemophilia_load(cur)
        ok &= (sup_norm_rows(cur - p) <= 3 * delta) & (new_load <= load + LOAD_SLACK)
        load = new_load
    first = lexicographic_first(list(starts[~ok]))
    return PropertyReport(
        property_id="normalized.local_stability",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def verify_healthy_face(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED) -> PropertyReport:
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(1e-6, 1 - 1e-6, size=samples)
    states = np.column_stack([x, np.zeros(samples), 1 - x, np.zeros(samples)])
    ok = sup_norm_rows(op.normalized_image(states) - np.array(P_STAR)) <= SIMPLEX_TOL
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="normalized.healthy_face_one_step",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def scan_states(
    states: np.ndarray,
    rng_seed: int = RNG_SEED,
    tol: float = SCAN_TOL,
    budget: int = SCAN_BUDGET,
    verbose: bool = False,
) -> ConjectureScanReport:
    """Iterates V on every row of `states` and measures the approach to p.

    A row converges once it is within `tol` of p. It fails when it leaves the
    simplex or its load rises.
    """
    if len(states) < 1:
        raise GonoDynException("need at least one sample", ExceptionType.INVALID_ARGUMENT)
    if budget < 1 or not tol > 0:
        raise GonoDynException("budget and tol must be positive", ExceptionType.INVALID_ARGUMENT)
    op = HemophiliaOperator()
    p = np.array(P_STAR)
    starts = np.asarray(states, dtype=float)
    if starts.ndim != 2 or starts.shape[1] != 4:
        raise GonoDynException(f"expected (samples, 4) states, got {starts.shape}", ExceptionType.DIMENSION_MISMATCH)
    if not np.all(on_simplex_rows(starts, 2)):
        raise GonoDynException("scan starts must lie on the simplex", ExceptionType.NOT_ON_SIMPLEX)

    size = len(starts)
    cur = starts.copy()
    load = hemophilia_load(cur)
    converged_at = np.where(sup_norm_rows(cur - p) <= tol, 0, -1)
    active = converged_at < 0
    failures: List[ScanFailure] = []

    for k in tqdm(range(1, budget + 1), desc=f"Scanning {size} starts", disable=not verbose):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = op.normalized_image(cur[idx])
            on_simplex = on_simplex_rows(nxt, 2)
            new_load = hemophilia_load(nxt)
            rising = on_simplex & (new_load > load[idx] + LOAD_SLACK)
            near = sup_norm_rows(nxt - p) <= tol
        for j in np.flatnonzero(~on_simplex | rising):
            failures.append(
                ScanFailure(
                    sample_index=int(idx[j]),
                    state=starts[idx[j]].tolist(),
                    step=k,
                    reason="left the simplex" if not on_simplex[j] else "load increased",
                )
            )
        cur[idx[on_simplex]] = nxt[on_simplex]
        load[idx[on_simplex]] = new_load[on_simplex]
        failed = ~on_simplex | rising
        done = ~failed & near
        converged_at[idx[done]] = k
        active[idx[failed | done]] = False

    converged = int((converged_at >= 0).sum())
    histogram: Dict[int, int] = {}
    for steps in converged_at[converged_at >= 0]:
        histogram[int(steps)] = histogram.get(int(steps), 0) + 1
    report = ConjectureScanReport(
        samples=size,
        rng_seed=rng_seed,
        tol=tol,
        budget=budget,
        converged=converged,
        budget_exhausted=size - converged - len(failures),
        max_steps_observed=int(converged_at.max()) if converged else 0,
        worst_final_distance=float(sup_norm_rows(cur - p).max()),
        worst_final_load=float(hemophilia_load(cur).max()),
        failures=sorted(failures, key=lambda fl: fl.sample_index),
        histogram=dict(sorted(histogram.items())),
    )
    if verbose:
        print_dt(f"{converged} converged, {report.budget_exhausted} exhausted, {len(failures)} failures")
    return report


def scan_conjecture(
    samples: int = SAMPLES,
    rng_seed: int = RNG_SEED,
    tol: float = SCAN_TOL,
    budget: int = SCAN_BUDGET,
    verbose: bool = False,
) -> ConjectureScanReport:
    if samples < 1:
        raise GonoDynException(f"samples must be at least 1, got {samples}", ExceptionType.INVALID_ARGUMENT)
    starts = np.array([sample_simplex_state(rng_stream(rng_seed, i), 2, 2) for i in range(samples)])
    return scan_states(starts, rng_seed, tol, budget, verbose)


def histogram_table(report: ConjectureScanReport) -> DataFrame[StepHistogramTable]:
    df = pd.DataFrame({"steps": list(report.histogram.keys()), "count": list(report.histogram.values())}, dtype=np.int64)
    return StepHistogramTable.validate(df)


def failure_table(report: ConjectureScanReport) -> DataFrame[ScanFailureTable]:
    df = pd.DataFrame(
        {
            "sample_index": pd.Series([fl.sample_index for fl in report.failures], dtype=np.int64),
            "step": pd.Series([fl.step for fl in report.failures], dtype=np.int64),
            "reason": pd.Series([fl.reason for fl in report.failures], dtype=str),
        }
    )
    names = coordinate_names(2, 2)
    for i, name in enumerate(names):
        df[name] = [fl.state[i] for fl in report.failures]
    return ScanFailureTable.validate(df)
