import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from GonoDyn.models.operator import Mode, PopulationState, StopReason
from GonoDyn.models.reports import LimitKind, LimitVerdict, LimitWitness, PropertyReport, SetMembership
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import ORIGIN, S2, HemophiliaOperator
from GonoDyn.operators.trajectory import iterate, iterate_batch
from GonoDyn.utils.constants import PROBE_BUDGET, RNG_SEED, SET_TOL, VERIFY_SAMPLES
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException
from GonoDyn.utils.funcs import lexicographic_first, rng_stream, sup_norm_rows, uniform_simplex

LIMIT_TOL = 1e-8
Q_LEVELS = (1.0, 2.0, 3.0, 4.0)
SAMPLE_BOX = 3.0


# Vectorized predicates on (..., 4) arrays of (x, y, u, v).
def in_O(s: np.ndarray) -> np.ndarray:
    return np.all(np.abs(s[..., :2]) <= SET_TOL, axis=-1) | np.all(np.abs(s[..., 2:]) <= SET_TOL, axis=-1)


def in_I(s: np.ndarray) -> np.ndarray:
    return (np.abs(s[..., 1]) <= SET_TOL) & (np.abs(s[..., 3]) <= SET_TOL)


def in_J(s: np.ndarray) -> np.ndarray:
    return in_I(s) & (np.abs(s[..., 0] - s[..., 2]) <= SET_TOL)


def in_P(s: np.ndarray) -> np.ndarray:
    return np.all(s >= -SET_TOL, axis=-1)


def in_Q(s: np.ndarray, a: float) -> np.ndarray:
    return in_P(s) & (s.sum(axis=-1) <= a + SET_TOL)


def in_N(s: np.ndarray) -> np.ndarray:
    return np.all(s <= SET_TOL, axis=-1)


def in_N0(s: np.ndarray) -> np.ndarray:
    return np.all(s[..., :2] <= SET_TOL, axis=-1) & np.all(s[..., 2:] >= -SET_TOL, axis=-1)


def in_N1(s: np.ndarray) -> np.ndarray:
    return np.all(s[..., :2] >= -SET_TOL, axis=-1) & np.all(s[..., 2:] <= SET_TOL, axis=-1)


def block_product(s: np.ndarray) -> np.ndarray:
    return (s[..., 0] + s[..., 1]) * (s[..., 2] + s[..., 3])


def in_P0(s: np.ndarray) -> np.ndarray:
    return in_P(s) & (block_product(s) < 4.0)


def growth_ratios(s: np.ndarray) -> Dict[str, np.ndarray]:
    x, y, u, v = (s[..., i] for i in range(4))
    return {"xu/4": x * u / 4, "yu/16": y * u / 16, "yv/9": y * v / 9}


def in_F(s: np.ndarray) -> np.ndarray:
    ratios = np.max(np.stack(list(growth_ratios(s).values())), axis=0)
    return in_P(s) & (s.sum(axis=-1) > 4.0) & (ratios > 1.0)


def dominating_ratio(s: np.ndarray) -> Tuple[str, float]:
    name, value = max(growth_ratios(s).items(), key=lambda kv: float(kv[1]))
    return name, float(value)


def _hemophilia_array(s: PopulationState) -> np.ndarray:
    if s.n != 2 or s.nu != 2:
        raise GonoDynException(
            f"set membership needs a (2,2) state, got ({s.n},{s.nu})", ExceptionType.DIMENSION_MISMATCH
        )
    return s.as_array()


def membership(s: PopulationState) -> SetMembership:
    arr = _hemophilia_array(s)
    positive = bool(in_P(arr))
    return SetMembership(
        in_I=bool(in_I(arr)),
        in_J=bool(in_J(arr)),
        in_P=positive,
        in_P0=bool(in_P0(arr)),
        in_Q4=bool(in_Q(arr, 4.0)),
        in_O=bool(in_O(arr)),
        in_N=bool(in_N(arr)),
        in_N0=bool(in_N0(arr)),
        in_N1=bool(in_N1(arr)),
        in_F=bool(in_F(arr)),
        q_level=float(arr.sum()) if positive else None,
    )


def closed_form_J(x0: float, k: int) -> float:
    """k-th iterate of x -> x^2 / 2, i.e. 2 (x0 / 2)^(2^k), evaluated through log |x0 / 2|."""
    if k < 0:
        raise GonoDynException(f"k must be non-negative, got {k}", ExceptionType.INVALID_ARGUMENT)
    if x0 == 0:
        return 0.0
    sign = -1.0 if (k == 0 and x0 < 0) else 1.0
    try:
        exponent = math.ldexp(math.log(abs(x0) / 2), k)
    except OverflowError:
        exponent = math.inf if abs(x0) > 2 else -math.inf
    if exponent > math.log(np.finfo(float).max / 2):
        return sign * math.inf
    return sign * 2 * math.exp(exponent)


class LimitClassifier:
    def __init__(self, op: GonosomalOperator | None = None, probe_budget: int = PROBE_BUDGET) -> None:
        if probe_budget < 1:
            raise GonoDynException(
                f"probe_budget must be at least 1, got {probe_budget}", ExceptionType.INVALID_ARGUMENT
            )
        self.op = op or HemophiliaOperator()
        self.probe_budget = probe_budget

    def classify(self, s: PopulationState) -> LimitVerdict:
        arr = _hemophilia_array(s)
        verdict = self._classify_positive(arr)
        if verdict is not None:
            return verdict
        if in_N(arr):
            return self._forward(arr, 1, "(i)-3", "(ii)-b", "s∈𝒩")
        if in_N0(arr):
            return self._forward(arr, 2, "(i)-4", "(ii)-c", "s∈𝒩₀")
        if in_N1(arr):
            return self._forward(arr, 2, "(i)-5", "(ii)-d", "s∈𝒩₁")
        return self._undecided()

    def _classify_positive(self, arr: np.ndarray) -> LimitVerdict | None:
        if in_P0(arr):
            return LimitVerdict(kind=LimitKind.ZERO, rule="(i)-1", description="s∈P₀")
        if in_Q(arr, 4.0):
            verdict = self._probe_q4(arr)
            if verdict is not None:
                return verdict
        if in_F(arr):
            name, value = dominating_ratio(arr)
            return LimitVerdict(
                kind=LimitKind.INFINITY,
                rule="(ii)-a",
                description="s∈F",
                witness=LimitWitness(quantity=name, value=value),
            )
        return None

    def _probe_q4(self, arr: np.ndarray) -> LimitVerdict | None:
        cur = arr
        stays_on_s2 = True
        for k in range(self.probe_budget + 1):
            if abs(cur[1] * cur[3]) > SET_TOL:
                return LimitVerdict(
                    kind=LimitKind.ZERO,
                    rule="(i)-2",
                    description="s∈Q₄, y⁽ᵏ⁾v⁽ᵏ⁾≠0",
                    witness=LimitWitness(step=k),
                )
            stays_on_s2 &= bool(np.all(np.abs(cur - np.array(S2)) <= SET_TOL))
            cur = self.op.raw_image(cur)
        if stays_on_s2:
            return LimitVerdict(
                kind=LimitKind.S2,
                rule="q4-fixed",
                description="s∈Q₄, y⁽ᵏ⁾=v⁽ᵏ⁾=0 and x⁽ᵏ⁾=u⁽ᵏ⁾=2",
                witness=LimitWitness(step=self.probe_budget),
            )
        return None

    def _forward(self, arr: np.ndarray, steps: int, zero_rule: str, infinity_rule: str, where: str) -> LimitVerdict:
        image = arr
        for _ in range(steps):
            image = self.op.raw_image(image)
        power = "W(s)" if steps == 1 else "W²(s)"
        if in_P0(image):
            return LimitVerdict(
                kind=LimitKind.ZERO,
                rule=zero_rule,
                description=f"{where}, {power}∈P₀",
                witness=LimitWitness(step=steps),
            )
        if in_F(image):
            name, value = dominating_ratio(image)
            return LimitVerdict(
                kind=LimitKind.INFINITY,
                rule=infinity_rule,
                description=f"{where}, {power}∈F",
                witness=LimitWitness(step=steps, quantity=name, value=value),
            )
        return self._undecided()

    def _undecided(self) -> LimitVerdict:
        return LimitVerdict(kind=LimitKind.UNDECIDED, rule="undecided", description="no clause applies")


def classify_limit(s: PopulationState, probe_budget: int = PROBE_BUDGET) -> LimitVerdict:
    return LimitClassifier(probe_budget=probe_budget).classify(s)


# Samplers for the property suites, each returning a (samples, 4) array.
def sample_I(rng: np.random.Generator, samples: int) -> np.ndarray:
    s = np.zeros((samples, 4))
    s[:, [0, 2]] = rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, size=(samples, 2))
    return s


def sample_J(rng: np.random.Generator, samples: int) -> np.ndarray:
    s = np.zeros((samples, 4))
    s[:, 0] = s[:, 2] = rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, size=samples)
    return s


def sample_P(rng: np.random.Generator, samples: int) -> np.ndarray:
    return rng.uniform(0.0, SAMPLE_BOX, size=(samples, 4))


def sample_Q(rng: np.random.Generator, samples: int, a: float) -> np.ndarray:
    return a * rng.uniform(0.0, 1.0, size=(samples, 1)) * uniform_simplex(rng, 4, samples)


def sample_O(rng: np.random.Generator, samples: int) -> np.ndarray:
    s = rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, size=(samples, 4))
    female_empty = rng.uniform(size=samples) < 0.5
    s[female_empty, :2] = 0.0
    s[~female_empty, 2:] = 0.0
    return s


def sample_signed(rng: np.random.Generator, samples: int, female_sign: float, male_sign: float) -> np.ndarray:
    s = rng.uniform(0.0, SAMPLE_BOX, size=(samples, 4))
    s[:, :2] *= female_sign
    s[:, 2:] *= male_sign
    return s


def containment_report(
    property_id: str, states: np.ndarray, images: np.ndarray, holds: Callable[[np.ndarray], np.ndarray]
) -> PropertyReport:
    ok = holds(images)
    bad = states[~ok]
    first = lexicographic_first(list(bad))
    return PropertyReport(
        property_id=property_id,
        samples=len(states),
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def _require_hemophilia_shape(op: GonosomalOperator) -> None:
    if op.n != 2 or op.nu != 2:
        raise GonoDynException("invariant-set suites need a (2,2) operator", ExceptionType.DIMENSION_MISMATCH)


def verify_lemma1(
    op: GonosomalOperator | None = None, samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED
) -> List[PropertyReport]:
    op = op or HemophiliaOperator()
    _require_hemophilia_shape(op)
    cases: List[Tuple[str, Callable[[np.random.Generator], np.ndarray], Callable[[np.ndarray], np.ndarray]]] = [
        ("invariance.I", lambda r: sample_I(r, samples), in_I),
        ("invariance.J", lambda r: sample_J(r, samples), in_J),
        ("invariance.P", lambda r: sample_P(r, samples), in_P),
    ]
    for a in Q_LEVELS:
        cases.append(
            (f"contraction.Q{a:g}", lambda r, a=a: sample_Q(r, samples, a), lambda img, a=a: in_Q(img, a * a / 4) & in_Q(img, a))
        )
    cases += [
        ("annihilation.O", lambda r: sample_O(r, samples), lambda img: np.all(img == 0.0, axis=-1)),
        ("N_to_P", lambda r: sample_signed(r, samples, -1.0, -1.0), in_P),
        ("N0_to_N", lambda r: sample_signed(r, samples, -1.0, 1.0), in_N),
        ("N1_to_N", lambda r: sample_signed(r, samples, 1.0, -1.0), in_N),
    ]
    reports = []
    for idx, (name, sampler, holds) in enumerate(cases):
        states = sampler(rng_stream(rng_seed, idx))
        reports.append(containment_report(f"lemma1.{name}", states, op.raw_image(states), holds))
    return reports


def verify_lemma2(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED, max_level: float = 3.9) -> PropertyReport:
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    levels = rng.uniform(0.0, max_level, size=(samples, 1))
    states = levels * rng.uniform(0.0, 1.0, size=(samples, 1)) * uniform_simplex(rng, 4, samples)
    outcome = iterate_batch(op, states, Mode.RAW)
    converged = np.array([r == StopReason.CONVERGED_TO_POINT for r in outcome.stop_reasons])
    ok = converged & (sup_norm_rows(outcome.finals) <= LIMIT_TOL)
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="lemma2.Q_below_4_to_origin",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def verify_lemma3_identity(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED) -> PropertyReport:
    """On x + y = u + v = 2: x' + y' = 2 - yv/6 and u' + v' = 2 + yv/6."""
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    y = rng.uniform(0.0, 2.0, size=samples)
    v = rng.uniform(0.0, 2.0, size=samples)
    states = np.column_stack([2.0 - y, y, 2.0 - v, v])
    images = op.raw_image(states)
    shift = y * v / 6
    err = np.maximum(
        np.abs(images[:, 0] + images[:, 1] - (2.0 - shift)),
        np.abs(images[:, 2] + images[:, 3] - (2.0 + shift)),
    )
    ok = err <= SET_TOL
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="lemma3.boundary_identity",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def verify_lemma4(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED, probe_steps: int = 10) -> PropertyReport:
    """On x + y = u + v = 2 with yv = 0, y⁽ᵏ⁾v⁽ᵏ⁾ stays zero only when y = v = 0.

    A start with y or v nonzero shows a nonzero product within two steps; the start
    (2, 0, 2, 0) keeps y⁽ᵏ⁾ = v⁽ᵏ⁾ = 0 for every probed k.
    """
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    carriers = rng.uniform(0.01, 2.0, size=samples)
    female_side = rng.uniform(size=samples) < 0.5
    y = np.where(female_side, carriers, 0.0)
    v = np.where(female_side, 0.0, carriers)
    states = np.vstack([np.column_stack([2.0 - y, y, 2.0 - v, v]), np.array(S2)])

    cur = states.copy()
    first_product_step = np.full(len(states), -1)
    clean = np.ones(len(states), dtype=bool)
    for k in range(probe_steps + 1):
        hit = (np.abs(cur[:, 1] * cur[:, 3]) > SET_TOL) & (first_product_step < 0)
        first_product_step[hit] = k
        clean &= (np.abs(cur[:, 1]) <= SET_TOL) & (np.abs(cur[:, 3]) <= SET_TOL)
        cur = op.raw_image(cur)

    trivial = (np.abs(states[:, 1]) <= SET_TOL) & (np.abs(states[:, 3]) <= SET_TOL)
    ok = np.where(trivial, clean, (first_product_step >= 0) & (first_product_step <= 2))
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="lemma4.zero_products_force_s2",
        samples=len(states),
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def verify_lemma5_bound(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED, max_k: int = 4) -> PropertyReport:
    """x⁽ᵏ⁺¹⁾ and u⁽ᵏ⁺¹⁾ both dominate 2 (xu/4)^(2^k) on P when xu/4 > 1."""
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(1.0, SAMPLE_BOX, size=samples)
    ratio = rng.uniform(1.0, 1.5, size=samples)
    u = 4 * ratio / x
    states = np.column_stack([x, rng.uniform(0.0, 1.0, size=samples), u, rng.uniform(0.0, 1.0, size=samples)])

    ok = np.ones(samples, dtype=bool)
    cur = states.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(max_k + 1):
            cur = op.raw_image(cur)
            bound = 2 * ratio ** (2**k)
            finite = np.all(np.isfinite(cur), axis=1) & np.isfinite(bound)
            holds = (cur[:, 0] >= bound * (1 - SET_TOL)) & (cur[:, 2] >= bound * (1 - SET_TOL))
            ok &= ~finite | holds
    first = lexicographic_first(list(states[~ok]))
    return PropertyReport(
        property_id="lemma5.doubly_exponential_growth",
        samples=samples,
        failures=int((~ok).sum()),
        first_counterexample=None if first is None else first.tolist(),
    )


def verify_closed_form_J(samples: int = 1_000, rng_seed: int = RNG_SEED, max_k: int = 6) -> PropertyReport:
    op = HemophiliaOperator()
    rng = np.random.default_rng(rng_seed)
    failures = 0
    first = None
    for x0 in rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, size=samples):
        by_map = float(x0)
        state = np.array([x0, 0.0, x0, 0.0])
        for k in range(max_k + 1):
            closed = closed_form_J(float(x0), k)
            agrees = math.isclose(closed, by_map, rel_tol=1e-10, abs_tol=1e-300)
            agrees &= math.isclose(closed, state[0], rel_tol=1e-10, abs_tol=1e-300)
            agrees &= state[0] == state[2]
            if not agrees:
                failures += 1
                first = first if first is not None else [float(x0), 0.0, float(x0), 0.0]
                break
            by_map = by_map * by_map / 2
            state = op.raw_image(state)
    return PropertyReport(
        property_id="dynamics_on_J.closed_form", samples=samples, failures=failures, first_counterexample=first
    )


def verify_i_trichotomy(products: Tuple[float, ...] = (1.0, 3.99, 4.0, 4.01, 9.0)) -> PropertyReport:
    """Starts (±1, 0, p, 0) on I: origin when p < 4, (2,0,2,0) when p = 4, divergence when p > 4."""
    op = HemophiliaOperator()
    failures = 0
    first = None
    cases = 0
    for p in products:
        for x0 in (1.0, -1.0):
            cases += 1
            state = PopulationState(female=(x0, 0.0), male=(p, 0.0))
            record = iterate(op, state)
            if p < 4:
                target = np.array(ORIGIN)
            elif p == 4:
                target = np.array(S2)
            else:
                target = None
            if target is None:
                ok = record.stop_reason == StopReason.DIVERGED
            else:
                ok = (
                    record.stop_reason == StopReason.CONVERGED_TO_POINT
                    and float(np.max(np.abs(record.limit.as_array() - target))) <= LIMIT_TOL
                )
            if not ok:
                failures += 1
                first = first if first is not None else list(state.as_array())
    return PropertyReport(property_id="dynamics_on_I.trichotomy", samples=cases, failures=failures, first_counterexample=first)


def _split_blocks(rng: np.random.Generator, female: np.ndarray, male: np.ndarray) -> np.ndarray:
    a = rng.uniform(size=len(female))
    b = rng.uniform(size=len(male))
    return np.column_stack([female * a, female * (1 - a), male * b, male * (1 - b)])


def sample_P0(rng: np.random.Generator, samples: int) -> np.ndarray:
    female = rng.uniform(0.0, SAMPLE_BOX, size=samples)
    male = rng.uniform(0.0, 1.0, size=samples) * np.minimum(SAMPLE_BOX, 4.0 / np.maximum(female, SET_TOL))
    return _split_blocks(rng, female, male)


def sample_F(rng: np.random.Generator, samples: int) -> np.ndarray:
    """Positive states with sum > 4 where xu/4 (half of them) or yv/9 (the rest) lies in (1.05, 1.5)."""
    s = rng.uniform(0.0, 1.0, size=(samples, 4))
    ratio = rng.uniform(1.05, 1.5, size=samples)
    via_xu = rng.uniform(size=samples) < 0.5
    x = rng.uniform(1.0, SAMPLE_BOX, size=samples)
    y = rng.uniform(3.0, 4.5, size=samples)
    s[via_xu, 0] = x[via_xu]
    s[via_xu, 2] = 4 * ratio[via_xu] / x[via_xu]
    s[~via_xu, 1] = y[~via_xu]
    s[~via_xu, 3] = 9 * ratio[~via_xu] / y[~via_xu]
    return s


def sample_Q4_boundary(rng: np.random.Generator, samples: int) -> np.ndarray:
    y = rng.uniform(0.01, 2.0, size=samples)
    v = rng.uniform(0.01, 2.0, size=samples)
    side = rng.integers(0, 4, size=samples)
    v[side == 0] = 0.0
    y[side == 1] = 0.0
    states = np.column_stack([2.0 - y, y, 2.0 - v, v])
    return np.vstack([states, np.array(S2)])


# (family, sampler, every state must be decided)
SOUNDNESS_FAMILIES: List[Tuple[str, Callable[[np.random.Generator, int], np.ndarray], bool]] = [
    ("P0", sample_P0, True),
    ("F", sample_F, True),
    ("Q4_boundary", sample_Q4_boundary, True),
    ("N", lambda r, m: sample_signed(r, m, -1.0, -1.0), False),
    ("N0", lambda r, m: sample_signed(r, m, -1.0, 1.0), False),
    ("N1", lambda r, m: sample_signed(r, m, 1.0, -1.0), False),
]


def _verdict_holds(kind: LimitKind, reason: StopReason, final: np.ndarray) -> bool:
    match kind:
        case LimitKind.ZERO:
            return reason == StopReason.CONVERGED_TO_POINT and float(np.max(np.abs(final))) <= LIMIT_TOL
        case LimitKind.S2:
            return reason == StopReason.CONVERGED_TO_POINT and float(np.max(np.abs(final - np.array(S2)))) <= LIMIT_TOL
        case _:
            return reason == StopReason.DIVERGED


def verify_classifier_soundness(samples: int = VERIFY_SAMPLES, rng_seed: int = RNG_SEED) -> PropertyReport:
    """Undecided verdicts are tallied per family; in P0, F and on the Q4 boundary they count as failures."""
    op = HemophiliaOperator()
    classifier = LimitClassifier(op)
    per_family = max(samples // len(SOUNDNESS_FAMILIES), 1)

    failures: List[np.ndarray] = []
    checked = 0
    total = 0
    tallies = []
    for idx, (family, sampler, must_decide) in enumerate(SOUNDNESS_FAMILIES):
        states = sampler(rng_stream(rng_seed, idx), per_family)
        verdicts = [classifier.classify(PopulationState.from_array(s, 2)) for s in states]
        decided = np.array([v.kind != LimitKind.UNDECIDED for v in verdicts])
        if must_decide:
            failures += list(states[~decided])
        outcome = iterate_batch(op, states[decided], Mode.RAW)
        kinds = [v.kind for v, d in zip(verdicts, decided) if d]
        for state, kind, reason, final in zip(states[decided], kinds, outcome.stop_reasons, outcome.finals):
            if not _verdict_holds(kind, reason, final):
                failures.append(state)
        checked += int(decided.sum())
        total += len(states)
        tallies.append(f"{family} {int(decided.sum())}/{len(states)}")

    first = lexicographic_first(failures)
    return PropertyReport(
        property_id="theorem.classifier_soundness",
        samples=checked,
        failures=len(failures),
        first_counterexample=None if first is None else first.tolist(),
        detail=f"{total - checked} of {total} states undecided; decided {', '.join(tallies)}",
    )
