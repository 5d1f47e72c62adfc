from pathlib import Path
from typing import Callable, List

import numpy as np
from tqdm import tqdm

from GonoDyn.analysis import invariant_sets, normalized, spectral
from GonoDyn.integration.tensor_file import read_tensor_file
from GonoDyn.models.operator import InheritanceTensor, Mode, PopulationState
from GonoDyn.models.reports import Classification, PropertyReport, RunConfig
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import ORIGIN, P_STAR, S2, HemophiliaOperator
from GonoDyn.operators.reduced import ReducedSystem
from GonoDyn.utils.exceptions import GonoDynException
from GonoDyn.utils.funcs import (
    lexicographic_first,
    print_dt,
    rng_stream,
    sample_simplex_state,
    sup_norm,
    uniform_simplex,
)

ROOT_TOL = 1e-8
EIGEN_TOL = 1e-8
ORACLE_TOL = 1e-6
IDENTITY_TOL = 1e-12
ORACLE_SAMPLES = 1_000
ORACLE_MARGIN = 0.05

Suite = Callable[[RunConfig], List[PropertyReport]]


def random_tensor(rng: np.random.Generator, n: int, nu: int) -> InheritanceTensor:
    rows = uniform_simplex(rng, n + nu, n * nu).reshape(n, nu, n + nu)
    return InheritanceTensor(gamma_f=rows[..., :n], gamma_m=rows[..., n:])


def verify_sum_product_identity(samples: int, rng_seed: int) -> PropertyReport:
    failures = []
    for i in range(samples):
        rng = rng_stream(rng_seed, i)
        n, nu = (int(v) for v in rng.integers(1, 5, size=2))
        op = GonosomalOperator(random_tensor(rng, n, nu))
        s = rng.uniform(-5.0, 5.0, size=n + nu)
        female, male = op.block_sums(s)
        scale = max(1.0, abs(female * male), float(np.abs(s[:n]).sum() * np.abs(s[n:]).sum()))
        if abs(op.raw_image(s).sum() - female * male) > IDENTITY_TOL * scale:
            failures.append(s)
    first = lexicographic_first(failures)
    return PropertyReport(
        property_id="core.sum_product_identity",
        samples=samples,
        failures=len(failures),
        first_counterexample=None if first is None else first.tolist(),
    )


def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], s: np.ndarray, h: float = 1e-6) -> np.ndarray:
    cols = []
    for i in range(len(s)):
        e = np.zeros(len(s))
        e[i] = h
        cols.append((func(s + e) - func(s - e)) / (2 * h))
    return np.column_stack(cols)


def verify_jacobian_oracle(samples: int, rng_seed: int) -> List[PropertyReport]:
    op = HemophiliaOperator()
    raw_bad, random_bad, reduced_bad = [], [], []
    for i in range(samples):
        rng = rng_stream(rng_seed, i)
        s = rng.uniform(-3.0, 3.0, size=4)
        if sup_norm(op.raw_jacobian(s) - fd_jacobian(op.raw_image, s)) > ORACLE_TOL:
            raw_bad.append(s)
        n, nu = rng.choice(np.arange(1, 5), size=2, replace=False)
        other = GonosomalOperator(random_tensor(rng, int(n), int(nu)))
        t = rng.uniform(-3.0, 3.0, size=other.dim)
        if sup_norm(other.raw_jacobian(t) - fd_jacobian(other.raw_image, t)) > ORACLE_TOL:
            random_bad.append(t)
        point = sample_simplex_state(rng, 2, 2)
        # keep away from O so the difference quotient stays on the domain
        if min(point[:2].sum(), point[2:].sum()) < ORACLE_MARGIN:
            continue
        for eliminate in (2, 3):
            system = ReducedSystem(op, eliminate)
            z = system.restrict(point)
            if sup_norm(system.jacobian(z) - system.jacobian_fd(z)) > ORACLE_TOL:
                reduced_bad.append(point)
                break
    reports = []
    for name, bad in (("raw", raw_bad), ("raw_random_tensors", random_bad), ("reduced", reduced_bad)):
        first = lexicographic_first(bad)
        reports.append(
            PropertyReport(
                property_id=f"core.jacobian_oracle.{name}",
                samples=samples,
                failures=len(bad),
                first_counterexample=None if first is None else first.tolist(),
            )
        )
    return reports


def _eigen_mismatch(eigs: np.ndarray, expected: List[float]) -> float:
    return sup_norm(spectral.sort_eigenvalues(eigs) - spectral.sort_eigenvalues(expected))


def fixed_point_suite(cfg: RunConfig) -> List[PropertyReport]:
    op = HemophiliaOperator()
    raw = spectral.find_fixed_points(op, Mode.RAW, rng_seed=cfg.rng_seed, verbose=cfg.verbose)
    expected = {ORIGIN: ([0.0] * 4, Classification.ATTRACTING), S2: ([-0.5, 0.0, 1.0, 2.0], Classification.NON_HYPERBOLIC)}
    problems = []
    if len(raw) != len(expected):
        problems.append(f"{len(raw)} raw fixed points")
    for report in raw:
        point = report.point.as_array()
        target = min(expected, key=lambda t: sup_norm(point - np.array(t)))
        eigs, cls = expected[target]
        if sup_norm(point - np.array(target)) > ROOT_TOL:
            problems.append(f"unexpected root {point.tolist()}")
        elif _eigen_mismatch(report.eigenvalues, eigs) > EIGEN_TOL or report.classification != cls:
            problems.append(f"spectrum at {target}")

    reports = [
        PropertyReport(
            property_id="fixed_points.raw",
            samples=len(raw),
            failures=len(problems),
            detail="; ".join(problems) or None,
        )
    ]

    problems = []
    norm = spectral.find_fixed_points(op, Mode.NORMALIZED, rng_seed=cfg.rng_seed, verbose=cfg.verbose)
    if len(norm) != 1 or sup_norm(norm[0].point.as_array() - np.array(P_STAR)) > ROOT_TOL:
        problems.append(f"{len(norm)} normalized fixed points")
    p = PopulationState.from_array(np.array(P_STAR), 2)
    for eliminate in ("u", "v"):
        if _eigen_mismatch(np.linalg.eigvals(normalized.reduced_jacobian_at(p, eliminate)), [-0.5, 0.0, 1.0]) > EIGEN_TOL:
            problems.append(f"reduced spectrum at p with {eliminate} eliminated")
    reports.append(
        PropertyReport(
            property_id="fixed_points.normalized",
            samples=len(norm),
            failures=len(problems),
            detail="; ".join(problems) or None,
        )
    )
    reports.append(normalized.verify_correspondence(op, [r.point for r in raw]))
    reports.append(spectral.resultant_root_check())
    return reports


def core_suite(cfg: RunConfig) -> List[PropertyReport]:
    return [verify_sum_product_identity(cfg.samples, cfg.rng_seed)] + verify_jacobian_oracle(
        min(cfg.samples, ORACLE_SAMPLES), cfg.rng_seed
    )


def invariant_set_suite(cfg: RunConfig) -> List[PropertyReport]:
    return invariant_sets.verify_lemma1(samples=cfg.samples, rng_seed=cfg.rng_seed) + [
        invariant_sets.verify_lemma2(cfg.samples, cfg.rng_seed),
        invariant_sets.verify_lemma3_identity(cfg.samples, cfg.rng_seed),
        invariant_sets.verify_lemma4(cfg.samples, cfg.rng_seed),
        invariant_sets.verify_lemma5_bound(cfg.samples, cfg.rng_seed),
        invariant_sets.verify_closed_form_J(min(cfg.samples, 1_000), cfg.rng_seed),
        invariant_sets.verify_i_trichotomy(),
        invariant_sets.verify_classifier_soundness(cfg.samples, cfg.rng_seed),
    ]


def normalized_suite(cfg: RunConfig) -> List[PropertyReport]:
    return (
        [normalized.verify_simplex_preservation(HemophiliaOperator().tensor, cfg.samples, cfg.rng_seed)]
        + normalized.verify_estimates(cfg.samples, cfg.rng_seed)
        + [
            normalized.verify_healthy_face(cfg.samples, cfg.rng_seed),
            normalized.verify_local_stability(min(cfg.samples, 1_000), cfg.rng_seed),
            normalized.verify_load_decay(),
        ]
    )


SUITES: List[Suite] = [core_suite, fixed_point_suite, invariant_set_suite, normalized_suite]


def tensor_suite(path: Path, cfg: RunConfig) -> List[PropertyReport]:
    """Validation of a user tensor; an invalid file is a failed property, not an error."""
    try:
        tensor = read_tensor_file(path)
    except GonoDynException as e:
        return [PropertyReport(property_id="tensor.validation", samples=1, failures=1, detail=str(e))]
    reports = [PropertyReport(property_id="tensor.validation", samples=1, detail=f"n={tensor.n} nu={tensor.nu}")]
    if not tensor.non_negative:
        return reports
    if normalized.ec_condition(tensor):
        reports.append(normalized.verify_simplex_preservation(tensor, cfg.samples, cfg.rng_seed))
    else:
        reports.append(normalized.verify_ec_converse(tensor))
    return reports


def run_property_suites(cfg: RunConfig, tensor_path: Path | None = None) -> List[PropertyReport]:
    reports: List[PropertyReport] = []
    if tensor_path is not None:
        reports += tensor_suite(tensor_path, cfg)
    for suite in tqdm(SUITES, desc="Property suites", disable=not cfg.verbose):
        reports += suite(cfg)
    if cfg.verbose:
        failed = [r.property_id for r in reports if not r.passed]
        print_dt(f"{len(reports)} properties checked, {len(failed)} failed {failed if failed else ''}")
    return reports
