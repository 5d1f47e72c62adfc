from typing import List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from GonoDyn.models.operator import Mode
from GonoDyn.models.reports import Classification, FixedPointReport, FixedPointSearch, PropertyReport
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.reduced import ReducedSystem
from GonoDyn.utils.constants import (
    DEDUP_RADIUS,
    HYPERBOLICITY_TOL,
    MAX_EIGEN_SIZE,
    NEWTON_JITTER,
    NEWTON_MAX_HALVINGS,
    NEWTON_MAX_STEPS,
    NEWTON_SEEDS,
    NEWTON_SINGULAR_RATIO,
    NEWTON_TOL,
    RNG_SEED,
    SEED_BOX,
)
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException
from GonoDyn.utils.funcs import print_dt, sup_norm, sup_norm_rows, uniform_simplex

SINGULAR_REFINE_RATIO = 1e-6
SECANT_START = 1e-9
NON_HYPERBOLIC_NOTE = "eigenvalue on the unit circle, linearization does not decide stability"


def sort_eigenvalues(eigs: Sequence[complex]) -> np.ndarray:
    return np.array(sorted((complex(e) for e in eigs), key=lambda z: (z.real, z.imag)), dtype=complex)


def eigenvalues(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise GonoDynException(f"expected a square matrix, got shape {m.shape}", ExceptionType.INVALID_ARGUMENT)
    if m.shape[0] > MAX_EIGEN_SIZE:
        raise GonoDynException(
            f"matrix of size {m.shape[0]} exceeds {MAX_EIGEN_SIZE}", ExceptionType.INVALID_ARGUMENT
        )
    if not np.all(np.isfinite(m)):
        raise GonoDynException("matrix has non-finite entries", ExceptionType.INVALID_ARGUMENT)
    return sort_eigenvalues(np.linalg.eigvals(m))


def classify(eigs: Sequence[complex], tol: float = HYPERBOLICITY_TOL) -> Classification:
    moduli = np.abs(np.asarray(eigs, dtype=complex))
    if moduli.size == 0:
        raise GonoDynException("no eigenvalues to classify", ExceptionType.INVALID_ARGUMENT)
    if np.any(np.abs(moduli - 1.0) <= tol):
        return Classification.NON_HYPERBOLIC
    if np.all(moduli < 1.0):
        return Classification.ATTRACTING
    if np.all(moduli > 1.0):
        return Classification.REPELLING
    return Classification.SADDLE


class NewtonSystem:
    """F(z) = T(z) - z for the raw operator, or for the reduced normalized one.

    `residual` and `jacobian` take one point or a batch of points. Points where the
    normalized operator is undefined get an infinite residual and a NaN Jacobian.
    """

    def __init__(self, op: GonosomalOperator, mode: Mode) -> None:
        self.op = op
        self.mode = mode
        self.reduced = ReducedSystem(op) if mode == Mode.NORMALIZED else None

    @property
    def size(self) -> int:
        return self.op.dim if self.reduced is None else self.reduced.size

    def residual(self, z: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.reduced is None:
                return self.op.raw_image(z) - z
            s = self.reduced.embed(z)
            ok = self.op.has_mass(s)
            female, male = self.op.block_sums(s)
            image = self.op.raw_image(s) / np.where(ok, female * male, 1.0)[..., None]
            return np.where(ok[..., None], self.reduced.restrict(image) - z, np.inf)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            if self.reduced is None:
                return self.op.raw_jacobian(z) - np.eye(self.size)
            batch = np.atleast_2d(z)
            out = np.full(batch.shape + (self.size,), np.nan)
            ok = self.op.has_mass(self.reduced.embed(batch))
            if np.any(ok):
                out[ok] = self.reduced.jacobian(batch[ok]) - np.eye(self.size)
        return out if z.ndim > 1 else out[0]

    def to_full(self, z: np.ndarray) -> np.ndarray:
        return z if self.reduced is None else self.reduced.embed(z)

    def from_full(self, s: np.ndarray) -> np.ndarray:
        return s if self.reduced is None else self.reduced.restrict(s)

    def seeds(self, rng: np.random.Generator, n_seeds: int, seed_box: Tuple[float, float]) -> np.ndarray:
        if self.reduced is None:
            return rng.uniform(seed_box[0], seed_box[1], size=(n_seeds, self.size))
        return self.reduced.restrict(uniform_simplex(rng, self.op.dim, n_seeds))


def damped_newton(
    system: NewtonSystem,
    seeds: np.ndarray,
    rng: np.random.Generator,
    tol: float = NEWTON_TOL,
    max_steps: int = NEWTON_MAX_STEPS,
    max_halvings: int = NEWTON_MAX_HALVINGS,
    verbose: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Newton with step halving, run on every row of `seeds` at once.

    A row keeps stepping past `tol` until its residual stops decreasing. A row whose
    DF is singular is jittered once and dropped the second time. Returns the final
    iterates and the mask of rows whose residual is within `tol`.
    """
    z = np.array(seeds, dtype=float).reshape(-1, system.size)
    f = system.residual(z)
    r = sup_norm_rows(f)
    active = np.isfinite(r) & (r > 0)
    jittered = np.zeros(len(z), dtype=bool)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in tqdm(range(max_steps), desc="Newton steps", disable=not verbose):
            rows = np.flatnonzero(active)
            if rows.size == 0:
                break
            dfm = system.jacobian(z[rows])
            finite = np.all(np.isfinite(dfm), axis=(-2, -1))
            dfm = np.where(finite[:, None, None], dfm, 0.0)
            scale = np.maximum(np.abs(dfm).sum(axis=-1).max(axis=-1), np.finfo(float).tiny)
            singular = finite & (np.abs(np.linalg.det(dfm)) <= NEWTON_SINGULAR_RATIO * scale**system.size)

            active[rows[~finite]] = False
            active[rows[singular & jittered[rows]]] = False
            jitter = rows[singular & ~jittered[rows]]
            if jitter.size:
                jittered[jitter] = True
                z[jitter] += rng.uniform(-NEWTON_JITTER, NEWTON_JITTER, size=(jitter.size, system.size))
                f[jitter] = system.residual(z[jitter])
                r[jitter] = sup_norm_rows(f[jitter])
                active[jitter] = np.isfinite(r[jitter]) & (r[jitter] > 0)

            stepping = finite & ~singular
            rows, dfm = rows[stepping], dfm[stepping]
            if rows.size == 0:
                continue
            step = np.linalg.solve(dfm, -f[rows][..., None])[..., 0]
            t = np.ones(rows.size)
            pending = np.ones(rows.size, dtype=bool)
            for _ in range(max_halvings + 1):
                idx = np.flatnonzero(pending)
                candidate = z[rows[idx]] + t[idx, None] * step[idx]
                f_candidate = system.residual(candidate)
                r_candidate = sup_norm_rows(f_candidate)
                better = np.isfinite(r_candidate) & (r_candidate < r[rows[idx]])
                took = rows[idx[better]]
                z[took], f[took], r[took] = candidate[better], f_candidate[better], r_candidate[better]
                pending[idx[better]] = False
                t[idx[~better]] /= 2
                if not pending.any():
                    break
            # no halving lowered the residual: the row has stalled
            active[rows[pending]] = False
            active[rows] &= r[rows] > 0

    return z, np.isfinite(r) & (r <= tol)


def refine_singular_root(system: NewtonSystem, z: np.ndarray, tol: float = NEWTON_TOL, max_iter: int = 30) -> np.ndarray:
    """Moves a root with singular DF along the null direction onto the surface det DF = 0.

    Residuals near a double root only pin it to about sqrt(machine eps); the
    determinant changes sign linearly there, so its zero locates the root much
    more sharply.
    """
    dfm = system.jacobian(z)
    if not np.all(np.isfinite(dfm)):
        return z
    _, sv, vt = np.linalg.svd(dfm)
    if sv[-1] > SINGULAR_REFINE_RATIO * max(sv[0], np.finfo(float).tiny):
        return z
    w = vt[-1]

    def det_along(t: float) -> float:
        return float(np.linalg.det(system.jacobian(z + t * w)))

    t0, t1 = 0.0, SECANT_START
    g0, g1 = det_along(t0), det_along(t1)
    for _ in range(max_iter):
        if g1 == g0:
            break
        t2 = t1 - g1 * (t1 - t0) / (g1 - g0)
        t0, g0 = t1, g1
        t1, g1 = t2, det_along(t2)
        if abs(t1 - t0) <= np.finfo(float).eps * (1.0 + sup_norm(z)):
            break
    if not np.isfinite(t1) or abs(t1) > DEDUP_RADIUS:
        return z
    refined = z + t1 * w
    return refined if sup_norm(system.residual(refined)) <= tol else z


def full_residuals(op: GonosomalOperator, points: np.ndarray, mode: Mode) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        image = op.raw_image(points) if mode == Mode.RAW else op.normalized_image(points)
    return sup_norm_rows(image - points)


def full_residual(op: GonosomalOperator, point: np.ndarray, mode: Mode) -> float:
    return float(full_residuals(op, np.asarray(point, dtype=float)[None, :], mode)[0])


def dedupe_roots(roots: List[np.ndarray], residuals: List[float], radius: float = DEDUP_RADIUS) -> List[np.ndarray]:
    order = sorted(range(len(roots)), key=lambda i: (residuals[i], tuple(roots[i])))
    kept: List[np.ndarray] = []
    for i in order:
        if all(sup_norm(roots[i] - k) > radius for k in kept):
            kept.append(roots[i])
    return sorted(kept, key=lambda r: tuple(float(v) for v in r))


def fixed_point_report(op: GonosomalOperator, point: np.ndarray, mode: Mode = Mode.RAW) -> FixedPointReport:
    point = op.check_array(point)
    if mode == Mode.RAW:
        jacobian = op.raw_jacobian(point)
    else:
        reduced = ReducedSystem(op)
        jacobian = reduced.jacobian(reduced.restrict(point))
    eigs = eigenvalues(jacobian)
    classification = classify(eigs)
    return FixedPointReport(
        mode=mode,
        point=op.to_state(point),
        residual=full_residual(op, point, mode),
        jacobian=jacobian,
        eigenvalues=eigs,
        classification=classification,
        note=NON_HYPERBOLIC_NOTE if classification == Classification.NON_HYPERBOLIC else None,
    )


def multistart_newton(
    op: GonosomalOperator,
    mode: Mode = Mode.RAW,
    n_seeds: int = NEWTON_SEEDS,
    seed_box: Tuple[float, float] = SEED_BOX,
    rng_seed: int = RNG_SEED,
    tol: float = NEWTON_TOL,
    extra_seeds: Sequence[Sequence[float]] | None = None,
    verbose: bool = False,
) -> FixedPointSearch:
    if n_seeds < 1:
        raise GonoDynException(f"n_seeds must be at least 1, got {n_seeds}", ExceptionType.INVALID_ARGUMENT)
    if not tol > 0:
        raise GonoDynException(f"tol must be positive, got {tol}", ExceptionType.INVALID_ARGUMENT)
    if mode == Mode.NORMALIZED and not op.tensor.non_negative:
        raise GonoDynException("normalized mode needs non-negative coefficients", ExceptionType.INVALID_TENSOR)

    system = NewtonSystem(op, mode)
    rng = np.random.default_rng(rng_seed)
    seeds = system.seeds(rng, n_seeds, seed_box)
    if extra_seeds is not None:
        extra = system.from_full(np.asarray(extra_seeds, dtype=float).reshape(-1, op.dim))
        seeds = np.vstack([extra, seeds])

    z, converged = damped_newton(system, seeds, rng, tol, verbose=verbose)
    points = system.to_full(z[converged])
    # re-check independently of the Newton iterate's own residual
    residuals = full_residuals(op, points, mode)
    accepted = residuals <= tol
    if verbose:
        print_dt(f"{int(accepted.sum())} seeds converged, {len(seeds) - int(accepted.sum())} dropped")

    roots: List[np.ndarray] = []
    root_residuals: List[float] = []
    for point in dedupe_roots(list(points[accepted]), list(residuals[accepted])):
        refined = system.to_full(refine_singular_root(system, system.from_full(point), tol))
        refined_residual = full_residual(op, refined, mode)
        if refined_residual > tol:
            refined, refined_residual = point, full_residual(op, point, mode)
        roots.append(refined)
        root_residuals.append(refined_residual)

    reports = [fixed_point_report(op, root, mode) for root in dedupe_roots(roots, root_residuals)]
    return FixedPointSearch(reports=reports, seeds_tried=len(seeds), seeds_dropped=len(seeds) - int(accepted.sum()))


def find_fixed_points(
    op: GonosomalOperator,
    mode: Mode = Mode.RAW,
    n_seeds: int = NEWTON_SEEDS,
    seed_box: Tuple[float, float] = SEED_BOX,
    rng_seed: int = RNG_SEED,
    tol: float = NEWTON_TOL,
    extra_seeds: Sequence[Sequence[float]] | None = None,
    verbose: bool = False,
) -> List[FixedPointReport]:
    return multistart_newton(op, mode, n_seeds, seed_box, rng_seed, tol, extra_seeds, verbose).reports


# Elimination of x, y, v from the hemophilia fixed-point system leaves a quintic in u.
def resultant_polynomial() -> np.ndarray:
    return np.polymul(np.polymul(np.polymul([1, -2], [1, -2]), [1, -8]), [3, -14, 24])


def eliminated_y(u: float) -> float:
    return 12 * (u**2 - 6 * u + 8) / (3 * u**2 - 16 * u + 32)


def eliminated_system_residual(u: float) -> float:
    """Second fixed-point relation after substituting y(u), cleared of denominators."""
    d = 3 * u**2 - 16 * u + 32
    n = 12 * (u**2 - 6 * u + 8)
    return 16 * (3 * d - n) * (2 - u) * d - n * (24 * d - n * u)


def resultant_root_check(probe_points: Sequence[float] = (-3.0, -1.0, 0.0, 0.5, 1.0, 3.0, 5.0, 10.0)) -> PropertyReport:
    failures = 0
    details = []
    poly = resultant_polynomial()

    roots = np.roots(poly)
    real_roots = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-6)
    if len(real_roots) != 3 or not np.allclose(real_roots, [2.0, 2.0, 8.0], atol=1e-6):
        failures += 1
        details.append(f"real roots {real_roots}")

    discriminant = 14**2 - 4 * 3 * 24
    if discriminant >= 0:
        failures += 1
        details.append(f"quadratic factor discriminant {discriminant}")

    if abs(eliminated_y(8.0) - 3.0) > 1e-12:
        failures += 1
        details.append(f"y(8) = {eliminated_y(8.0)}")

    for u in probe_points:
        expected = 96 * np.polyval(poly, u)
        got = eliminated_system_residual(u)
        if abs(got - expected) > 1e-9 * max(1.0, abs(expected)):
            failures += 1
            details.append(f"elimination mismatch at u={u}")

    return PropertyReport(
        property_id="fixed_points.resultant",
        samples=3 + len(probe_points),
        failures=failures,
        detail="; ".join(details) if details else "real roots 2, 2, 8; quadratic factor discriminant -92; y(8) = 3",
    )
