import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from app.core.config import (
    ARMIJO_BACKTRACK,
    ARMIJO_C,
    ARMIJO_INITIAL_STEP,
    ARMIJO_SLACK,
    GEOMETRY_BUMP_WIDTHS,
    MAX_ITER,
    RESIDUAL_RTOL,
    SOLVER_PHI_METHOD,
    SPHERE_DIRECTIONS,
    STOP_TOL,
    THREADS,
)
from app.functional.domain import FieldLike, make_field, norm_E_sq, values_of
from app.functional.energy import EnergyState, energy_level, evaluate_state, level_bound_check
from app.functional.nonlinearity import Nonlinearity
from app.models.errors import (
    AllSeedsFailedError,
    GeometryError,
    InvalidFieldError,
    NehariProjectionError,
)
from app.models.main_models import (
    Certificates,
    DomainGrid,
    Field,
    GeometryReport,
    GridKind,
    SolveMethod,
    SolveOutcome,
    TraceEntry,
)
from app.other.seeds import centered_bumps, random_directions

logger = logging.getLogger(__name__)

FIBER_SCAN_POINTS = 16
FIBER_LOWER = 1e-3
FIBER_UPPER_CAP = 1e8
LOCAL_BRACKET = (0.5, 2.0)
MIN_STEP = 1e-10
GEOMETRY_SCAN = 64
MAX_RADIUS_HALVINGS = 20


def _nonnegative(grid: DomainGrid, u: FieldLike) -> np.ndarray:
    values = np.array(values_of(grid, u), dtype=float)
    if not np.any(values):
        raise InvalidFieldError("Seed must be nonzero")
    if values.min() < 0:
        raise InvalidFieldError(f"Seed must be nonnegative, min = {values.min():.3e}")
    return values


def find_e(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        seed_v: FieldLike,
        t_max: float = 1e6,
        *,
        rng: Optional[np.random.Generator] = None,
        directions: int = SPHERE_DIRECTIONS,
        method: Optional[str] = None,
) -> GeometryReport:
    """Mountain-pass geometry: e = t·v with I(e) < 0 and a sphere of radius r where I ≥ b > 0.

    r is half the norm of the lowest Nehari point among the seed and a family of centered
    bumps; those rays are sampled on the sphere along with the random directions.
    """
    method = method or SOLVER_PHI_METHOD
    v = _nonnegative(grid, seed_v)

    def level(x):
        return energy_level(grid, V, omega, nl, x, method=method)

    t = 1.0
    level_e = level(t * v)
    while level_e >= 0:
        t *= 2.0
        if t > t_max:
            raise GeometryError(f"I(t v) stayed nonnegative up to t = {t_max:.6g} (last value {level_e:.6g})")
        level_e = level(t * v)

    scan = np.linspace(0.0, t, GEOMETRY_SCAN + 1)[1:]
    t_peak = float(scan[int(np.argmax([level(s * v) for s in scan]))])

    candidates = [v] + centered_bumps(grid, GEOMETRY_BUMP_WIDTHS)
    peaks = _fiber_peaks(grid, V, omega, nl, candidates, method)
    nehari_bound = None
    if peaks:
        nehari_bound, peak_norm = min(peaks)
        radius = 0.5 * peak_norm
    else:
        radius = 0.5 * t_peak * np.sqrt(norm_E_sq(grid, V, v))
    radius = min(radius, 0.5 * t * np.sqrt(norm_E_sq(grid, V, v)))

    rng = rng or np.random.default_rng(0)
    sphere = random_directions(grid, directions, rng) + candidates
    for _ in range(MAX_RADIUS_HALVINGS):
        samples = [level(radius * d / np.sqrt(norm_E_sq(grid, V, d))) for d in sphere]
        floor = float(min(samples))
        if floor > 0:
            break
        logger.warning(f"Sphere of radius {radius:.3e} touches I <= 0 (min {floor:.3e}), halving")
        radius *= 0.5
    else:
        raise GeometryError(f"No sphere with positive energy found below radius {radius:.3e}")

    logger.info(f"Geometry: r={radius:.4g}, b={floor:.4g}, I(e)={level_e:.4g} at t={t:g}")
    return GeometryReport(r=radius, b=floor, e=make_field(grid, t * v), I_e=level_e, t_e=t, t_peak=t_peak,
                          nehari_bound=nehari_bound)


def _fiber_peaks(grid, V, omega, nl, directions, method) -> list[tuple[float, float]]:
    """(level, E-norm) of the Nehari point on each ray that has one."""
    peaks = []
    for direction in directions:
        try:
            _, projected = nehari_project(grid, V, omega, nl, direction, method=method)
        except NehariProjectionError:
            continue
        peaks.append((energy_level(grid, V, omega, nl, projected, method=method),
                      float(np.sqrt(norm_E_sq(grid, V, projected)))))
    return peaks


def _fiber(grid, V, omega, nl, u, method):
    cache = {}

    def nehari_at(t: float) -> float:
        if t not in cache:
            cache[t] = evaluate_state(grid, V, omega, nl, t * u, with_gradient=False, method=method).report.nehari
        return cache[t]

    return nehari_at


def fiber_roots(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        u: FieldLike,
        bracket: tuple[float, float],
        scan_points: int = FIBER_SCAN_POINTS,
        *,
        method: Optional[str] = None,
) -> list[tuple[float, float]]:
    """Sub-intervals of the log-spaced scan where t ↦ I'(tu)(tu) changes sign."""
    nehari_at = _fiber(grid, V, omega, nl, values_of(grid, u), method or SOLVER_PHI_METHOD)
    return _sign_changes(nehari_at, bracket[0], bracket[1], scan_points)


def _sign_changes(nehari_at, lo: float, hi: float, scan_points: int) -> list[tuple[float, float]]:
    ts = np.geomspace(lo, hi, scan_points)
    levels = [nehari_at(float(t)) for t in ts]
    return [
        (float(a), float(b))
        for a, b, na, nb in zip(ts[:-1], ts[1:], levels[:-1], levels[1:])
        if na > 0 >= nb or na <= 0 < nb
    ]


def nehari_project(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        u: FieldLike,
        bracket: tuple[float, Optional[float]] = (FIBER_LOWER, None),
        *,
        scan_points: int = FIBER_SCAN_POINTS,
        method: Optional[str] = None,
) -> tuple[float, Field]:
    method = method or SOLVER_PHI_METHOD
    values = _nonnegative(grid, u)
    nehari_at = _fiber(grid, V, omega, nl, values, method)

    lo, hi = bracket
    if hi is None:
        hi = 1.0
        while nehari_at(hi) > 0:
            hi *= 2.0
            if hi > FIBER_UPPER_CAP:
                raise NehariProjectionError(lo, hi)

    crossings = _sign_changes(nehari_at, lo, hi, scan_points)
    if not crossings:
        raise NehariProjectionError(lo, hi)
    if len(crossings) > 1:
        logger.warning(f"Fiber map has {len(crossings)} sign changes on [{lo:g}, {hi:g}], taking the smallest root")

    a, b = crossings[0]
    if nehari_at(b) == 0:
        t_star = b
    else:
        t_star = float(brentq(nehari_at, a, b, xtol=1e-14, rtol=1e-14, maxiter=200))
    return t_star, make_field(grid, t_star * values)


def _project(grid, V, omega, nl, values, method) -> Optional[np.ndarray]:
    try:
        _, projected = nehari_project(grid, V, omega, nl, values, LOCAL_BRACKET, scan_points=3, method=method)
    except NehariProjectionError:
        try:
            _, projected = nehari_project(grid, V, omega, nl, values, method=method)
        except NehariProjectionError:
            return None
    return np.array(projected.values)


def _converged(state: EnergyState, stop_tol: float) -> bool:
    report = state.report
    return bool(np.any(state.u)) and report.cerami <= stop_tol * (1.0 + abs(report.I))


def _trace_entry(iteration: int, state: EnergyState) -> TraceEntry:
    report = state.report
    return TraceEntry(iteration=iteration, I=report.I, cerami=report.cerami, norm_E=float(np.sqrt(report.norm_E_sq)))


def _armijo_step(grid, V, omega, nl, state: EnergyState, project: bool, method: str) -> Optional[EnergyState]:
    current = state.report.I
    slope = state.report.gradient_norm_E ** 2
    slack = ARMIJO_SLACK * (1.0 + abs(current))
    sigma = ARMIJO_INITIAL_STEP
    while sigma >= MIN_STEP:
        candidate = np.maximum(state.u - sigma * state.gradient, 0.0)
        if np.any(candidate) and project:
            candidate = _project(grid, V, omega, nl, candidate, method)
        if candidate is not None and np.any(candidate):
            trial = energy_level(grid, V, omega, nl, candidate, method=method)
            if trial <= current - ARMIJO_C * sigma * slope + slack:
                return evaluate_state(grid, V, omega, nl, candidate, method=method)
        sigma *= ARMIJO_BACKTRACK
    return None


def certify(grid: DomainGrid, state: EnergyState, level: float) -> Certificates:
    report = state.report
    min_u = float(state.u.min())
    max_u = float(state.u.max())
    return Certificates(
        level_bound=level_bound_check(report, level),
        min_u=min_u,
        max_u=max_u,
        positivity_ok=min_u >= -1e-8 * max(max_u, 0.0),
        residual_dual_norm=report.gradient_norm_E,
        residual_ok=report.gradient_norm_E <= RESIDUAL_RTOL * (1.0 + np.sqrt(report.norm_E_sq)),
    )


def build_outcome(grid, state: EnergyState, method: SolveMethod, trace, converged: bool, iterations: int,
                  **extra) -> SolveOutcome:
    return SolveOutcome(
        u=make_field(grid, state.u),
        phi=make_field(grid, state.phi),
        level=state.report.I,
        method=method,
        trace=trace,
        certificates=certify(grid, state, state.report.I),
        converged=converged,
        iterations=iterations,
        report=state.report,
        **extra,
    )


def descend(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        u0: FieldLike,
        stop_tol: float = STOP_TOL,
        max_iter: int = MAX_ITER,
        *,
        project: bool = True,
        solve_method: SolveMethod = SolveMethod.DESCENT,
        method: Optional[str] = None,
) -> SolveOutcome:
    """Sobolev-gradient descent, clipped to u ≥ 0 and projected onto the Nehari manifold."""
    method = method or SOLVER_PHI_METHOD
    values = _nonnegative(grid, u0)
    state = evaluate_state(grid, V, omega, nl, values, method=method)
    t_star = None

    if not _converged(state, stop_tol) and project:
        t_star, projected = nehari_project(grid, V, omega, nl, values, method=method)
        state = evaluate_state(grid, V, omega, nl, projected.values, method=method)

    trace = [_trace_entry(0, state)]
    iterations = 0
    converged = _converged(state, stop_tol)
    while not converged and iterations < max_iter:
        step = _armijo_step(grid, V, omega, nl, state, project, method)
        if step is None:
            logger.warning(f"Line search stalled at iteration {iterations}, cerami={state.report.cerami:.3e}")
            break
        state = step
        iterations += 1
        trace.append(_trace_entry(iterations, state))
        converged = _converged(state, stop_tol)

    if converged:
        logger.info(f"Descent converged in {iterations} iterations, I={state.report.I:.10g}")
    else:
        logger.warning(f"Descent stopped after {iterations} iterations, cerami={state.report.cerami:.3e}")
    return build_outcome(grid, state, solve_method, trace, converged, iterations, t_star=t_star)


def recenter(grid: DomainGrid, u: FieldLike, lattice_step: Optional[int] = None) -> tuple[Field, tuple[int, ...]]:
    """Shift by lattice multiples to maximize ∫u² over a central window; ties go to the smallest shift."""
    values = values_of(grid, u)
    if grid.kind is not GridKind.PERIODIC_CUBE:
        return make_field(grid, values), (0,)

    n = grid.n_points
    step = lattice_step or 1
    cube = values.reshape(grid.shape)
    quarter = n // 4
    window = slice(n // 2 - quarter, n // 2 + quarter + 1)

    best_shift, best_mass, best = (0, 0, 0), -np.inf, cube
    for shift in product(range(0, n, step), repeat=3):
        rolled = np.roll(cube, tuple(-s for s in shift), axis=(0, 1, 2))
        mass = float(np.sum(rolled[window, window, window] ** 2))
        if mass > best_mass:
            best_shift, best_mass, best = shift, mass, rolled
    return make_field(grid, best.ravel()), best_shift


def nehari_minimize(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        seeds: Sequence[FieldLike],
        stop_tol: float = STOP_TOL,
        max_iter: int = MAX_ITER,
        *,
        lattice_step: Optional[int] = None,
        method: Optional[str] = None,
) -> SolveOutcome:
    if not seeds:
        raise InvalidFieldError("nehari_minimize needs at least one seed")
    prepared = [recenter(grid, seed, lattice_step)[0] for seed in seeds]

    def run(index: int, seed: Field) -> Optional[SolveOutcome]:
        try:
            outcome = descend(grid, V, omega, nl, seed, stop_tol, max_iter,
                              solve_method=SolveMethod.NEHARI, method=method)
        except NehariProjectionError as exc:
            logger.warning(f"Seed {index} skipped: {exc.message}")
            return None
        return outcome.model_copy(update={"seed_index": index})

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        results = list(pool.map(run, range(len(prepared)), prepared))

    finished = [outcome for outcome in results if outcome is not None]
    if not finished:
        raise AllSeedsFailedError(len(seeds))

    candidates = [outcome for outcome in finished if outcome.converged] or finished
    best = min(candidates, key=lambda outcome: (outcome.level, outcome.seed_index))
    levels = [None if outcome is None else outcome.level for outcome in results]
    logger.info(f"Nehari minimum {best.level:.10g} from seed {best.seed_index} of {len(seeds)}")
    return best.model_copy(update={"seed_levels": levels})
