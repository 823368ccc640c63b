import logging
from typing import Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from app.core.config import ARMIJO_BACKTRACK, ARMIJO_C, ARMIJO_SLACK, MAX_ITER, N_PATH, SOLVER_PHI_METHOD, STOP_TOL
from app.functional.domain import FieldLike, energy_matrix, make_field
from app.functional.energy import energy_level, evaluate_state
from app.functional.nonlinearity import Nonlinearity
from app.models.errors import PathCollapseError
from app.models.main_models import DomainGrid, GeometryReport, SolveMethod, SolveOutcome
from app.services.solver import descend

logger = logging.getLogger(__name__)

MAX_SWEEPS = 200
PATH_TOL = 1e-2
MAX_HALVINGS = 20


def _levels(grid, V, omega, nl, path: np.ndarray, method: str) -> np.ndarray:
    return np.array([energy_level(grid, V, omega, nl, node, method=method) for node in path])


def _deform(grid, V, omega, nl, node: np.ndarray, weight: float, method: str) -> np.ndarray:
    state = evaluate_state(grid, V, omega, nl, node, method=method)
    slope = state.report.gradient_norm_E ** 2
    slack = ARMIJO_SLACK * (1.0 + abs(state.report.I))
    sigma = weight
    for _ in range(MAX_HALVINGS):
        candidate = np.maximum(node - sigma * state.gradient, 0.0)
        if energy_level(grid, V, omega, nl, candidate, method=method) <= state.report.I - ARMIJO_C * sigma * slope + slack:
            return candidate
        sigma *= ARMIJO_BACKTRACK
    return node


def reparameterize(grid: DomainGrid, V: FieldLike, path: np.ndarray) -> np.ndarray:
    """Redistribute nodes uniformly in E-arc length, endpoints fixed."""
    gram = energy_matrix(grid, V)
    steps = np.diff(path, axis=0)
    lengths = np.sqrt(np.maximum(np.einsum("ij,ij->i", steps, (gram @ steps.T).T), 0.0))
    arc = np.concatenate(([0.0], np.cumsum(lengths)))
    if arc[-1] == 0:
        return path

    keep = np.concatenate(([True], lengths > 0))
    spline = make_interp_spline(arc[keep], path[keep], k=1, axis=0)
    resampled = spline(np.linspace(0.0, arc[-1], path.shape[0]))
    resampled[0] = path[0]
    resampled[-1] = path[-1]
    return np.maximum(resampled, 0.0)


def mountain_pass(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        geometry: GeometryReport,
        n_path: int = N_PATH,
        stop_tol: float = STOP_TOL,
        *,
        max_sweeps: int = MAX_SWEEPS,
        path_tol: float = PATH_TOL,
        max_iter: int = MAX_ITER,
        method: Optional[str] = None,
) -> SolveOutcome:
    """Deform the straight path 0 → e downhill at its peak, then polish the peak by descent."""
    method = method or SOLVER_PHI_METHOD
    e = np.array(geometry.e.values)
    path = np.outer(np.linspace(0.0, 1.0, n_path), e)
    levels = _levels(grid, V, omega, nl, path, method)

    for sweep in range(max_sweeps):
        peak = int(np.argmax(levels))
        if peak in (0, n_path - 1):
            raise PathCollapseError(peak)
        state = evaluate_state(grid, V, omega, nl, path[peak], method=method)
        if state.report.cerami <= path_tol * (1.0 + abs(state.report.I)):
            logger.info(f"Path converged after {sweep} sweeps at level {levels[peak]:.8g}")
            break
        for index in (peak - 1, peak, peak + 1):
            if 0 < index < n_path - 1:
                weight = 1.0 if index == peak else 0.5
                path[index] = _deform(grid, V, omega, nl, path[index], weight, method)
        path = reparameterize(grid, V, path)
        levels = _levels(grid, V, omega, nl, path, method)
    else:
        logger.warning(f"Path deformation stopped at max_sweeps={max_sweeps}")

    peak = int(np.argmax(levels))
    if peak in (0, n_path - 1):
        raise PathCollapseError(peak)
    path_level = float(levels[peak])

    outcome = descend(grid, V, omega, nl, make_field(grid, path[peak]), stop_tol, max_iter,
                      solve_method=SolveMethod.MOUNTAIN_PASS, method=method)
    return outcome.model_copy(update={"path_level": path_level})
