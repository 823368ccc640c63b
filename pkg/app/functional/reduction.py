"""Electrostatic constraint: φ_u solves -Δφ + u²φ = -ω u² with φ = 0 on the ball boundary.

Written for ψ = φ + ω the system is (K + W·u²)ψ = ω·K·1, an M-matrix with a
nonnegative right-hand side, so 0 ≤ ψ ≤ ω is the discrete maximum principle.
"""
import logging
from typing import Optional

import numpy as np
import scipy.sparse as sparse

from app.core.config import CG_ITER_FACTOR, PHI_BOUND_EPS, PHI_REFINE_STEPS, PHI_SOLVER, PHI_TOL
from app.functional.domain import FieldLike, make_field, values_of
from app.functional.linear_solvers import direct_solve, jacobi_cg
from app.models.errors import InvalidFieldError, ReductionConvergenceError
from app.models.main_models import DomainGrid, Field, ReductionSolution

logger = logging.getLogger(__name__)

METHODS = ("cg", "direct")


def phi_operator(grid: DomainGrid, u_squared: np.ndarray) -> sparse.csr_matrix:
    return (grid.stiffness + sparse.diags(grid.quad_weights * u_squared)).tocsr()


def _check_omega(omega: float) -> None:
    if not np.isfinite(omega) or omega <= 0:
        raise InvalidFieldError(f"omega must be positive, got {omega}")


def solve_phi(
        grid: DomainGrid,
        u: FieldLike,
        omega: float,
        tol: Optional[float] = None,
        *,
        method: Optional[str] = None,
        x0: Optional[FieldLike] = None,
        max_iter: Optional[int] = None,
) -> ReductionSolution:
    _check_omega(omega)
    tol = PHI_TOL if tol is None else tol
    method = method or PHI_SOLVER
    if method not in METHODS:
        raise InvalidFieldError(f"Unknown phi solver {method!r}, expected one of {METHODS}")

    values = values_of(grid, u)
    u_squared = values ** 2

    if not np.any(u_squared):
        phi = np.zeros(grid.node_count)
        return _solution(grid, values, phi, omega, iterations=0, residual=0.0, method=method)

    operator = phi_operator(grid, u_squared)
    rhs = omega * grid.boundary_load
    scale = float(np.linalg.norm(rhs) + omega * np.linalg.norm(grid.quad_weights * u_squared))

    if not np.any(rhs):
        # periodic cube: no boundary load, ψ vanishes identically
        psi = np.zeros(grid.node_count)
        iterations = 0
    elif method == "direct":
        psi = direct_solve(operator, rhs)
        iterations = 1
    else:
        guess = None if x0 is None else values_of(grid, x0) + omega
        limit = max_iter if max_iter is not None else CG_ITER_FACTOR * grid.node_count
        psi, iterations, converged = jacobi_cg(operator, rhs, tol, limit, x0=guess, atol=tol * scale)
        if not converged:
            residual = float(np.linalg.norm(operator @ psi - rhs)) / scale
            logger.warning(f"phi-solve did not converge: {iterations} iterations, residual {residual:.3e}")
            raise ReductionConvergenceError(iterations, residual)
        psi, refinements = _refine(operator, rhs, psi, tol, omega, limit)
        iterations += refinements

    residual = float(np.linalg.norm(operator @ psi - rhs)) / scale
    return _solution(grid, values, psi - omega, omega, iterations=iterations, residual=residual, method=method)


def _refine(operator, rhs, psi, tol, omega, limit) -> tuple[np.ndarray, int]:
    """Correct ψ until the max-norm update drops below tol·ω or stops shrinking."""
    iterations = 0
    previous = np.inf
    for _ in range(PHI_REFINE_STEPS):
        defect = rhs - operator @ psi
        size = float(np.linalg.norm(defect))
        if size == 0.0:
            break
        correction, steps, _ = jacobi_cg(operator, defect, tol, limit, atol=tol * size)
        psi = psi + correction
        iterations += steps
        update = float(np.max(np.abs(correction)))
        if update <= tol * omega or update >= previous:
            break
        previous = update
    else:
        logger.warning(f"phi-solve refinement stopped after {PHI_REFINE_STEPS} corrections")
    return psi, iterations


def _solution(grid, u, phi, omega, *, iterations, residual, method) -> ReductionSolution:
    phi_min = float(phi.min())
    phi_max = float(phi.max())
    bounds_ok = phi_min >= -omega - PHI_BOUND_EPS and phi_max <= PHI_BOUND_EPS
    if not bounds_ok:
        logger.warning(f"phi left [-omega, 0]: min={phi_min:.3e}, max={phi_max:.3e}, omega={omega}")
    return ReductionSolution(
        phi=make_field(grid, phi),
        iterations=iterations,
        linear_residual=residual,
        bounds_ok=bounds_ok,
        phi_min=phi_min,
        phi_max=phi_max,
        identity_residual=phi_identity_residual(grid, u, phi, omega),
        method=method,
    )


def phi_identity_residual(grid: DomainGrid, u: FieldLike, phi: FieldLike, omega: float) -> float:
    """|∫|∇φ|² + ω∫φu² + ∫φ²u²|, zero at φ = φ_u."""
    u_values = values_of(grid, u)
    phi_values = values_of(grid, phi)
    w = grid.quad_weights
    gradient = float(phi_values @ (grid.stiffness @ phi_values))
    linear = omega * float(np.dot(w, phi_values * u_values ** 2))
    quadratic = float(np.dot(w, phi_values ** 2 * u_values ** 2))
    return abs(gradient + linear + quadratic)


def phi_equation_residual(grid: DomainGrid, u: FieldLike, phi: FieldLike, omega: float) -> Field:
    """Weighted residual K(φ) + W u²(φ + ω) of the constraint, with the boundary value folded in."""
    u_values = values_of(grid, u)
    phi_values = values_of(grid, phi)
    psi = phi_values + omega
    residual = grid.stiffness @ psi - omega * grid.boundary_load + grid.quad_weights * u_values ** 2 * psi
    return make_field(grid, residual)
