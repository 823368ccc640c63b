import logging
from typing import NamedTuple, Optional

import numpy as np

from app.core.config import H_FLOOR, IDENTITY_RTOL, LEVEL_RTOL, PHI_SOLVER, PHI_TOL
from app.functional.domain import (
    FieldLike,
    energy_matrix,
    make_field,
    potential_digest,
    potential_values,
    values_of,
)
from app.functional.linear_solvers import factorize, jacobi_cg
from app.functional.nonlinearity import Nonlinearity
from app.functional.reduction import solve_phi
from app.models.errors import RieszConvergenceError
from app.models.main_models import DomainGrid, EnergyReport, Field, LevelBoundVerdict

logger = logging.getLogger(__name__)


class EnergyState(NamedTuple):
    u: np.ndarray
    phi: np.ndarray
    residual: np.ndarray
    gradient: Optional[np.ndarray]
    report: EnergyReport


def riesz_map(
        grid: DomainGrid,
        V: FieldLike,
        weak: np.ndarray,
        *,
        method: Optional[str] = None,
        tol: Optional[float] = None,
) -> np.ndarray:
    """Solve (K + W V) x = weak, the E-representative of a weak functional."""
    method = method or PHI_SOLVER
    matrix = energy_matrix(grid, V)
    if not np.any(weak):
        return np.zeros(grid.node_count)

    if method == "direct":
        cache = grid.cache()
        key = ("riesz_factor", potential_digest(potential_values(grid, V)))
        if key not in cache:
            cache[key] = factorize(matrix)
        return cache[key].solve(np.asarray(weak, dtype=float))

    tol = PHI_TOL if tol is None else tol
    solution, iterations, converged = jacobi_cg(matrix, weak, tol, 10 * grid.node_count)
    if not converged:
        residual = float(np.linalg.norm(matrix @ solution - weak) / np.linalg.norm(weak))
        raise RieszConvergenceError(iterations, residual)
    return solution


def evaluate_state(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        nl: Nonlinearity,
        u: FieldLike,
        *,
        with_gradient: bool = True,
        method: Optional[str] = None,
        phi: Optional[np.ndarray] = None,
) -> EnergyState:
    w = grid.quad_weights
    v = potential_values(grid, V)
    values = values_of(grid, u)
    if phi is None:
        phi = solve_phi(grid, values, omega, method=method).phi.values

    stiff_u = grid.stiffness @ values
    norm_sq = float(values @ stiff_u) + float(np.dot(w, v * values ** 2))
    coupling = -0.5 * omega * float(np.dot(w, phi * values ** 2))
    f_values = np.asarray(nl.f(values), dtype=float)
    potential = float(np.dot(w, nl.F(values)))
    level = 0.5 * norm_sq + coupling - potential

    cross = float(np.dot(w, (2.0 * omega + phi) * phi * values ** 2))
    f_times_u = float(np.dot(w, f_values * values))
    quartic = float(np.dot(w, phi ** 2 * values ** 2))

    residual = stiff_u + w * v * values - w * (2.0 * omega + phi) * phi * values - w * f_values

    gradient = None
    gradient_norm = float("nan")
    cerami = float("nan")
    if with_gradient:
        gradient = riesz_map(grid, v, residual, method=method)
        gradient_norm = float(np.sqrt(max(float(gradient @ residual), 0.0)))
        cerami = (1.0 + np.sqrt(norm_sq)) * gradient_norm

    report = EnergyReport(
        I=level,
        norm_E_sq=norm_sq,
        coupling=coupling,
        potential_term=potential,
        nehari=norm_sq - cross - f_times_u,
        cerami=cerami,
        H_integral=f_times_u - 4.0 * potential,
        quartic_coupling=quartic,
        gradient_norm_E=gradient_norm,
    )
    return EnergyState(u=values, phi=phi, residual=residual, gradient=gradient, report=report)


def energy(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
           method: Optional[str] = None) -> EnergyReport:
    return evaluate_state(grid, V, omega, nl, u, method=method).report


def energy_level(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
                 method: Optional[str] = None) -> float:
    return evaluate_state(grid, V, omega, nl, u, with_gradient=False, method=method).report.I


def gradient_strong(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
                    method: Optional[str] = None) -> Field:
    state = evaluate_state(grid, V, omega, nl, u, with_gradient=False, method=method)
    return make_field(grid, state.residual / grid.quad_weights)


def gradient_E(grid: DomainGrid, V: FieldLike, g: FieldLike, *, method: Optional[str] = None) -> Field:
    weak = grid.quad_weights * values_of(grid, g)
    return make_field(grid, riesz_map(grid, V, weak, method=method))


def nehari_value(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
                 method: Optional[str] = None) -> float:
    return evaluate_state(grid, V, omega, nl, u, with_gradient=False, method=method).report.nehari


def cerami_indicator(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
                     method: Optional[str] = None) -> float:
    return evaluate_state(grid, V, omega, nl, u, method=method).report.cerami


def residual_dual_norm(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity, u: FieldLike, *,
                       method: Optional[str] = None) -> float:
    return evaluate_state(grid, V, omega, nl, u, method=method).report.gradient_norm_E


def full_functional(grid: DomainGrid, V: FieldLike, omega: float, nl: Nonlinearity,
                    u: FieldLike, phi: FieldLike) -> float:
    """Two-field action J(u, φ); J(u, φ_u) = I(u) and ∂J/∂φ vanishes at φ_u."""
    w = grid.quad_weights
    v = potential_values(grid, V)
    u_values = values_of(grid, u)
    phi_values = values_of(grid, phi)
    gradient_u = float(u_values @ (grid.stiffness @ u_values))
    gradient_phi = float(phi_values @ (grid.stiffness @ phi_values))
    mass = float(np.dot(w, v * u_values ** 2))
    electric = float(np.dot(w, (2.0 * omega + phi_values) * phi_values * u_values ** 2))
    return 0.5 * (gradient_u + mass) - 0.5 * gradient_phi - 0.5 * electric - float(np.dot(w, nl.F(u_values)))


def level_bound_check(report: EnergyReport, c: float) -> LevelBoundVerdict:
    """Certify 4I - I'(u)u = ‖u‖² + ∫φ²u² + ∫H(u), H ≥ 0 and ‖u‖² ≤ 4c."""
    lhs = 4.0 * report.I - report.nehari
    rhs = report.norm_E_sq + report.quartic_coupling + report.H_integral
    scale = max(abs(4.0 * report.I) + abs(report.nehari),
                report.norm_E_sq + report.quartic_coupling + abs(report.H_integral))
    defect = abs(lhs - rhs)

    failed = []
    if defect > IDENTITY_RTOL * scale:
        failed.append("identity")
    if report.H_integral < H_FLOOR * max(1.0, scale):
        failed.append("h_nonnegative")
    if report.norm_E_sq > 4.0 * c * (1.0 + LEVEL_RTOL):
        failed.append("norm_bound")

    if failed:
        logger.warning(f"Level bound check failed: {failed}")
    return LevelBoundVerdict(
        passed=not failed,
        failed=failed,
        identity_defect=defect,
        H_integral=report.H_integral,
        norm_E_sq=report.norm_E_sq,
        level=c,
    )
