"""Truncation ladder for supercritical perturbations f0 + λg.

g is replaced by its power-law continuation g_n above M_n; a rung is accepted
once the computed solution stays below M_n, where both problems coincide.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from app.core.config import LEVEL_CHAIN_RTOL, LEVEL_RTOL, MAX_ITER, STOP_TOL
from app.functional.domain import FieldLike, values_of
from app.functional.energy import residual_dual_norm
from app.functional.hypotheses import check_hypotheses, default_m_sequence
from app.functional.nonlinearity import (
    ComposedNonlinearity,
    Nonlinearity,
    Q_RANGE,
    compose_f_lambda_n,
    lambda0_for,
)
from app.models.errors import InvalidTruncationError, LambdaUnconstrainedError
from app.models.main_models import DomainGrid, RungResult, TruncationLadder, Verdict
from app.services.solver import nehari_minimize

logger = logging.getLogger(__name__)

REQUIRED_CONDITIONS = ("F1", "F2", "F3", "F4", "F5")


def linf_norm(u: FieldLike) -> float:
    values = np.asarray(u.values if hasattr(u, "values") else u, dtype=float)
    return float(np.max(np.abs(values))) if values.size else 0.0


def build_ladder(q: float, lam: float, m0: float = 4.0, ratio: float = 2.0, rungs: int = 8) -> TruncationLadder:
    if not Q_RANGE[0] < q < Q_RANGE[1]:
        raise InvalidTruncationError(f"q must lie in (4, 6) as required by (F3), got {q}")
    if lam < 0:
        raise InvalidTruncationError(f"lambda must be nonnegative, got {lam}")
    return TruncationLadder(m_sequence=default_m_sequence(m0, ratio, rungs), q=q, lam=lam)


def _lambda0(g: Nonlinearity, M: float) -> float:
    try:
        return lambda0_for(g, M)
    except LambdaUnconstrainedError:
        return float("inf")


def run_truncation_pipeline(
        grid: DomainGrid,
        V: FieldLike,
        omega: float,
        f0: Nonlinearity,
        g: Nonlinearity,
        ladder: TruncationLadder,
        seeds: Sequence[FieldLike],
        stop_tol: float = STOP_TOL,
        max_iter: int = MAX_ITER,
        *,
        reference_level: bool = True,
        lattice_step: Optional[int] = None,
        method: Optional[str] = None,
) -> TruncationLadder:
    lam, q = ladder.lam, ladder.q
    if lam < 0:
        raise InvalidTruncationError(f"lambda must be nonnegative, got {lam}")

    split = ComposedNonlinearity(f0=f0, g=g, lam=lam, q=q)
    report = check_hypotheses(split, m_sequence=ladder.m_sequence)
    failed = [name for name in REQUIRED_CONDITIONS if getattr(report, name).verdict is Verdict.FAIL]
    if failed:
        raise InvalidTruncationError(f"f0 and g violate {', '.join(failed)}")

    c0 = None
    if reference_level:
        c0 = nehari_minimize(grid, V, omega, f0, seeds, stop_tol, max_iter,
                             lattice_step=lattice_step, method=method).level
        logger.info(f"Reference level c0 = {c0:.10g}")

    results = []
    accepted = None
    for index, M in enumerate(ladder.m_sequence):
        bound = _lambda0(g, M)
        if lam > bound:
            logger.warning(f"Rung {index} (M={M:g}) inadmissible: lambda={lam:g} > lambda0={bound:.6g}")
            results.append(RungResult(index=index, M=M, lambda0=bound, admissible=False))
            continue

        surrogate = compose_f_lambda_n(f0, g, lam, M, q)
        outcome = nehari_minimize(grid, V, omega, surrogate, seeds, stop_tol, max_iter,
                                  lattice_step=lattice_step, method=method)
        peak = linf_norm(outcome.u)
        rung = RungResult(
            index=index,
            M=M,
            lambda0=bound,
            admissible=True,
            outcome=outcome,
            linf=peak,
            accepted=outcome.converged and peak < M,
            surrogate_residual=residual_dual_norm(grid, V, omega, surrogate, outcome.u, method=method),
            true_residual=residual_dual_norm(grid, V, omega, surrogate.untruncated(), outcome.u, method=method),
        )
        results.append(rung)
        logger.info(f"Rung {index}: M={M:g}, |u|_inf={peak:.6g}, accepted={rung.accepted}")
        if rung.accepted:
            accepted = index
            break

    update = {"rung_results": results, "accepted_rung": accepted, "c0": c0}
    working = results[accepted] if accepted is not None else (results[-1] if results else None)
    if working is not None:
        update["lambda0"] = working.lambda0
    if accepted is not None and c0 is not None:
        solution = results[accepted].outcome
        update["norm_bound_ok"] = solution.report.norm_E_sq <= 4.0 * c0 * (1.0 + LEVEL_RTOL)
        update["level_chain_ok"] = solution.level <= c0 * (1.0 + LEVEL_CHAIN_RTOL)
    if accepted is None:
        logger.warning("No rung of the truncation ladder was accepted")
    return ladder.model_copy(update=update)
