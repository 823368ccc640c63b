import logging
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import LinearOperator, cg, splu, spsolve

logger = logging.getLogger(__name__)


def jacobi_cg(
        matrix: sparse.csr_matrix,
        rhs: np.ndarray,
        tol: float,
        max_iter: int,
        x0: Optional[np.ndarray] = None,
        atol: Optional[float] = None,
) -> tuple[np.ndarray, int, bool]:
    """Jacobi-preconditioned CG; returns (solution, iterations, converged)."""
    diagonal = matrix.diagonal()
    preconditioner = LinearOperator(matrix.shape, matvec=lambda x: x / diagonal, dtype=float)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    solution, info = cg(
        matrix,
        rhs,
        x0=x0,
        rtol=0.0 if atol is not None else tol,
        atol=atol if atol is not None else 0.0,
        maxiter=max_iter,
        M=preconditioner,
        callback=count,
    )
    if info < 0:
        logger.error(f"CG breakdown (info={info})")
    return solution, iterations, info == 0


def direct_solve(matrix: sparse.spmatrix, rhs: np.ndarray) -> np.ndarray:
    return np.asarray(spsolve(matrix.tocsc(), rhs), dtype=float)


def factorize(matrix: sparse.spmatrix):
    return splu(matrix.tocsc())
