from typing import Optional


class KGMError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 1, key: Optional[str] = None):
        self.code = code
        self.message = message
        self.exit_code = exit_code
        self.key = key
        super().__init__(self.message)


class InvalidGridError(KGMError):
    def __init__(self, message: str):
        super().__init__(code="INVALID_GRID", message=message)


class GridMismatchError(KGMError):
    def __init__(self, expected: int, got: int):
        super().__init__(
            code="GRID_MISMATCH",
            message=f"Field has {got} values but the grid has {expected} nodes"
        )


class InvalidFieldError(KGMError):
    def __init__(self, message: str):
        super().__init__(code="INVALID_FIELD", message=message)


class InvalidPotentialError(KGMError):
    def __init__(self, minimum: float):
        super().__init__(
            code="INVALID_POTENTIAL",
            message=f"Potential must satisfy V >= alpha > 0 at every node, min(V) = {minimum:.6g}"
        )


class NonlinearityError(KGMError):
    def __init__(self, message: str, code: str = "INVALID_NONLINEARITY"):
        super().__init__(code=code, message=message)


class TableOutOfRangeError(NonlinearityError):
    def __init__(self, s: float, s_max: float):
        super().__init__(
            message=f"Sampled table evaluated at s = {s:.6g} outside [0, {s_max:.6g}]",
            code="TABLE_OUT_OF_RANGE"
        )


class InvalidTruncationError(NonlinearityError):
    def __init__(self, message: str):
        super().__init__(message=message, code="INVALID_TRUNCATION")


class LambdaUnconstrainedError(NonlinearityError):
    def __init__(self, M: float):
        super().__init__(
            message=f"g(M) = 0 at M = {M:.6g}: lambda0 is unconstrained, choose lambda explicitly",
            code="LAMBDA_UNCONSTRAINED"
        )


class ReductionConvergenceError(KGMError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            code="REDUCTION_NOT_CONVERGED",
            message=f"phi-solve stopped after {iterations} iterations, relative residual {residual:.3e}"
        )


class RieszConvergenceError(KGMError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            code="RIESZ_NOT_CONVERGED",
            message=f"Riesz solve stopped after {iterations} iterations, relative residual {residual:.3e}"
        )


class GeometryError(KGMError):
    def __init__(self, message: str):
        super().__init__(code="GEOMETRY_NOT_FOUND", message=message)


class PathCollapseError(KGMError):
    def __init__(self, index: int):
        super().__init__(
            code="PATH_COLLAPSE",
            message=f"Path maximum moved to endpoint node {index}"
        )


class NehariProjectionError(KGMError):
    def __init__(self, lo: float, hi: float):
        super().__init__(
            code="NEHARI_PROJECTION_FAILED",
            message=f"t -> I'(tu)(tu) has no sign change on [{lo:.6g}, {hi:.6g}]"
        )


class AllSeedsFailedError(KGMError):
    def __init__(self, count: int):
        super().__init__(
            code="ALL_SEEDS_FAILED",
            message=f"None of the {count} seeds could be projected onto the Nehari manifold"
        )


class ConfigError(KGMError):
    def __init__(self, key: str, message: str):
        super().__init__(
            code="INVALID_CONFIG",
            message=f"{key}: {message}",
            exit_code=2,
            key=key
        )


class InvalidProfileError(KGMError):
    def __init__(self, path: str, message: str):
        super().__init__(
            code="INVALID_PROFILE",
            message=f"{path}: {message}"
        )
