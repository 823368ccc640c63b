from enum import Enum
from typing import Any, Optional

import numpy as np
import scipy.sparse as sparse
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator

from app.models.errors import GridMismatchError, InvalidFieldError


class GridKind(str, Enum):
    RADIAL_BALL = "radial-ball"
    PERIODIC_CUBE = "periodic-cube"


class SolveMethod(str, Enum):
    DESCENT = "descent"
    MOUNTAIN_PASS = "mountain-pass"
    NEHARI = "nehari"


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNDECIDED = "UNDECIDED"


class NonlinearityFamily(str, Enum):
    POWER = "power"
    SUM_POWERS = "sum-powers"
    LOG_POWER = "log-power"
    EXP_TAIL = "exp-tail"
    ZERO = "zero"
    TRUNCATED = "truncated"
    COMPOSED = "composed"
    SAMPLED_TABLE = "sampled-table"
    CALLABLE = "callable"


class DomainGrid(BaseModel):
    """Discretized ball (radial, cell-centred) or periodic cube.

    ``stiffness`` is the weighted Dirichlet form K with uᵀKu ≈ ∫|∇u|², so the
    Laplacian is Δ = -W⁻¹K for W = diag(quad_weights). ``boundary_load`` is K·1
    computed exactly (zero on the cube, the Dirichlet face term on the ball).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: GridKind
    extent: float
    n_points: int
    spacing: float
    coords: np.ndarray
    quad_weights: np.ndarray
    stiffness: sparse.csr_matrix
    boundary_load: np.ndarray

    _cache: dict = PrivateAttr(default_factory=dict)

    @property
    def node_count(self) -> int:
        return int(self.quad_weights.shape[0])

    @property
    def shape(self) -> tuple[int, ...]:
        if self.kind is GridKind.PERIODIC_CUBE:
            return (self.n_points,) * 3
        return (self.n_points,)

    @property
    def laplacian(self) -> sparse.csr_matrix:
        inverse_weights = sparse.diags(1.0 / self.quad_weights)
        return (-(inverse_weights @ self.stiffness)).tocsr()

    @property
    def key(self) -> tuple[str, float, int]:
        return self.kind.value, self.extent, self.n_points

    def cache(self) -> dict:
        return self._cache


class Field(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: DomainGrid
    values: np.ndarray

    @model_validator(mode="after")
    def _check_values(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            values = values.ravel()
        if values.shape[0] != self.grid.node_count:
            raise GridMismatchError(self.grid.node_count, values.shape[0])
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("Field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        return self


class ReductionSolution(BaseModel):
    phi: Field
    iterations: int
    linear_residual: float
    bounds_ok: bool
    phi_min: float
    phi_max: float
    identity_residual: float
    method: str


class EnergyReport(BaseModel):
    I: float
    norm_E_sq: float
    coupling: float
    potential_term: float
    nehari: float
    cerami: float
    H_integral: float
    quartic_coupling: float
    gradient_norm_E: float
    dual_norm: str = "riesz-E"


class ConditionVerdict(BaseModel):
    verdict: Verdict
    witness: Optional[float] = None
    witnesses: list[tuple[float, float]] = []
    constants: dict[str, float] = {}
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.PASS


class HypothesisReport(BaseModel):
    f1: ConditionVerdict
    f2: ConditionVerdict
    f3: ConditionVerdict
    f4: ConditionVerdict
    f5: ConditionVerdict
    f5prime: ConditionVerdict
    AR: ConditionVerdict
    h_monotone: ConditionVerdict
    F1: Optional[ConditionVerdict] = None
    F2: Optional[ConditionVerdict] = None
    F3: Optional[ConditionVerdict] = None
    F4: Optional[ConditionVerdict] = None
    F5: Optional[ConditionVerdict] = None
    F6: Optional[ConditionVerdict] = None
    nonexistence_i_ii: Optional[ConditionVerdict] = None
    sample_range: tuple[float, float]
    sample_count: int

    def verdicts(self) -> dict[str, ConditionVerdict]:
        names = ("f1", "f2", "f3", "f4", "f5", "f5prime", "AR", "h_monotone",
                 "F1", "F2", "F3", "F4", "F5", "F6", "nonexistence_i_ii")
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}


class LevelBoundVerdict(BaseModel):
    passed: bool
    failed: list[str]
    identity_defect: float
    H_integral: float
    norm_E_sq: float
    level: float


class TraceEntry(BaseModel):
    iteration: int
    I: float
    cerami: float
    norm_E: float


class Certificates(BaseModel):
    level_bound: LevelBoundVerdict
    min_u: float
    max_u: float
    positivity_ok: bool
    residual_dual_norm: float
    residual_ok: bool

    @property
    def failed(self) -> list[str]:
        names = [f"level_bound.{name}" for name in self.level_bound.failed]
        if not self.positivity_ok:
            names.append("positivity")
        if not self.residual_ok:
            names.append("weak_residual")
        return names


class GeometryReport(BaseModel):
    r: float
    b: float
    e: Field
    I_e: float
    t_e: float
    t_peak: float
    nehari_bound: Optional[float] = None


class SolveOutcome(BaseModel):
    u: Field
    phi: Field
    level: float
    method: SolveMethod
    trace: list[TraceEntry]
    certificates: Certificates
    converged: bool
    iterations: int
    report: EnergyReport
    t_star: Optional[float] = None
    path_level: Optional[float] = None
    seed_index: Optional[int] = None
    seed_levels: list[Optional[float]] = []


class RungResult(BaseModel):
    index: int
    M: float
    lambda0: float
    admissible: bool
    outcome: Optional[SolveOutcome] = None
    linf: Optional[float] = None
    accepted: bool = False
    true_residual: Optional[float] = None
    surrogate_residual: Optional[float] = None


class TruncationLadder(BaseModel):
    m_sequence: list[float]
    q: float
    lam: float
    lambda0: Optional[float] = None
    rung_results: list[RungResult] = []
    accepted_rung: Optional[int] = None
    c0: Optional[float] = None
    norm_bound_ok: Optional[bool] = None
    level_chain_ok: Optional[bool] = None

    @model_validator(mode="after")
    def _check_sequence(self):
        sequence = np.asarray(self.m_sequence, dtype=float)
        if sequence.size == 0 or np.any(sequence <= 0) or np.any(np.diff(sequence) <= 0):
            raise ValueError("m_sequence must be positive and strictly increasing")
        return self

    @property
    def accepted(self) -> Optional[RungResult]:
        if self.accepted_rung is None:
            return None
        return self.rung_results[self.accepted_rung]


def summary(model: BaseModel, exclude: Optional[set[str]] = None) -> dict[str, Any]:
    return model.model_dump(mode="json", exclude=exclude or set())
