from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import MAX_ITER, N_PATH, PHI_SOLVER, PHI_TOL, SOLVER_PHI_METHOD, STOP_TOL
from app.models.main_models import GridKind, SolveMethod

CONFIG_FAMILIES = ("power", "sum-powers", "log-power", "exp-tail", "zero", "sampled-table")


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class DomainSection(Section):
    kind: GridKind
    extent: float = Field(gt=0)
    n_points: int = Field(ge=8)


class ModelSection(Section):
    omega: float = Field(gt=0)
    v0: Optional[float] = Field(default=None, gt=0)
    m0: Optional[float] = Field(default=None, gt=0)
    v_amplitude: float = Field(default=0.0, ge=0)
    v_cells: int = Field(default=1, ge=1)
    v_table: Optional[str] = None
    alpha: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_potential(self):
        if self.m0 is not None:
            if self.omega >= self.m0:
                raise ValueError("omega must be smaller than m0")
            classic = self.m0 ** 2 - self.omega ** 2
            if self.v0 is not None and abs(self.v0 - classic) > 1e-12 * classic:
                raise ValueError("v0 conflicts with m0^2 - omega^2")
        elif self.v0 is None and self.v_table is None:
            raise ValueError("one of v0, m0 or v_table is required")
        return self

    @property
    def constant_potential(self) -> Optional[float]:
        if self.v0 is not None:
            return self.v0
        if self.m0 is not None:
            return self.m0 ** 2 - self.omega ** 2
        return None


class NonlinearitySection(Section):
    family: Literal[CONFIG_FAMILIES]
    p: Optional[float] = None
    q: Optional[float] = None
    lam: float = Field(default=1.0, ge=0, alias="lambda")
    order: int = 5
    table: Optional[str] = None

    @model_validator(mode="after")
    def _check_parameters(self):
        required = {"power": ("p",), "sum-powers": ("q", "p"), "sampled-table": ("table",)}
        for name in required.get(self.family, ()):
            if getattr(self, name) is None:
                raise ValueError(f"{self.family} needs {name}")
        return self


class SolverSection(Section):
    method: SolveMethod
    stop_tol: float = Field(default=STOP_TOL, gt=0)
    max_iter: int = Field(default=MAX_ITER, ge=1)
    seeds: int = Field(default=3, ge=1)
    seed: int = 0
    n_path: int = Field(default=N_PATH, ge=3)
    t_max: float = Field(default=1e6, gt=1)
    phi_tol: float = Field(default=PHI_TOL, gt=0)
    phi_method: Literal["cg", "direct"] = PHI_SOLVER
    solve_method: Literal["cg", "direct"] = SOLVER_PHI_METHOD
    u0: Optional[str] = None


class TruncationSection(Section):
    lam: float = Field(ge=0, alias="lambda")
    q: float
    m0: float = Field(default=4.0, gt=0)
    ratio: float = Field(default=2.0, gt=1)
    rungs: int = Field(default=8, ge=1)
    g_family: Literal["power", "exp-tail"] = "power"
    g_p: float = 7.0
    g_order: int = 5
    reference_level: bool = True

    @field_validator("q")
    @classmethod
    def _check_q(cls, value: float) -> float:
        if not 4 < value < 6:
            raise ValueError(f"q = {value} must lie in (4, 6) as required by (F3)")
        return value


class CheckSection(Section):
    s_max: float = Field(default=100.0, gt=0)
    count: int = Field(default=4000, ge=1000)


class OutputSection(Section):
    dir: str = "out"
    report: str = "report.json"
    trace: str = "trace.csv"
    profile: str = "profile.csv"
    formats: list[Literal["json", "csv"]] = ["json", "csv"]

    @field_validator("formats", mode="before")
    @classmethod
    def _split_formats(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value


class ExperimentConfig(Section):
    domain: DomainSection
    model: ModelSection
    nonlinearity: NonlinearitySection
    solver: SolverSection
    truncation: Optional[TruncationSection] = None
    check: CheckSection = CheckSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _check_domain(self):
        if self.domain.kind is GridKind.RADIAL_BALL and self.model.v_amplitude > 0:
            raise ValueError("model.v_amplitude needs the periodic-cube domain")
        if self.domain.kind is GridKind.PERIODIC_CUBE and self.domain.n_points % self.model.v_cells:
            raise ValueError("model.v_cells must divide domain.n_points")
        return self
