import logging
import threading
from typing import Any, Callable, ClassVar, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gammainc

from app.models.errors import (
    InvalidTruncationError,
    LambdaUnconstrainedError,
    NonlinearityError,
    TableOutOfRangeError,
)
from app.models.main_models import NonlinearityFamily

logger = logging.getLogger(__name__)

Q_RANGE = (4.0, 6.0)


class Nonlinearity(BaseModel):
    """Nonlinearity f with primitive F, extended by zero for s ≤ 0."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    family: ClassVar[NonlinearityFamily]

    def f(self, s):
        return self._extend(s, self._f_positive)

    def F(self, s):
        return self._extend(s, self._F_positive)

    def H(self, s):
        """s·f(s) - 4F(s)."""
        s_arr = np.asarray(s, dtype=float)
        result = s_arr * np.asarray(self.f(s_arr)) - 4.0 * np.asarray(self.F(s_arr))
        return float(result) if np.ndim(result) == 0 else result

    def describe(self) -> dict[str, Any]:
        return {"family": self.family.value}

    def _f_positive(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _F_positive(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def _extend(s, branch: Callable[[np.ndarray], np.ndarray]):
        arr = np.asarray(s, dtype=float)
        positive = np.where(arr > 0, arr, 0.0)
        with np.errstate(over="ignore"):
            out = np.where(arr > 0, branch(positive), 0.0)
        return float(out) if out.ndim == 0 else out


class PowerNonlinearity(Nonlinearity):
    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.POWER

    p: float

    @field_validator("p")
    @classmethod
    def _check_p(cls, value: float) -> float:
        if value <= 2:
            raise NonlinearityError(f"power family needs p > 2, got {value}")
        return value

    def _f_positive(self, s):
        return s ** (self.p - 1.0)

    def _F_positive(self, s):
        return s ** self.p / self.p

    def describe(self):
        return {"family": self.family.value, "p": self.p}


class SumPowersNonlinearity(Nonlinearity):
    """s^{q-1} + λ s^{p-1}; splits as f0 = s^{q-1}, g = s^{p-1}."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.SUM_POWERS

    q: float
    p: float
    lam: float = 1.0

    def _f_positive(self, s):
        return s ** (self.q - 1.0) + self.lam * s ** (self.p - 1.0)

    def _F_positive(self, s):
        return s ** self.q / self.q + self.lam * s ** self.p / self.p

    def split(self) -> tuple["Nonlinearity", "Nonlinearity", float, float]:
        return PowerNonlinearity(p=self.q), PowerNonlinearity(p=self.p), self.lam, self.q

    def describe(self):
        return {"family": self.family.value, "q": self.q, "p": self.p, "lambda": self.lam}


class LogPowerNonlinearity(Nonlinearity):
    """F(s) = s⁴ ln(1 + s); satisfies the monotonicity conditions but no Ambrosetti-Rabinowitz θ > 4."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.LOG_POWER

    def _f_positive(self, s):
        return s ** 3 * (4.0 * np.log1p(s) + s / (1.0 + s))

    def _F_positive(self, s):
        return s ** 4 * np.log1p(s)


class ExpTailNonlinearity(Nonlinearity):
    """Exponential tail e^s minus its Taylor polynomial below s^order."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.EXP_TAIL

    order: int = 5

    @field_validator("order")
    @classmethod
    def _check_order(cls, value: int) -> int:
        if value < 4:
            raise NonlinearityError(f"exp-tail order must be >= 4, got {value}")
        return value

    def _f_positive(self, s):
        return np.exp(s) * gammainc(self.order, s)

    def _F_positive(self, s):
        return np.exp(s) * gammainc(self.order + 1, s)

    def describe(self):
        return {"family": self.family.value, "order": self.order}


class ZeroNonlinearity(Nonlinearity):
    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.ZERO

    def _f_positive(self, s):
        return np.zeros_like(s)

    def _F_positive(self, s):
        return np.zeros_like(s)


class TruncatedNonlinearity(Nonlinearity):
    """g below M, continued above M by the pure power c·s^{q-1} matching g at M."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.TRUNCATED

    base: Nonlinearity
    M: float
    q: float

    @model_validator(mode="after")
    def _check_truncation(self):
        if not self.M > 0:
            raise InvalidTruncationError(f"Truncation level M must be positive, got {self.M}")
        if not Q_RANGE[0] < self.q < Q_RANGE[1]:
            raise InvalidTruncationError(f"q must lie in (4, 6) as required by (F3), got {self.q}")
        return self

    @property
    def coefficient(self) -> float:
        return float(self.base.f(self.M)) / self.M ** (self.q - 1.0)

    def _f_positive(self, s):
        inside = self.base.f(np.minimum(s, self.M))
        return np.where(s <= self.M, inside, self.coefficient * s ** (self.q - 1.0))

    def _F_positive(self, s):
        inside = self.base.F(np.minimum(s, self.M))
        tail = float(self.base.F(self.M)) + self.coefficient * (s ** self.q - self.M ** self.q) / self.q
        return np.where(s <= self.M, inside, tail)

    def describe(self):
        return {"family": self.family.value, "M": self.M, "q": self.q, "base": self.base.describe()}


class ComposedNonlinearity(Nonlinearity):
    """f0 + λ·g_n, with g_n the truncation of g at M (or g itself when M is None)."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.COMPOSED

    f0: Nonlinearity
    g: Nonlinearity
    lam: float
    q: float
    M: Optional[float] = None

    @property
    def g_n(self) -> Nonlinearity:
        if self.M is None:
            return self.g
        return TruncatedNonlinearity(base=self.g, M=self.M, q=self.q)

    def f(self, s):
        return self.f0.f(s) + self.lam * self.g_n.f(s)

    def F(self, s):
        return self.f0.F(s) + self.lam * self.g_n.F(s)

    def untruncated(self) -> "ComposedNonlinearity":
        return ComposedNonlinearity(f0=self.f0, g=self.g, lam=self.lam, q=self.q, M=None)

    def split(self) -> tuple[Nonlinearity, Nonlinearity, float, float]:
        return self.f0, self.g, self.lam, self.q

    def describe(self):
        return {
            "family": self.family.value,
            "lambda": self.lam,
            "q": self.q,
            "M": self.M,
            "f0": self.f0.describe(),
            "g": self.g.describe(),
        }


class SampledTableNonlinearity(Nonlinearity):
    """f linear between table nodes; F is the exact primitive of that interpolant."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.SAMPLED_TABLE

    s_table: np.ndarray
    f_table: np.ndarray

    _F_table: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def _check_table(self):
        s = np.asarray(self.s_table, dtype=float)
        f = np.asarray(self.f_table, dtype=float)
        if s.ndim != 1 or s.shape != f.shape or s.size < 2:
            raise NonlinearityError("Sampled table needs matching 1-d s and f columns")
        if s[0] != 0 or np.any(np.diff(s) <= 0):
            raise NonlinearityError("Sampled table must start at s = 0 and increase strictly")
        if f[0] != 0 or not np.all(np.isfinite(f)):
            raise NonlinearityError("Sampled table must have f(0) = 0 and finite values")
        segments = 0.5 * (f[1:] + f[:-1]) * np.diff(s)
        self._F_table = np.concatenate(([0.0], np.cumsum(segments)))
        return self

    @property
    def s_max(self) -> float:
        return float(self.s_table[-1])

    def _check_range(self, s: np.ndarray) -> None:
        if s.size and float(s.max()) > self.s_max:
            raise TableOutOfRangeError(float(s.max()), self.s_max)

    def _f_positive(self, s):
        self._check_range(s)
        return np.interp(s, self.s_table, self.f_table)

    def _F_positive(self, s):
        self._check_range(s)
        k = np.clip(np.searchsorted(self.s_table, s, side="right") - 1, 0, self.s_table.size - 2)
        width = self.s_table[k + 1] - self.s_table[k]
        slope = (self.f_table[k + 1] - self.f_table[k]) / width
        ds = s - self.s_table[k]
        return self._F_table[k] + self.f_table[k] * ds + 0.5 * slope * ds ** 2

    def describe(self):
        return {"family": self.family.value, "nodes": int(self.s_table.size), "s_max": self.s_max}


class CallableNonlinearity(Nonlinearity):
    """User-supplied scalar f; F comes from a quadrature table grown on demand."""

    family: ClassVar[NonlinearityFamily] = NonlinearityFamily.CALLABLE

    func: Callable[[float], float]
    s_max: float = 16.0
    knots: int = 1024

    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)
    _primitive: Optional[CubicHermiteSpline] = PrivateAttr(default=None)
    _range: float = PrivateAttr(default=0.0)

    def _f_positive(self, s):
        return np.vectorize(self.func, otypes=[float])(s)

    def _F_positive(self, s):
        needed = float(s.max()) if s.size else 0.0
        primitive = self._ensure_range(needed)
        return primitive(s)

    def _ensure_range(self, needed: float) -> CubicHermiteSpline:
        with self._lock:
            if self._primitive is None or needed > self._range:
                upper = max(self.s_max, self._range)
                while upper < needed:
                    upper *= 2.0
                self._primitive = self._tabulate(upper)
                self._range = upper
            return self._primitive

    def _tabulate(self, upper: float) -> CubicHermiteSpline:
        nodes = np.linspace(0.0, upper, self.knots)
        pieces = [quad(self.func, a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(nodes[:-1], nodes[1:])]
        values = np.concatenate(([0.0], np.cumsum(pieces)))
        logger.debug(f"Tabulated primitive of callable nonlinearity on [0, {upper:.6g}]")
        return CubicHermiteSpline(nodes, values, self._f_positive(nodes))

    def describe(self):
        return {"family": self.family.value, "s_max": self._range or self.s_max}


def build_nonlinearity(family: str, **params) -> Nonlinearity:
    family = NonlinearityFamily(family)
    builders = {
        NonlinearityFamily.POWER: lambda: PowerNonlinearity(p=params["p"]),
        NonlinearityFamily.SUM_POWERS: lambda: SumPowersNonlinearity(
            q=params["q"], p=params["p"], lam=params.get("lam", 1.0)
        ),
        NonlinearityFamily.LOG_POWER: LogPowerNonlinearity,
        NonlinearityFamily.EXP_TAIL: lambda: ExpTailNonlinearity(order=params.get("order", 5)),
        NonlinearityFamily.ZERO: ZeroNonlinearity,
        NonlinearityFamily.SAMPLED_TABLE: lambda: SampledTableNonlinearity(
            s_table=params["s_table"], f_table=params["f_table"]
        ),
    }
    if family not in builders:
        raise NonlinearityError(f"Family {family.value} cannot be built from parameters")
    try:
        return builders[family]()
    except KeyError as exc:
        raise NonlinearityError(f"{family.value} nonlinearity needs parameter {exc.args[0]}") from exc


def truncate_g(g: Nonlinearity, M: float, q: float, samples: int = 2000) -> TruncatedNonlinearity:
    s = np.linspace(0.0, M, samples)
    values = np.asarray(g.f(s))
    if float(values[0]) != 0.0:
        raise InvalidTruncationError(f"g(0) must vanish, got {values[0]}")
    if np.any(values < 0):
        witness = float(s[np.argmin(values)])
        raise InvalidTruncationError(f"g must be nonnegative, g({witness:.6g}) < 0")
    return TruncatedNonlinearity(base=g, M=M, q=q)


def lambda0_for(g: Nonlinearity, M: float) -> float:
    g_at_M = float(g.f(M))
    if g_at_M <= 0:
        raise LambdaUnconstrainedError(M)
    return 1.0 / (g_at_M * M)


def compose_f_lambda_n(f0: Nonlinearity, g: Nonlinearity, lam: float, M: float, q: float) -> ComposedNonlinearity:
    if lam < 0:
        raise InvalidTruncationError(f"lambda must be nonnegative, got {lam}")
    truncated = truncate_g(g, M, q)

    s = np.geomspace(1e-6, max(10.0 * M, 100.0), 2000)
    excess = np.abs(np.asarray(f0.f(s))) - s ** (q - 1.0) * (1.0 + 1e-12)
    if np.any(excess > 0):
        witness = float(s[np.argmax(excess)])
        raise InvalidTruncationError(f"|f0(s)| exceeds s^(q-1) at s = {witness:.6g} (F3)")

    return ComposedNonlinearity(f0=f0, g=truncated.base, lam=lam, q=q, M=M)
