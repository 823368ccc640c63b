"""Sampled certificates for the structural conditions on f.

Verdicts come from finite samples, so PASS means "no violation and the
expected trend on the sampled range"; asymptotic conditions whose trend is
not visible on the samples come back UNDECIDED rather than FAIL.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from app.functional.nonlinearity import Nonlinearity, Q_RANGE
from app.models.errors import NonlinearityError
from app.models.main_models import ConditionVerdict, HypothesisReport, Verdict

logger = logging.getLogger(__name__)

DEFAULT_S_MAX = 100.0
DEFAULT_COUNT = 4000
MIN_COUNT = 1000
LOW_DECADES = 6
THETA_GRID = np.concatenate(([4.01], np.round(np.arange(4.1, 10.0 + 1e-9, 0.1), 10)))
S0_GRID = np.geomspace(1e-2, 1e2, 9)
P_GRID = np.round(np.linspace(Q_RANGE[0] + 0.05, Q_RANGE[1] - 0.05, 39), 10)
# decades scanned beyond the sampled range when a ratio is still drifting
EXTRAPOLATION_DECADES = 300
REL_TOL = 1e-12


def sample_points(s_max: float, count: int) -> np.ndarray:
    return np.geomspace(s_max * 10.0 ** -LOW_DECADES, s_max, count)


def _passed(**kwargs) -> ConditionVerdict:
    return ConditionVerdict(verdict=Verdict.PASS, **kwargs)


def _failed(witness: float, detail: str, **kwargs) -> ConditionVerdict:
    return ConditionVerdict(verdict=Verdict.FAIL, witness=float(witness), detail=detail, **kwargs)


def _undecided(detail: str, **kwargs) -> ConditionVerdict:
    return ConditionVerdict(verdict=Verdict.UNDECIDED, detail=detail, **kwargs)


def _low_decade(s: np.ndarray) -> np.ndarray:
    return s <= 10.0 * s[0]


def _top_decade(s: np.ndarray) -> np.ndarray:
    return s >= s[-1] / 10.0


def _vanishes_at_zero(s: np.ndarray, values: np.ndarray, label: str) -> ConditionVerdict:
    """|values(s)| → 0 as s → 0, judged on the lowest sampled decade."""
    mask = _low_decade(s)
    ratio = np.abs(values[mask])
    if not np.any(ratio):
        return _passed(detail=f"{label} vanishes on the lowest decade")
    if ratio[0] >= ratio[-1]:
        return _failed(s[mask][0], f"{label} does not decrease as s -> 0")
    monotone = np.all(np.diff(ratio) >= -REL_TOL * np.abs(ratio[1:]))
    if monotone and ratio[0] < 0.5 * ratio[-1]:
        return _passed(constants={"low_ratio": float(ratio[0])})
    return _undecided(f"{label} is not monotone on the lowest decade")


def _combine(*verdicts: ConditionVerdict) -> ConditionVerdict:
    for verdict in verdicts:
        if verdict.verdict is Verdict.FAIL:
            return verdict
    for verdict in verdicts:
        if verdict.verdict is Verdict.UNDECIDED:
            return verdict
    return verdicts[0]


def check_f1(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    f = np.asarray(nl.f(s))
    F = np.asarray(nl.F(s))
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(F))):
        bad = s[~(np.isfinite(f) & np.isfinite(F))][0]
        return _failed(bad, "f or F is not finite")
    if nl.f(0.0) != 0 or nl.F(0.0) != 0 or nl.f(-1.0) != 0:
        return _failed(0.0, "f is not zero-extended on s <= 0")
    return _passed()


def check_f2(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    return _vanishes_at_zero(s, np.asarray(nl.f(s)) / s, "f(s)/s")


def check_f3(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    """|f(s)| ≤ C(1 + |s|^{p-1}) for some p in (4, 6): only PASS or UNDECIDED."""
    f = np.abs(np.asarray(nl.f(s)))
    top = _top_decade(s)
    for p in P_GRID:
        ratio = f / (s + s ** (p - 1.0))
        head, tail = ratio[top][0], ratio[top][-1]
        if tail == 0 or (head > 0 and np.log10(tail / head) <= 1e-3):
            return _passed(constants={"p": float(p), "C": float(ratio.max())})
    return _undecided("no p in (4, 6) bounds the growth over the sampled range")


def check_f4(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    ratio = np.asarray(nl.F(s)) / s ** 4
    top = ratio[_top_decade(s)]
    if top[-1] <= top[0]:
        return _failed(s[-1], "F(s)/s^4 does not grow on the top decade")
    monotone = np.all(np.diff(top) >= -REL_TOL * np.abs(top[1:]))
    if monotone and top[-1] > 1.05 * top[0]:
        return _passed(constants={"top_ratio": float(top[-1])})
    return _undecided("F(s)/s^4 grows too slowly to certify a limit of +inf")


def check_f5(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    ratio = np.asarray(nl.f(s)) / s ** 3
    drops = np.diff(ratio) < -REL_TOL * np.maximum(np.abs(ratio[1:]), np.finfo(float).tiny)
    if np.any(drops):
        return _failed(s[1:][drops][0], "f(s)/s^3 decreases")
    return _passed()


def check_f5prime(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    f = np.asarray(nl.f(s))
    F = np.asarray(nl.F(s))
    H = s * f - 4.0 * F
    bad = H < -REL_TOL * (np.abs(s * f) + 4.0 * np.abs(F))
    if np.any(bad):
        return _failed(s[np.argmin(H)], "H(s) = s f(s) - 4F(s) is negative")
    return _passed()


def check_h_monotone(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    H = np.asarray(nl.H(s))
    drops = np.diff(H) < -REL_TOL * np.maximum(np.abs(H[1:]), np.finfo(float).tiny)
    if np.any(drops):
        return _failed(s[1:][drops][0], "H(s) decreases")
    return _passed()


def _far_witness(nl: Nonlinearity, theta: float, s_max: float) -> Optional[float]:
    for k in range(1, EXTRAPOLATION_DECADES):
        s = s_max * 10.0 ** k
        with np.errstate(over="ignore", invalid="ignore"):
            f, F = float(nl.f(s)), float(nl.F(s))
            gap = s * f - theta * F
        if not np.isfinite(gap):
            return None
        if gap < 0:
            return s
    return None


def check_ar(nl: Nonlinearity, s: np.ndarray) -> ConditionVerdict:
    """0 < θF(s) ≤ s f(s) for s ≥ s0, searched over the θ and s0 grids."""
    f = np.asarray(nl.f(s))
    F = np.asarray(nl.F(s))
    positive = F > 0
    rho = np.where(positive, s * f / np.where(positive, F, 1.0), 0.0)
    top = _top_decade(s) & positive
    drifting = bool(top.any()) and rho[top][-1] < rho[top][0] * (1.0 - 1e-9)

    witnesses = []
    for theta in THETA_GRID:
        violated = (F <= 0) | (theta * F > s * f * (1.0 + REL_TOL))
        holds_from = next((s0 for s0 in S0_GRID if not np.any(violated & (s >= s0))), None)
        if holds_from is None:
            tail = s >= S0_GRID[-1]
            deficit = np.where(tail, theta * F - s * f, -np.inf)
            witnesses.append((float(theta), float(s[np.argmax(deficit)])))
            continue
        far = _far_witness(nl, theta, float(s[-1])) if drifting else None
        if far is None:
            return _passed(constants={"theta": float(theta), "s0": float(holds_from)})
        witnesses.append((float(theta), far))

    logger.info(f"AR fails for every theta on the grid, largest witness s = {max(w for _, w in witnesses):.3g}")
    return _failed(
        witnesses[0][1],
        "no theta > 4 on the grid satisfies theta F(s) <= s f(s) for large s",
        witnesses=witnesses,
    )


def _split_hypotheses(
        f0: Nonlinearity,
        g: Nonlinearity,
        q: float,
        s: np.ndarray,
        m_sequence: Sequence[float],
        count: int,
) -> dict[str, ConditionVerdict]:
    g_values = np.asarray(g.f(s))
    if f0.f(0.0) != 0 or g.f(0.0) != 0:
        F1 = _failed(0.0, "f0(0) and g(0) must vanish")
    elif np.any(g_values < 0):
        F1 = _failed(s[np.argmin(g_values)], "g takes negative values")
    else:
        F1 = _passed()

    F2 = _combine(check_f2(f0, s), check_f2(g, s))

    excess = np.abs(np.asarray(f0.f(s))) - s ** (q - 1.0) * (1.0 + REL_TOL)
    F3 = _failed(s[np.argmax(excess)], f"|f0(s)| exceeds s^{q - 1:g}") if np.any(excess > 0) else _passed(
        constants={"q": float(q)}
    )

    F4 = check_f4(f0, s)
    F5 = _combine(check_f5prime(f0, s), check_f5prime(g, s))

    verified = 0
    F6 = None
    for M in m_sequence:
        s_check = np.union1d(np.geomspace(M * 1e-6, M, count // 2), np.linspace(M / count, M, count // 2))
        ratio = np.asarray(g.f(s_check)) / s_check ** (q - 1.0)
        bound = float(g.f(M)) / M ** (q - 1.0)
        bad = ratio > bound * (1.0 + REL_TOL)
        if np.any(bad):
            F6 = _undecided(
                f"g(s)/s^(q-1) exceeds its value at M = {M:g} for s = {s_check[bad][0]:.6g}",
                witness=float(s_check[bad][0]),
                constants={"verified_prefix": float(verified)},
            )
            break
        verified += 1
    if F6 is None:
        F6 = _passed(constants={"verified_prefix": float(verified)})

    return {"F1": F1, "F2": F2, "F3": F3, "F4": F4, "F5": F5, "F6": F6}


def default_m_sequence(m0: float = 4.0, ratio: float = 2.0, rungs: int = 8) -> list[float]:
    return [m0 * ratio ** n for n in range(rungs)]


def check_hypotheses(
        nl: Nonlinearity,
        sample_range: tuple[float, float] = (0.0, DEFAULT_S_MAX),
        sample_count: int = DEFAULT_COUNT,
        *,
        m_sequence: Optional[Sequence[float]] = None,
        m0: Optional[float] = None,
        omega: Optional[float] = None,
) -> HypothesisReport:
    s_max = float(sample_range[1])
    if not s_max > 0:
        raise NonlinearityError(f"Sample range must reach past 0, got {sample_range}", code="INVALID_SAMPLING")
    if sample_count < MIN_COUNT:
        raise NonlinearityError(f"Need at least {MIN_COUNT} samples, got {sample_count}", code="INVALID_SAMPLING")

    s = sample_points(s_max, sample_count)
    verdicts = {
        "f1": check_f1(nl, s),
        "f2": check_f2(nl, s),
        "f3": check_f3(nl, s),
        "f4": check_f4(nl, s),
        "f5": check_f5(nl, s),
        "f5prime": check_f5prime(nl, s),
        "AR": check_ar(nl, s),
        "h_monotone": check_h_monotone(nl, s),
    }

    if hasattr(nl, "split"):
        f0, g, _, q = nl.split()
        sequence = list(m_sequence) if m_sequence is not None else default_m_sequence()
        verdicts.update(_split_hypotheses(f0, g, q, s, sequence, sample_count))

    if m0 is not None and omega is not None:
        verdicts["nonexistence_i_ii"] = check_nonexistence(nl, m0, omega, (0.0, s_max), sample_count)

    for name, verdict in verdicts.items():
        if verdict.verdict is not Verdict.PASS:
            logger.info(f"{name}: {verdict.verdict.value} {verdict.detail}")

    return HypothesisReport(sample_range=(0.0, s_max), sample_count=sample_count, **verdicts)


def check_nonexistence(
        nl: Nonlinearity,
        m0: float,
        omega: float,
        sample_range: tuple[float, float] = (0.0, 1e3),
        sample_count: int = DEFAULT_COUNT,
) -> ConditionVerdict:
    """PASS when every s satisfies s f + 2(m0² - ω²)s² ≥ 6F or 2F ≥ s f."""
    s = np.concatenate(([0.0], sample_points(float(sample_range[1]), sample_count)))
    f = np.asarray(nl.f(s))
    F = np.asarray(nl.F(s))
    tol = REL_TOL * (np.abs(s * f) + 6.0 * np.abs(F) + 2.0 * abs(m0 ** 2 - omega ** 2) * s ** 2)
    first = s * f + 2.0 * (m0 ** 2 - omega ** 2) * s ** 2 - 6.0 * F
    second = 2.0 * F - s * f
    deficit = np.minimum(-first, -second) - tol
    if np.any(deficit > 0):
        witness = s[np.argmax(deficit)]
        return _failed(witness, "both nonexistence branches fail")
    return _passed()
