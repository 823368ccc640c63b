import numpy as np
import pytest

from app.functional.hypotheses import THETA_GRID, check_hypotheses, check_nonexistence
from app.functional.nonlinearity import (
    ExpTailNonlinearity,
    LogPowerNonlinearity,
    PowerNonlinearity,
    SumPowersNonlinearity,
    ZeroNonlinearity,
)
from app.models.errors import NonlinearityError
from app.models.main_models import Verdict


def test_quintic_satisfies_everything():
    report = check_hypotheses(PowerNonlinearity(p=5.0))

    for name in ("f1", "f2", "f3", "f4", "f5", "f5prime", "AR", "h_monotone"):
        assert getattr(report, name).verdict is Verdict.PASS, name
    assert report.f3.constants["p"] == pytest.approx(5.0)


def test_log_power_fails_only_ambrosetti_rabinowitz():
    nl = LogPowerNonlinearity()
    report = check_hypotheses(nl)

    assert report.f4.verdict is Verdict.PASS
    assert report.f5.verdict is Verdict.PASS
    assert report.f5prime.verdict is Verdict.PASS
    assert report.AR.verdict is Verdict.FAIL
    assert len(report.AR.witnesses) == len(THETA_GRID)
    for theta, s in report.AR.witnesses:
        assert theta * nl.F(s) > s * nl.f(s)


def test_log_power_near_four_needs_huge_witness():
    nl = LogPowerNonlinearity()
    witnesses = dict(check_hypotheses(nl).AR.witnesses)
    assert witnesses[4.01] > 1e40


def test_cubic_violates_h_nonnegativity():
    nl = PowerNonlinearity(p=3.0)
    report = check_hypotheses(nl)

    assert report.f5prime.verdict is Verdict.FAIL
    assert nl.H(report.f5prime.witness) < 0
    assert report.f5.verdict is Verdict.FAIL


def test_every_failure_has_witness():
    for nl in (PowerNonlinearity(p=3.0), LogPowerNonlinearity(), ZeroNonlinearity()):
        report = check_hypotheses(nl)
        for name, verdict in report.verdicts().items():
            if verdict.verdict is Verdict.FAIL:
                assert verdict.witness is not None, name


def test_growth_condition_never_fails():
    report = check_hypotheses(PowerNonlinearity(p=8.0))
    assert report.f3.verdict is Verdict.UNDECIDED


def test_zero_nonlinearity_has_no_superquartic_growth():
    report = check_hypotheses(ZeroNonlinearity())
    assert report.f4.verdict is Verdict.FAIL
    assert report.AR.verdict is Verdict.FAIL


def test_split_conditions_for_sum_of_powers():
    report = check_hypotheses(
        SumPowersNonlinearity(q=5.0, p=7.0, lam=1.0),
        m_sequence=[2.0 ** n for n in range(8)],
    )

    for name in ("F1", "F2", "F3", "F4", "F5", "F6"):
        assert getattr(report, name).verdict is Verdict.PASS, name
    assert report.F6.constants["verified_prefix"] == 8


def test_sample_count_floor():
    with pytest.raises(NonlinearityError):
        check_hypotheses(PowerNonlinearity(p=5.0), (0.0, 100.0), 500)


def test_nonexistence_holds_for_critical_power():
    verdict = check_nonexistence(PowerNonlinearity(p=6.0), m0=2.0, omega=1.0)
    assert verdict.verdict is Verdict.PASS
    assert verdict.holds


def test_nonexistence_fails_for_quintic():
    nl = PowerNonlinearity(p=5.0)
    m0, omega = 2.0, 1.0
    verdict = check_nonexistence(nl, m0, omega)

    s = verdict.witness
    assert verdict.verdict is Verdict.FAIL
    assert s * nl.f(s) + 2 * (m0 ** 2 - omega ** 2) * s ** 2 < 6 * nl.F(s)
    assert 2 * nl.F(s) < s * nl.f(s)


def test_nonexistence_trivial_for_zero():
    assert check_nonexistence(ZeroNonlinearity(), 2.0, 1.0).holds


def test_truncation_ratio_monotone_for_supercritical_terms():
    report = check_hypotheses(
        SumPowersNonlinearity(q=5.0, p=7.0, lam=0.5),
        (0.0, 50.0),
        2000,
    )
    assert report.F6.verdict is Verdict.PASS

    g = ExpTailNonlinearity(order=5)
    s = np.linspace(1e-3, 8.0, 500)
    ratio = g.f(s) / s ** 4
    assert np.all(np.diff(ratio) >= 0)
