import numpy as np
import pytest

from app.functional.nonlinearity import (
    CallableNonlinearity,
    ComposedNonlinearity,
    ExpTailNonlinearity,
    LogPowerNonlinearity,
    PowerNonlinearity,
    SampledTableNonlinearity,
    SumPowersNonlinearity,
    TruncatedNonlinearity,
    ZeroNonlinearity,
    build_nonlinearity,
    compose_f_lambda_n,
    lambda0_for,
    truncate_g,
)
from app.models.errors import (
    InvalidTruncationError,
    LambdaUnconstrainedError,
    NonlinearityError,
    TableOutOfRangeError,
)

SMOOTH_FAMILIES = [
    PowerNonlinearity(p=5.0),
    SumPowersNonlinearity(q=5.0, p=7.0, lam=1.0),
    LogPowerNonlinearity(),
    ExpTailNonlinearity(order=5),
    TruncatedNonlinearity(base=PowerNonlinearity(p=7.0), M=2.0, q=5.0),
]


def test_power_values():
    nl = PowerNonlinearity(p=5.0)
    assert nl.f(2.0) == pytest.approx(16.0)
    assert nl.F(2.0) == pytest.approx(6.4)


def test_log_power_values():
    nl = LogPowerNonlinearity()
    assert nl.F(1.0) == pytest.approx(np.log(2.0))
    assert nl.f(1.0) == pytest.approx(4.0 * np.log(2.0) + 0.5)


@pytest.mark.parametrize("nl", SMOOTH_FAMILIES + [ZeroNonlinearity()], ids=lambda nl: nl.family.value)
def test_zero_extension(nl):
    assert nl.f(0.0) == 0.0
    assert nl.F(0.0) == 0.0
    assert nl.f(-1.0) == 0.0
    assert nl.F(-3.0) == 0.0
    assert np.all(nl.f(np.array([-2.0, -0.5])) == 0.0)


@pytest.mark.parametrize("nl", SMOOTH_FAMILIES, ids=lambda nl: nl.family.value)
def test_primitive_consistent_second_order(nl):
    s = np.array([0.3, 0.9, 1.5, 3.0])

    def defect(h):
        return np.abs((nl.F(s + h) - nl.F(s - h)) / (2.0 * h) - nl.f(s))

    coarse, fine = defect(1e-2), defect(5e-3)
    assert np.all(coarse / fine > 3.5)


def test_exp_tail_small_s_behaves_like_power():
    nl = ExpTailNonlinearity(order=5)
    s = 1e-2
    assert nl.f(s) == pytest.approx(s ** 5 / 120.0, rel=1e-2)
    assert nl.F(s) == pytest.approx(s ** 6 / 720.0, rel=1e-2)


def test_sampled_table_exact_primitive():
    s = np.linspace(0.0, 4.0, 41)
    nl = SampledTableNonlinearity(s_table=s, f_table=s ** 2)

    assert nl.f(2.05) == pytest.approx(2.05 ** 2, rel=1e-2)
    # F is the exact primitive of the piecewise-linear interpolant
    x = 1.234
    assert (nl.F(x + 1e-4) - nl.F(x - 1e-4)) / 2e-4 == pytest.approx(nl.f(x), rel=1e-9)
    assert nl.F(4.0) == pytest.approx(64.0 / 3.0, rel=1e-2)


def test_sampled_table_out_of_range():
    s = np.linspace(0.0, 4.0, 41)
    nl = SampledTableNonlinearity(s_table=s, f_table=s ** 3)
    with pytest.raises(TableOutOfRangeError):
        nl.f(5.0)


def test_sampled_table_rejects_bad_nodes():
    with pytest.raises(NonlinearityError):
        SampledTableNonlinearity(s_table=np.array([0.0, 2.0, 1.0]), f_table=np.zeros(3))


def test_callable_primitive_matches_closed_form():
    nl = CallableNonlinearity(func=lambda s: s ** 4, s_max=4.0, knots=512)
    assert nl.F(2.0) == pytest.approx(6.4, rel=1e-8)
    # range grows on demand
    assert nl.F(10.0) == pytest.approx(2e4, rel=1e-8)
    assert nl.f(3.0) == pytest.approx(81.0)


def test_truncation_values():
    g = PowerNonlinearity(p=7.0)
    truncated = truncate_g(g, 2.0, 5.0)

    assert truncated.f(3.0) == pytest.approx(324.0)
    assert truncated.f(1.5) == g.f(1.5)
    assert truncated.f(-1.0) == 0.0
    assert truncated.F(3.0) == pytest.approx(g.F(2.0) + 4.0 * (3.0 ** 5 - 2.0 ** 5) / 5.0)


@pytest.mark.parametrize("q", [4.0, 6.5])
def test_truncation_rejects_q(q):
    with pytest.raises(InvalidTruncationError):
        truncate_g(PowerNonlinearity(p=7.0), 2.0, q)


def test_lambda0():
    assert lambda0_for(PowerNonlinearity(p=7.0), 2.0) == pytest.approx(1.0 / 128.0)
    with pytest.raises(LambdaUnconstrainedError):
        lambda0_for(ZeroNonlinearity(), 2.0)


def test_lambda_zero_reduces_to_f0():
    f0 = PowerNonlinearity(p=5.0)
    composed = compose_f_lambda_n(f0, PowerNonlinearity(p=7.0), 0.0, 4.0, 5.0)
    s = np.linspace(0.0, 20.0, 500)
    assert np.array_equal(composed.f(s), f0.f(s))


@pytest.mark.parametrize("M", [2.0, 4.0, 8.0])
def test_growth_bound_for_admissible_lambda(M):
    g = PowerNonlinearity(p=7.0)
    lam = lambda0_for(g, M)
    composed = compose_f_lambda_n(PowerNonlinearity(p=5.0), g, lam, M, 5.0)
    s = np.linspace(0.0, 50.0, 10_000)
    assert np.all(np.abs(composed.f(s)) <= 2.0 * s ** 4 * (1 + 1e-12))


def test_truncated_ratio_bounded_by_value_at_M():
    g = PowerNonlinearity(p=7.0)
    M, q = 4.0, 5.0
    truncated = truncate_g(g, M, q)
    s = np.linspace(1e-3, 3 * M, 2000)
    bound = g.f(M) / M ** (q - 1)
    assert np.all(truncated.f(s) / s ** (q - 1) <= bound * (1 + 1e-12))


def test_surrogate_coincides_below_M():
    f0, g = PowerNonlinearity(p=5.0), PowerNonlinearity(p=7.0)
    surrogate = compose_f_lambda_n(f0, g, 1e-3, 4.0, 5.0)
    s = np.linspace(0.0, 4.0, 400)
    assert np.array_equal(surrogate.f(s), surrogate.untruncated().f(s))


def test_compose_rejects_f0_above_growth_envelope():
    with pytest.raises(InvalidTruncationError):
        compose_f_lambda_n(SumPowersNonlinearity(q=5.0, p=5.0, lam=1.0), PowerNonlinearity(p=7.0), 0.0, 4.0, 5.0)


def test_build_nonlinearity_from_parameters():
    assert isinstance(build_nonlinearity("power", p=4.5), PowerNonlinearity)
    assert isinstance(build_nonlinearity("log-power"), LogPowerNonlinearity)
    with pytest.raises(NonlinearityError):
        build_nonlinearity("sum-powers", q=5.0)


def test_composed_describe_is_nested():
    composed = ComposedNonlinearity(f0=PowerNonlinearity(p=5.0), g=PowerNonlinearity(p=7.0), lam=0.5, q=5.0, M=4.0)
    description = composed.describe()
    assert description["g"] == {"family": "power", "p": 7.0}
    assert description["M"] == 4.0
