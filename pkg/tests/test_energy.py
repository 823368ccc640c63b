import numpy as np
import pytest

from app.functional.domain import build_grid, build_potential, make_field, shift_field
from app.functional.energy import (
    energy,
    energy_level,
    evaluate_state,
    full_functional,
    gradient_E,
    gradient_strong,
    level_bound_check,
    nehari_value,
)
from app.functional.nonlinearity import LogPowerNonlinearity, PowerNonlinearity
from app.functional.reduction import solve_phi
from app.other.seeds import gaussian_bump, random_smooth_field


@pytest.fixture(scope="module")
def ball():
    return build_grid("radial-ball", 8.0, 200)


@pytest.fixture(scope="module")
def ball_V(ball):
    return build_potential(ball, 1.0)


def test_zero_field(ball, ball_V, quintic):
    state = evaluate_state(ball, ball_V, 1.0, quintic, np.zeros(ball.node_count), method="direct")

    assert state.report.I == 0.0
    assert state.report.nehari == 0.0
    assert state.report.gradient_norm_E == 0.0
    assert not np.any(state.residual)


def test_constant_field_on_cube(cube_grid, quintic):
    V0, omega, a = 2.0, 0.5, 1.2
    V = build_potential(cube_grid, V0)
    volume = (2.0 * np.pi) ** 3
    u = np.full(cube_grid.node_count, a)

    report = energy(cube_grid, V, omega, quintic, u, method="direct")
    expected_level = volume * (0.5 * (V0 + omega ** 2) * a ** 2 - a ** 5 / 5.0)
    expected_nehari = volume * ((V0 + omega ** 2) * a ** 2 - a ** 5)

    assert report.I == pytest.approx(expected_level, rel=1e-10)
    assert report.nehari == pytest.approx(expected_nehari, rel=1e-10)
    strong = gradient_strong(cube_grid, V, omega, quintic, u).values
    assert np.allclose(strong, (V0 + omega ** 2) * a - a ** 4, rtol=1e-10)


def test_bookkeeping_identity_exact(ball, ball_V, rng):
    nl = LogPowerNonlinearity()
    u = random_smooth_field(ball, rng, max_amplitude=2.0)
    report = energy(ball, ball_V, 1.0, nl, u, method="direct")

    assert report.I == 0.5 * report.norm_E_sq + report.coupling - report.potential_term
    assert report.coupling >= 0


@pytest.mark.parametrize("grid_name", ["ball", "small_cube"])
def test_level_identity_on_random_fields(request, grid_name, rng, quintic):
    grid = request.getfixturevalue(grid_name)
    V = build_potential(grid, 1.0)
    for _ in range(20):
        u = np.abs(random_smooth_field(grid, rng, max_amplitude=2.0))
        report = energy(grid, V, 0.8, quintic, u, method="direct")
        verdict = level_bound_check(report, report.I)

        assert "identity" not in verdict.failed
        assert report.H_integral >= 0


@pytest.mark.slow
def test_level_identity_on_large_corpus(ball, ball_V, rng):
    for nl in (PowerNonlinearity(p=5.0), LogPowerNonlinearity()):
        for _ in range(100):
            u = np.abs(random_smooth_field(ball, rng, max_amplitude=2.0))
            report = energy(ball, ball_V, 1.2, nl, u, method="direct")
            assert "identity" not in level_bound_check(report, report.I).failed


@pytest.mark.parametrize("nl", [PowerNonlinearity(p=5.0), LogPowerNonlinearity()], ids=["power", "log-power"])
def test_gradient_matches_finite_differences(ball, ball_V, rng, nl):
    omega = 1.0
    steps = np.array([1e-2, 5e-3, 2.5e-3])
    for _ in range(20):
        u = random_smooth_field(ball, rng, bumps=2, max_amplitude=2.0)
        v = random_smooth_field(ball, rng)
        v /= v.max()
        state = evaluate_state(ball, ball_V, omega, nl, u, with_gradient=False, method="direct")
        exact = float(np.dot(state.residual, v))

        defects = []
        for h in steps:
            plus = energy_level(ball, ball_V, omega, nl, u + h * v, method="direct")
            minus = energy_level(ball, ball_V, omega, nl, u - h * v, method="direct")
            defects.append(abs((plus - minus) / (2 * h) - exact))

        order = np.polyfit(np.log(steps), np.log(defects), 1)[0]
        assert order >= 1.9


def test_sobolev_gradient_represents_residual(ball, ball_V, quintic):
    u = gaussian_bump(ball, 0.0, 1.5, 1.0)
    strong = gradient_strong(ball, ball_V, 1.0, quintic, u, method="direct")
    representative = gradient_E(ball, ball_V, strong, method="direct").values
    state = evaluate_state(ball, ball_V, 1.0, quintic, u, method="direct")

    assert np.allclose(representative, state.gradient, rtol=1e-10, atol=1e-12)
    assert state.report.gradient_norm_E == pytest.approx(np.sqrt(state.gradient @ state.residual))


def test_nehari_matches_residual_pairing(ball, ball_V, quintic):
    u = gaussian_bump(ball, 0.0, 1.5, 1.0)
    state = evaluate_state(ball, ball_V, 1.0, quintic, u, with_gradient=False, method="direct")
    assert nehari_value(ball, ball_V, 1.0, quintic, u, method="direct") == pytest.approx(
        float(state.residual @ u), rel=1e-10
    )


def test_lattice_translation_invariance(small_cube, periodic_V, quintic, rng):
    u = np.abs(random_smooth_field(small_cube, rng))
    shifted = shift_field(small_cube, u, (4, 0, 4))

    original = energy(small_cube, periodic_V, 1.0, quintic, u, method="direct")
    moved = energy(small_cube, periodic_V, 1.0, quintic, shifted, method="direct")
    assert moved.I == pytest.approx(original.I, rel=1e-12)
    assert moved.nehari == pytest.approx(original.nehari, rel=1e-12)


def test_two_field_action_agrees_at_constraint(ball, ball_V, quintic):
    u = make_field(ball, gaussian_bump(ball, 0.0, 1.2, 1.5))
    phi = solve_phi(ball, u, 1.0, method="direct").phi
    level = energy_level(ball, ball_V, 1.0, quintic, u, method="direct")
    assert full_functional(ball, ball_V, 1.0, quintic, u, phi) == pytest.approx(level, rel=1e-9)


def test_level_bound_flags_negative_h(ball, ball_V):
    cubic = PowerNonlinearity(p=3.0)
    u = gaussian_bump(ball, 0.0, 1.5, 1.0)
    report = energy(ball, ball_V, 1.0, cubic, u, method="direct")
    verdict = level_bound_check(report, report.I)

    assert report.H_integral < 0
    assert "h_nonnegative" in verdict.failed
    assert "identity" not in verdict.failed


def test_level_bound_zero_report_passes(ball, ball_V, quintic):
    report = energy(ball, ball_V, 1.0, quintic, np.zeros(ball.node_count), method="direct")
    assert level_bound_check(report, 0.0).passed
