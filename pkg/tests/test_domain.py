import numpy as np
import pytest

from app.functional.domain import (
    build_grid,
    build_potential,
    inner_E,
    integrate,
    norm_D12_sq,
    norm_E_sq,
    norm_Lp,
    shift_field,
)
from app.models.errors import GridMismatchError, InvalidGridError, InvalidPotentialError
from app.models.main_models import Field, GridKind
from app.other.seeds import random_smooth_field


def test_radial_grid_layout():
    grid = build_grid("radial-ball", 20.0, 2000)

    assert grid.kind is GridKind.RADIAL_BALL
    assert grid.node_count == 2000
    assert grid.spacing == pytest.approx(0.01)
    assert np.all(grid.quad_weights > 0)
    assert grid.coords[0] == pytest.approx(0.005)


def test_cube_grid_layout(cube_grid):
    assert cube_grid.node_count == 16 ** 3
    assert cube_grid.shape == (16, 16, 16)
    assert np.all(np.diff(cube_grid.stiffness.indptr) == 7)
    assert not np.any(cube_grid.boundary_load)


@pytest.mark.parametrize("extent, n_points", [(0.0, 16), (-1.0, 16), (5.0, 4)])
def test_invalid_grid_rejected(extent, n_points):
    with pytest.raises(InvalidGridError):
        build_grid("radial-ball", extent, n_points)


@pytest.mark.parametrize("grid_name", ["radial_grid", "cube_grid"])
def test_laplacian_symmetric_in_weighted_product(request, grid_name, rng):
    grid = request.getfixturevalue(grid_name)
    u = random_smooth_field(grid, rng, signed=True)
    v = random_smooth_field(grid, rng, signed=True)
    w = grid.quad_weights
    lap = grid.laplacian

    left = np.dot(w * (lap @ u), v)
    right = np.dot(w * (lap @ v), u)
    scale = np.abs(w * (lap @ u)) @ np.abs(v) + np.abs(w * (lap @ v)) @ np.abs(u)
    assert abs(left - right) <= 1e-12 * scale


@pytest.mark.parametrize("grid_name", ["radial_grid", "cube_grid"])
def test_negative_laplacian_is_m_matrix(request, grid_name):
    grid = request.getfixturevalue(grid_name)
    operator = (-grid.laplacian).tocoo()
    off_diagonal = operator.row != operator.col

    assert np.all(operator.diagonal() > 0)
    assert np.all(operator.data[off_diagonal] <= 0)


def test_cube_volume(cube_grid):
    ones = np.ones(cube_grid.node_count)
    assert integrate(cube_grid, ones) == pytest.approx((2.0 * np.pi) ** 3, rel=1e-13)


def test_radial_volume_second_order():
    errors = []
    for n in (100, 200, 400):
        grid = build_grid("radial-ball", 5.0, n)
        exact = 4.0 / 3.0 * np.pi * 5.0 ** 3
        errors.append(abs(integrate(grid, np.ones(n)) - exact) / exact)

    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders > 1.9)


def test_integrate_zero(radial_grid):
    assert integrate(radial_grid, np.zeros(radial_grid.node_count)) == 0.0


def test_constant_field_energy_norm_on_cube(cube_grid):
    V = build_potential(cube_grid, 2.0)
    a = 1.5
    u = np.full(cube_grid.node_count, a)
    expected = 2.0 * a ** 2 * (2.0 * np.pi) ** 3

    assert norm_E_sq(cube_grid, V, u) == pytest.approx(expected, rel=1e-12)
    assert abs(norm_D12_sq(cube_grid, u)) <= 1e-12 * expected


def test_energy_norm_dominates_weighted_l2(radial_grid, rng):
    alpha = 0.7
    V = build_potential(radial_grid, alpha)
    for _ in range(5):
        u = random_smooth_field(radial_grid, rng, signed=True)
        assert norm_E_sq(radial_grid, V, u) >= alpha * norm_Lp(radial_grid, u, 2) ** 2 * (1 - 1e-12)


def test_nonpositive_potential_rejected(radial_grid):
    with pytest.raises(InvalidPotentialError):
        norm_E_sq(radial_grid, np.zeros(radial_grid.node_count), np.ones(radial_grid.node_count))


def test_stiffness_polarization(radial_grid, rng):
    u = random_smooth_field(radial_grid, rng, signed=True)
    v = random_smooth_field(radial_grid, rng, signed=True)
    bilinear = v @ (radial_grid.stiffness @ u)
    polarized = 0.25 * (norm_D12_sq(radial_grid, u + v) - norm_D12_sq(radial_grid, u - v))
    assert bilinear == pytest.approx(polarized, rel=1e-10, abs=1e-12)


def test_energy_inner_product_polarizes(radial_grid, radial_V, rng):
    u = random_smooth_field(radial_grid, rng, signed=True)
    v = random_smooth_field(radial_grid, rng, signed=True)
    polarized = 0.25 * (norm_E_sq(radial_grid, radial_V, u + v) - norm_E_sq(radial_grid, radial_V, u - v))
    assert inner_E(radial_grid, radial_V, u, v) == pytest.approx(polarized, rel=1e-10, abs=1e-12)
    assert inner_E(radial_grid, radial_V, u, v) == pytest.approx(inner_E(radial_grid, radial_V, v, u), rel=1e-12)


def test_lattice_shift_preserves_integral(cube_grid, rng):
    u = random_smooth_field(cube_grid, rng)
    shifted = shift_field(cube_grid, u, (3, 0, 5))

    assert integrate(cube_grid, shifted) == pytest.approx(integrate(cube_grid, u), rel=1e-13)
    assert norm_D12_sq(cube_grid, shifted) == pytest.approx(norm_D12_sq(cube_grid, u), rel=1e-12)


def test_shift_moves_values(small_cube):
    values = np.zeros(small_cube.node_count)
    values[0] = 1.0
    shifted = shift_field(small_cube, values, (1, 0, 0)).values.reshape(small_cube.shape)
    # ũ(x) = u(x + h e_1): the spike moves to index -1 along the first axis
    assert shifted[-1, 0, 0] == 1.0


def test_field_rejects_wrong_length(radial_grid):
    with pytest.raises(GridMismatchError):
        Field(grid=radial_grid, values=np.ones(3))


def test_periodic_potential_lattice_invariant(small_cube):
    V = build_potential(small_cube, 1.0, amplitude=0.5, cells=2)
    shifted = shift_field(small_cube, V, (4, 0, 4))

    assert V.values.min() >= 1.0
    assert np.allclose(shifted.values, V.values, rtol=0, atol=1e-14)
