import hashlib
import logging
from typing import Union

import numpy as np
import scipy.sparse as sparse

from app.models.errors import GridMismatchError, InvalidGridError, InvalidPotentialError
from app.models.main_models import DomainGrid, Field, GridKind

logger = logging.getLogger(__name__)

MIN_POINTS = 8

FieldLike = Union[Field, np.ndarray]


def build_grid(kind: Union[GridKind, str], extent: float, n_points: int) -> DomainGrid:
    kind = GridKind(kind)
    if not np.isfinite(extent) or extent <= 0:
        raise InvalidGridError(f"Domain extent must be positive, got {extent}")
    if int(n_points) != n_points or n_points < MIN_POINTS:
        raise InvalidGridError(f"Grid needs at least {MIN_POINTS} points per direction, got {n_points}")

    if kind is GridKind.RADIAL_BALL:
        grid = _radial_grid(float(extent), int(n_points))
    else:
        grid = _cube_grid(float(extent), int(n_points))

    logger.debug(f"Built {kind.value} grid: extent={extent}, n={n_points}, nodes={grid.node_count}")
    return grid


def _radial_grid(radius: float, n: int) -> DomainGrid:
    h = radius / n
    r = (np.arange(n) + 0.5) * h
    faces = np.arange(1, n + 1) * h
    area = 4.0 * np.pi * faces ** 2

    # face at r = 0 has zero area; the outer face sees the Dirichlet value at half a cell
    interior = area[:-1] / h
    boundary = area[-1] / (0.5 * h)

    diagonal = np.zeros(n)
    diagonal[:-1] += interior
    diagonal[1:] += interior
    diagonal[-1] += boundary
    stiffness = sparse.diags([-interior, diagonal, -interior], [-1, 0, 1], format="csr")

    load = np.zeros(n)
    load[-1] = boundary

    return DomainGrid(
        kind=GridKind.RADIAL_BALL,
        extent=radius,
        n_points=n,
        spacing=h,
        coords=r,
        quad_weights=4.0 * np.pi * r ** 2 * h,
        stiffness=stiffness,
        boundary_load=load,
    )


def _periodic_second_difference(n: int) -> sparse.csr_matrix:
    ones = np.ones(n - 1)
    return sparse.diags(
        [-ones, 2.0 * np.ones(n), -ones, [-1.0], [-1.0]],
        [-1, 0, 1, n - 1, -(n - 1)],
        format="csr",
    )


def _cube_grid(side: float, n: int) -> DomainGrid:
    h = side / n
    second = _periodic_second_difference(n)
    eye = sparse.identity(n, format="csr")
    graph = (
        sparse.kron(sparse.kron(second, eye), eye)
        + sparse.kron(sparse.kron(eye, second), eye)
        + sparse.kron(sparse.kron(eye, eye), second)
    )
    coords = np.indices((n, n, n)).reshape(3, -1).T * h

    return DomainGrid(
        kind=GridKind.PERIODIC_CUBE,
        extent=side,
        n_points=n,
        spacing=h,
        coords=coords,
        quad_weights=np.full(n ** 3, h ** 3),
        stiffness=(h * graph).tocsr(),
        boundary_load=np.zeros(n ** 3),
    )


def values_of(grid: DomainGrid, field: FieldLike) -> np.ndarray:
    if isinstance(field, Field):
        if field.grid is not grid and field.grid.key != grid.key:
            raise GridMismatchError(grid.node_count, field.grid.node_count)
        return field.values
    values = np.asarray(field, dtype=float).ravel()
    if values.shape[0] != grid.node_count:
        raise GridMismatchError(grid.node_count, values.shape[0])
    return values


def make_field(grid: DomainGrid, values) -> Field:
    return Field(grid=grid, values=np.asarray(values, dtype=float))


def zeros(grid: DomainGrid) -> Field:
    return make_field(grid, np.zeros(grid.node_count))


def potential_values(grid: DomainGrid, V: FieldLike) -> np.ndarray:
    values = values_of(grid, V)
    minimum = float(values.min())
    if not minimum > 0:
        raise InvalidPotentialError(minimum)
    return values


def integrate(grid: DomainGrid, field: FieldLike) -> float:
    return float(np.dot(grid.quad_weights, values_of(grid, field)))


def norm_D12_sq(grid: DomainGrid, u: FieldLike) -> float:
    values = values_of(grid, u)
    return float(values @ (grid.stiffness @ values))


def norm_E_sq(grid: DomainGrid, V: FieldLike, u: FieldLike) -> float:
    v = potential_values(grid, V)
    values = values_of(grid, u)
    return norm_D12_sq(grid, values) + float(np.dot(grid.quad_weights, v * values ** 2))


def inner_E(grid: DomainGrid, V: FieldLike, u: FieldLike, w: FieldLike) -> float:
    v = potential_values(grid, V)
    a = values_of(grid, u)
    b = values_of(grid, w)
    return float(b @ (grid.stiffness @ a)) + float(np.dot(grid.quad_weights, v * a * b))


def norm_Lp(grid: DomainGrid, u: FieldLike, p: float) -> float:
    if p < 1:
        raise InvalidGridError(f"L^p norm needs p >= 1, got {p}")
    values = np.abs(values_of(grid, u))
    return float(np.dot(grid.quad_weights, values ** p)) ** (1.0 / p)


def energy_matrix(grid: DomainGrid, V: FieldLike) -> sparse.csr_matrix:
    """K + W·diag(V), the Gram matrix of the E inner product."""
    v = potential_values(grid, V)
    cache = grid.cache()
    key = ("energy_matrix", potential_digest(v))
    if key not in cache:
        cache[key] = (grid.stiffness + sparse.diags(grid.quad_weights * v)).tocsr()
    return cache[key]


def potential_digest(values: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(values).tobytes()).hexdigest()


def shift_field(grid: DomainGrid, u: FieldLike, shift) -> Field:
    """ũ(x) = u(x + shift·h) on the periodic cube, shift in whole nodes."""
    values = values_of(grid, u)
    if grid.kind is not GridKind.PERIODIC_CUBE:
        raise InvalidGridError("Lattice shifts are only defined on the periodic cube")
    offsets = tuple(-int(s) for s in shift)
    rolled = np.roll(values.reshape(grid.shape), offsets, axis=(0, 1, 2))
    return make_field(grid, rolled.ravel())


def build_potential(grid: DomainGrid, v0: float, amplitude: float = 0.0, cells: int = 1) -> Field:
    """Constant V₀, or on the cube V₀ + A·(1/3)Σ sin²(π·cells·x_j/L)."""
    if amplitude == 0:
        values = np.full(grid.node_count, float(v0))
    elif grid.kind is GridKind.PERIODIC_CUBE:
        if cells < 1 or grid.n_points % cells:
            raise InvalidGridError(f"{cells} potential cells do not divide {grid.n_points} nodes")
        phase = np.pi * cells * grid.coords / grid.extent
        values = v0 + amplitude * np.mean(np.sin(phase) ** 2, axis=1)
    else:
        raise InvalidGridError("A modulated potential needs the periodic cube")
    potential_values(grid, values)
    return make_field(grid, values)


def lattice_step(grid: DomainGrid, cells: int = 1) -> int:
    if grid.kind is not GridKind.PERIODIC_CUBE:
        return 0
    return max(1, grid.n_points // max(1, cells))
