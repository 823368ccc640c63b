import numpy as np

from app.functional.domain import make_field
from app.models.main_models import DomainGrid, Field, GridKind


def _distance_sq(grid: DomainGrid, center) -> np.ndarray:
    if grid.kind is GridKind.RADIAL_BALL:
        return (grid.coords - float(np.atleast_1d(center)[0])) ** 2
    side = grid.extent
    offset = grid.coords - np.asarray(center, dtype=float)
    offset = (offset + 0.5 * side) % side - 0.5 * side
    return np.sum(offset ** 2, axis=1)


def gaussian_bump(grid: DomainGrid, center, width: float, amplitude: float = 1.0) -> np.ndarray:
    """Gaussian profile; periodic distance on the cube, shells about `center` on the ball."""
    return amplitude * np.exp(-_distance_sq(grid, center) / (2.0 * width ** 2))


def domain_center(grid: DomainGrid):
    if grid.kind is GridKind.RADIAL_BALL:
        return 0.0
    return np.full(3, grid.n_points // 2 * grid.spacing)


def centered_bumps(grid: DomainGrid, count: int) -> list[np.ndarray]:
    """Unit-height bumps at the domain center, widths log-spaced from two cells to a quarter of the extent."""
    widths = np.geomspace(2.0 * grid.spacing, grid.extent / 4.0, count)
    center = domain_center(grid)
    return [gaussian_bump(grid, center, width) for width in widths]


def default_seeds(grid: DomainGrid, count: int, rng: np.random.Generator) -> list[Field]:
    if grid.kind is GridKind.RADIAL_BALL:
        widths = np.linspace(1.0, 2.5, count)
        return [make_field(grid, gaussian_bump(grid, 0.0, width, rng.uniform(0.5, 2.0))) for width in widths]

    seeds = []
    for _ in range(count):
        center = rng.uniform(0.0, grid.extent, 3)
        width = grid.extent / 8.0 * rng.uniform(0.8, 1.2)
        seeds.append(make_field(grid, gaussian_bump(grid, center, width, rng.uniform(0.5, 2.0))))
    return seeds


def random_smooth_field(
        grid: DomainGrid,
        rng: np.random.Generator,
        bumps: int = 3,
        *,
        signed: bool = False,
        max_amplitude: float = 1.0,
        width_range: tuple[float, float] = (0.5, 1.5),
) -> np.ndarray:
    values = np.zeros(grid.node_count)
    reach = grid.extent / 4.0 if grid.kind is GridKind.RADIAL_BALL else grid.extent
    for _ in range(bumps):
        if grid.kind is GridKind.RADIAL_BALL:
            center = rng.uniform(0.0, reach)
        else:
            center = rng.uniform(0.0, reach, 3)
        amplitude = rng.uniform(-max_amplitude if signed else 0.0, max_amplitude)
        values += gaussian_bump(grid, center, rng.uniform(*width_range), amplitude)
    return values


def random_directions(grid: DomainGrid, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    directions = []
    while len(directions) < count:
        candidate = random_smooth_field(grid, rng, bumps=int(rng.integers(1, 4)))
        if np.any(candidate > 0):
            directions.append(candidate)
    return directions
