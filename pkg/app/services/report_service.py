import json
import logging
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from app.models.errors import InvalidProfileError
from app.models.main_models import DomainGrid, Field, GridKind, TraceEntry

logger = logging.getLogger(__name__)

TRACE_HEADER = "iter,I,cerami,norm_E"
NUMBER_FORMAT = "%.17g"


def flatten(payload: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in payload.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, Mapping):
            flat.update(flatten(value, name))
        elif isinstance(value, Enum):
            flat[name] = value.value
        elif isinstance(value, (np.floating, np.integer)):
            flat[name] = value.item()
        elif isinstance(value, float) and not np.isfinite(value):
            flat[name] = str(value)
        else:
            flat[name] = value
    return flat


def write_report(path: Path, payload: Mapping[str, Any]) -> Path:
    report = flatten(payload)
    report["timestamp"] = datetime.now(timezone.utc).isoformat()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, sort_keys=True, indent=2), encoding="utf-8")
    logger.info(f"Report written to {path}")
    return path


def write_trace(path: Path, trace: Sequence[TraceEntry]) -> Path:
    rows = np.array([[entry.iteration, entry.I, entry.cerami, entry.norm_E] for entry in trace], dtype=float)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, rows.reshape(-1, 4), delimiter=",", header=TRACE_HEADER, comments="", fmt=NUMBER_FORMAT)
    return path


def profile_header(grid: DomainGrid) -> list[str]:
    if grid.kind is GridKind.RADIAL_BALL:
        return ["r", "u", "phi"]
    return ["x", "y", "z", "u", "phi"]


def write_profile(path: Path, grid: DomainGrid, u: Field, phi: Optional[Field] = None) -> Path:
    coords = grid.coords.reshape(grid.node_count, -1)
    phi_values = phi.values if phi is not None else np.zeros(grid.node_count)
    table = np.column_stack([coords, u.values, phi_values])
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, delimiter=",", header=",".join(profile_header(grid)), comments="", fmt=NUMBER_FORMAT)
    return path


def read_profile(path: str, grid: DomainGrid) -> tuple[Field, Field]:
    profile_path = Path(path)
    if not profile_path.is_file():
        raise InvalidProfileError(path, "file not found")
    with profile_path.open(encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    expected = profile_header(grid)
    if header != expected:
        raise InvalidProfileError(path, f"header {header} does not match {expected}")

    table = np.loadtxt(profile_path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape != (grid.node_count, len(expected)):
        raise InvalidProfileError(path, f"expected {grid.node_count} rows of {len(expected)} columns, got {table.shape}")
    coords = grid.coords.reshape(grid.node_count, -1)
    if not np.allclose(table[:, :coords.shape[1]], coords, rtol=1e-12, atol=1e-12 * grid.extent):
        raise InvalidProfileError(path, "node coordinates do not match the configured grid")
    u = Field(grid=grid, values=table[:, -2])
    phi = Field(grid=grid, values=table[:, -1])
    return u, phi


def read_table(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Two-column `s,f` CSV for the sampled-table nonlinearity."""
    table_path = Path(path)
    if not table_path.is_file():
        raise InvalidProfileError(path, "file not found")
    table = np.loadtxt(table_path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != 2:
        raise InvalidProfileError(path, "expected two columns s,f")
    return table[:, 0], table[:, 1]


def read_values(path: str, grid: DomainGrid) -> np.ndarray:
    """Single-column per-node values, used for a tabulated potential."""
    table_path = Path(path)
    if not table_path.is_file():
        raise InvalidProfileError(path, "file not found")
    values = np.loadtxt(table_path, delimiter=",", skiprows=1, ndmin=2)[:, -1]
    if values.shape[0] != grid.node_count:
        raise InvalidProfileError(path, f"expected {grid.node_count} values, got {values.shape[0]}")
    return values
