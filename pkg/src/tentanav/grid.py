"""Robot-centered 3D voxel grid with linear-index addressing.

The grid is fixed to the robot frame: an array A_p of voxel-center positions
and an array A_rho of occupancy beliefs, both addressed by one linear index.
Index layout is x-fastest: o = o_x + o_y*n_x + o_z*n_x*n_y, where each axis
index is n_axis/2 + floor(coord/d_v). Occupancy is re-queried from the
world-frame local map every cycle, so the grid itself never persists
world-frame state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Pose
from .localmap import OccupancyMap

# Refuse to allocate grids that cannot be indexed with int64 positions.
_MAX_VOXELS = 1 << 31


@dataclass(frozen=True)
class GridConfig:
    """Voxel edge length and per-axis voxel counts.

    Counts must be positive and even: the robot sits at the grid center and
    an odd count would leave a half-voxel offset with no defined owner.
    """

    d_v: float
    n_v_x: int
    n_v_y: int
    n_v_z: int

    def __post_init__(self):
        if self.d_v <= 0:
            raise ValueError(f"voxel dimension d_v must be > 0, got {self.d_v}")
        for name in ("n_v_x", "n_v_y", "n_v_z"):
            n = getattr(self, name)
            if n < 1:
                raise ValueError(f"{name} must be >= 1, got {n}")
            if n % 2 != 0:
                raise ValueError(f"{name} must be even, got {n} (the grid is centered on the robot)")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.n_v_x, self.n_v_y, self.n_v_z)

    @property
    def total_voxels(self) -> int:
        return self.n_v_x * self.n_v_y * self.n_v_z

    @property
    def extents(self) -> tuple[float, float, float]:
        """Grid width/length/height in meters: d_v * n per axis."""
        return (self.d_v * self.n_v_x, self.d_v * self.n_v_y, self.d_v * self.n_v_z)


def linear_index(p, cfg: GridConfig) -> Optional[int]:
    """Linear index of the voxel containing robot-frame position `p`.

    Returns None when the position falls outside the grid. Points exactly on
    an upper cell boundary belong to the next cell (floor semantics).
    """
    ox = cfg.n_v_x // 2 + math.floor(p[0] / cfg.d_v)
    if not 0 <= ox < cfg.n_v_x:
        return None
    oy = cfg.n_v_y // 2 + math.floor(p[1] / cfg.d_v)
    if not 0 <= oy < cfg.n_v_y:
        return None
    oz = cfg.n_v_z // 2 + math.floor(p[2] / cfg.d_v)
    if not 0 <= oz < cfg.n_v_z:
        return None
    return ox + oy * cfg.n_v_x + oz * cfg.n_v_x * cfg.n_v_y


def linear_indices(points: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Vectorized linear_index for an (N, 3) array; -1 marks out-of-grid points."""
    points = np.asarray(points, dtype=float)
    cells = np.floor(points / cfg.d_v).astype(np.int64)
    cells += np.array([cfg.n_v_x // 2, cfg.n_v_y // 2, cfg.n_v_z // 2])
    inside = (
        (cells[:, 0] >= 0)
        & (cells[:, 0] < cfg.n_v_x)
        & (cells[:, 1] >= 0)
        & (cells[:, 1] < cfg.n_v_y)
        & (cells[:, 2] >= 0)
        & (cells[:, 2] < cfg.n_v_z)
    )
    out = cells[:, 0] + cells[:, 1] * cfg.n_v_x + cells[:, 2] * (cfg.n_v_x * cfg.n_v_y)
    out[~inside] = -1
    return out


def voxel_center(o: int, cfg: GridConfig) -> np.ndarray:
    """Robot-frame center position of the voxel at linear index `o`."""
    if not 0 <= o < cfg.total_voxels:
        raise IndexError(f"voxel index {o} out of range [0, {cfg.total_voxels})")
    ox = o % cfg.n_v_x
    oy = (o // cfg.n_v_x) % cfg.n_v_y
    oz = o // (cfg.n_v_x * cfg.n_v_y)
    half = 0.5 * cfg.d_v
    return np.array(
        [
            cfg.d_v * (ox - cfg.n_v_x // 2) + half,
            cfg.d_v * (oy - cfg.n_v_y // 2) + half,
            cfg.d_v * (oz - cfg.n_v_z // 2) + half,
        ]
    )


def voxel_centers(indices: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Vectorized voxel_center for an array of linear indices."""
    o = np.asarray(indices, dtype=np.int64)
    ox = o % cfg.n_v_x
    oy = (o // cfg.n_v_x) % cfg.n_v_y
    oz = o // (cfg.n_v_x * cfg.n_v_y)
    half = 0.5 * cfg.d_v
    return np.column_stack(
        (
            cfg.d_v * (ox - cfg.n_v_x // 2) + half,
            cfg.d_v * (oy - cfg.n_v_y // 2) + half,
            cfg.d_v * (oz - cfg.n_v_z // 2) + half,
        )
    )


@dataclass
class RobotCenteredGrid:
    """Voxel-center positions (A_p) and occupancy beliefs (A_rho).

    Single-writer: one navigation loop refreshes A_rho; concurrent read-only
    evaluation over a refreshed grid is fine.
    """

    config: GridConfig
    A_p: np.ndarray = field(repr=False)
    A_rho: np.ndarray = field(repr=False)


def init_grid(cfg: GridConfig) -> RobotCenteredGrid:
    """Allocate the position and occupancy arrays; beliefs start at zero."""
    if cfg.total_voxels > _MAX_VOXELS:
        raise MemoryError(f"grid of {cfg.total_voxels} voxels exceeds the supported size")
    half = 0.5 * cfg.d_v
    cx = cfg.d_v * (np.arange(cfg.n_v_x) - cfg.n_v_x // 2) + half
    cy = cfg.d_v * (np.arange(cfg.n_v_y) - cfg.n_v_y // 2) + half
    cz = cfg.d_v * (np.arange(cfg.n_v_z) - cfg.n_v_z // 2) + half
    # z-major meshgrid + C-order ravel makes x the fastest axis, matching the index layout
    zz, yy, xx = np.meshgrid(cz, cy, cx, indexing="ij")
    A_p = np.column_stack((xx.ravel(), yy.ravel(), zz.ravel()))
    A_rho = np.zeros(cfg.total_voxels)
    return RobotCenteredGrid(config=cfg, A_p=A_p, A_rho=A_rho)


def refresh_occupancy(
    grid: RobotCenteredGrid,
    robot_pose: Pose,
    occ_map: OccupancyMap,
    indices: Optional[np.ndarray] = None,
) -> RobotCenteredGrid:
    """Pull occupancy beliefs from the local map into A_rho.

    Each requested voxel center is transformed into the world frame and the
    map queried there; unobserved cells read 0 (unknown space is treated as
    free). `indices` limits the refresh to the voxels actually read this
    cycle; None refreshes the whole grid.
    """
    if indices is None:
        world = robot_pose.transform(grid.A_p)
        grid.A_rho[:] = occ_map.query_many(world)
    else:
        world = robot_pose.transform(grid.A_p[indices])
        grid.A_rho[indices] = occ_map.query_many(world)
    return grid
