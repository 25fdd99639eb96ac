"""Bounded world-frame occupancy map fed by belief-tagged point clouds.

Cells are cubes at a fixed resolution, stored sparsely in a hash map keyed by
packed integer coordinates. Updates are latest-write-wins per cell: the map
reflects spatial information, not arrival order. Unobserved space queries
as 0 (free).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .geometry import Pose

# Packed key layout: 21 bits per axis, offset to keep coordinates positive.
_SHIFT = 21
_OFFSET = 1 << 20
_AXIS_LIMIT = (1 << 21) - 1
_MASK = (1 << _SHIFT) - 1


@dataclass
class PointCloud:
    """Sensor-frame hit points with per-point occupancy beliefs in [0, 1]."""

    points: np.ndarray  # (N, 3) positions in the sensor frame, meters
    beliefs: np.ndarray  # (N,) beliefs in [0, 1]
    stamp: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.beliefs = np.asarray(self.beliefs, dtype=float).reshape(-1)
        if len(self.points) != len(self.beliefs):
            raise ValueError("points and beliefs must have equal length")
        if len(self.beliefs) and (self.beliefs.min() < 0.0 or self.beliefs.max() > 1.0):
            raise ValueError("beliefs must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.points)


def _pack(cells: np.ndarray) -> np.ndarray:
    q = cells.astype(np.int64) + _OFFSET
    if q.min() < 0 or q.max() > _AXIS_LIMIT:
        raise ValueError("point coordinates exceed the addressable map volume")
    return (q[:, 0] << (2 * _SHIFT)) | (q[:, 1] << _SHIFT) | q[:, 2]


def _unpack(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    qx = (keys >> (2 * _SHIFT)) - _OFFSET
    qy = ((keys >> _SHIFT) & _MASK) - _OFFSET
    qz = (keys & _MASK) - _OFFSET
    return np.column_stack((qx, qy, qz))


class OccupancyMap:
    """Sparse voxel map from quantized world coordinates to beliefs.

    Single-writer; snapshot reads during evaluation are fine as long as no
    insert runs concurrently.
    """

    def __init__(self, resolution: float, bound_radius: float):
        if resolution <= 0:
            raise ValueError("resolution must be > 0")
        if bound_radius <= 0:
            raise ValueError("bound_radius must be > 0")
        self.resolution = float(resolution)
        self.bound_radius = float(bound_radius)
        self._cells: dict[int, float] = {}
        self._keys: np.ndarray | None = None  # sorted key cache for batch queries
        self._vals: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._cells)

    def _quantize(self, points: np.ndarray) -> np.ndarray:
        return np.floor(np.asarray(points, dtype=float) / self.resolution).astype(np.int64)

    def _invalidate(self):
        self._keys = None
        self._vals = None

    def _ensure_cache(self):
        if self._keys is None:
            keys = np.fromiter(self._cells.keys(), dtype=np.int64, count=len(self._cells))
            vals = np.fromiter(self._cells.values(), dtype=float, count=len(self._cells))
            order = np.argsort(keys)
            self._keys = keys[order]
            self._vals = vals[order]

    def insert_cloud(self, cloud: PointCloud, sensor_pose: Pose) -> "OccupancyMap":
        """Add a point cloud taken at `sensor_pose` (the sensor-to-world transform).

        Each point is mapped into the world frame, quantized, and its cell
        belief overwritten with the incoming value.
        """
        if len(cloud) == 0:
            return self
        world = sensor_pose.transform(cloud.points)
        keys = _pack(self._quantize(world))
        self._cells.update(zip(keys.tolist(), cloud.beliefs.tolist()))
        self._invalidate()
        return self

    def query(self, world_p) -> float:
        """Belief of the cell containing `world_p`; 0 if unobserved."""
        key = int(_pack(self._quantize(np.asarray(world_p, dtype=float).reshape(1, 3)))[0])
        return self._cells.get(key, 0.0)

    def query_many(self, world_points: np.ndarray) -> np.ndarray:
        """Beliefs for an (N, 3) batch of world positions; 0 where unobserved."""
        world_points = np.asarray(world_points, dtype=float).reshape(-1, 3)
        out = np.zeros(len(world_points))
        if not self._cells or len(world_points) == 0:
            return out
        self._ensure_cache()
        keys = _pack(self._quantize(world_points))
        pos = np.searchsorted(self._keys, keys)
        valid = pos < len(self._keys)
        hit = valid.copy()
        hit[valid] = self._keys[pos[valid]] == keys[valid]
        out[hit] = self._vals[pos[hit]]
        return out

    def prune(self, center) -> "OccupancyMap":
        """Drop every cell whose center lies farther than bound_radius from `center`."""
        if not self._cells:
            return self
        self._ensure_cache()
        centers = (_unpack(self._keys) + 0.5) * self.resolution
        keep = np.linalg.norm(centers - np.asarray(center, dtype=float), axis=1) <= self.bound_radius
        if keep.all():
            return self
        self._cells = dict(zip(self._keys[keep].tolist(), self._vals[keep].tolist()))
        self._invalidate()
        return self

    def cell_centers(self) -> np.ndarray:
        """(N, 3) world positions of all stored cell centers, sorted by key."""
        if not self._cells:
            return np.empty((0, 3))
        self._ensure_cache()
        return (_unpack(self._keys) + 0.5) * self.resolution

    def dump_text(self, out: TextIO):
        """Debug dump: one 'x y z belief' line per cell, sorted, 6-decimal floats."""
        self._ensure_cache()
        if self._keys is None:
            return
        centers = (_unpack(self._keys) + 0.5) * self.resolution
        for (x, y, z), v in zip(centers, self._vals):
            out.write(f"{x:.6f} {y:.6f} {z:.6f} {v:.6f}\n")
