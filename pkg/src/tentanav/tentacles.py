"""Pre-sampled linear trajectories ("tentacles") and their voxel neighborhoods.

Tentacles are straight rays in the robot frame, one per (yaw, pitch) sample
of the angular coverage, carrying uniformly spaced navigation points. For
each tentacle, nearby grid voxels are classified offline into Priority
(within tau_P of the nearest navigation point) or Support (between tau_P and
tau_S) and given a distance-decayed occupancy weight. Everything here is
built once at initialization and read-only afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Sequence, TextIO

import numpy as np
from scipy.spatial.distance import cdist

from .grid import GridConfig, voxel_centers

RangeFn = Callable[[np.ndarray], float]

PRIORITY = 1
SUPPORT = 0


@dataclass(frozen=True)
class TentacleConfig:
    """Sampling geometry and voxel-classification thresholds.

    n_phi/n_theta count the yaw/pitch samples across the covered angles
    phi_cov/theta_cov (radians). Navigation points sit delta_d apart up to
    l_t_max. tau_P < tau_S split Priority from Support voxels; beta_max and
    alpha_beta shape the occupancy weights.
    """

    n_phi: int
    n_theta: int
    phi_cov: float
    theta_cov: float
    l_t_max: float
    delta_d: float
    tau_P: float
    tau_S: float
    beta_max: float = 1.0
    alpha_beta: float = 10.0

    def __post_init__(self):
        if self.n_phi < 1 or self.n_theta < 1:
            raise ValueError("n_phi and n_theta must be >= 1")
        if self.delta_d <= 0:
            raise ValueError("delta_d must be > 0")
        if self.l_t_max <= 0:
            raise ValueError("l_t_max must be > 0")
        if not 0 < self.tau_P < self.tau_S:
            raise ValueError(f"thresholds must satisfy tau_S > tau_P > 0, got tau_P={self.tau_P}, tau_S={self.tau_S}")
        if self.alpha_beta <= 0:
            raise ValueError("alpha_beta must be > 0")
        if self.beta_max <= 0:
            raise ValueError("beta_max must be > 0")

    @property
    def n_tentacles(self) -> int:
        return self.n_phi * self.n_theta


@dataclass(frozen=True)
class Tentacle:
    """One straight trajectory: direction angles, length, navigation points.

    nav_points[k-1] lies at arc length k*delta along the direction, for
    k = 1..n_s; the spacing `delta` is uniform and the last point sits at
    exactly `length`.
    """

    yaw: float
    pitch: float
    length: float
    delta: float
    nav_points: np.ndarray = field(repr=False)  # (n_s, 3), robot frame

    @property
    def n_s(self) -> int:
        return len(self.nav_points)

    @property
    def direction(self) -> np.ndarray:
        return _direction(self.yaw, self.pitch)

    @property
    def first_point(self) -> np.ndarray:
        return self.nav_points[0]


@dataclass(frozen=True)
class TentacleSet:
    tentacles: tuple[Tentacle, ...]

    def __len__(self) -> int:
        return len(self.tentacles)

    def __getitem__(self, j: int) -> Tentacle:
        return self.tentacles[j]

    def __iter__(self) -> Iterator[Tentacle]:
        return iter(self.tentacles)


class VoxelRecord(NamedTuple):
    """Classified grid voxel: linear index, occupancy weight, closest
    navigation-point index (1-based), and class flag (Priority=1/Support=0)."""

    o: int
    beta: float
    m: int
    c: int


def _direction(yaw: float, pitch: float) -> np.ndarray:
    """Unit direction in the robot frame; pitch > 0 points above the xy-plane."""
    cp = math.cos(pitch)
    return np.array([cp * math.cos(yaw), cp * math.sin(yaw), math.sin(pitch)])


def _angle_samples(cov: float, n: int) -> np.ndarray:
    # Inclusive of both coverage endpoints; a single sample degenerates to the midpoint.
    if n == 1:
        return np.array([0.0])
    return np.linspace(-cov / 2.0, cov / 2.0, n)


def constant_range(value: float) -> RangeFn:
    return lambda direction: value


def ellipsoid_range(rho_x: float, rho_y: float, rho_z: float) -> RangeFn:
    """Axis-aligned ellipsoid sensor range: distance to the ellipsoid surface
    along a unit direction."""

    def fn(direction: np.ndarray) -> float:
        d = np.asarray(direction, dtype=float)
        s = (d[0] / rho_x) ** 2 + (d[1] / rho_y) ** 2 + (d[2] / rho_z) ** 2
        return float(1.0 / math.sqrt(s))

    return fn


def sample_tentacles(cfg: TentacleConfig, sensor_range_fn: Optional[RangeFn] = None) -> TentacleSet:
    """Generate the full tentacle fan.

    Yaw samples span [-phi_cov/2, +phi_cov/2] inclusive, pitch likewise; the
    set is yaw-major (j = i_phi * n_theta + i_theta). Each tentacle's length
    is min(l_t_max, sensor range along its direction), and its navigation
    points are respaced to l_t / ceil(l_t / delta_d) so the spacing stays
    uniform with the last point at the tip.
    """
    if sensor_range_fn is None:
        sensor_range_fn = constant_range(cfg.l_t_max)
    yaws = _angle_samples(cfg.phi_cov, cfg.n_phi)
    pitches = _angle_samples(cfg.theta_cov, cfg.n_theta)
    tentacles = []
    for yaw in yaws:
        for pitch in pitches:
            direction = _direction(yaw, pitch)
            l_t = min(cfg.l_t_max, float(sensor_range_fn(direction)))
            if l_t <= 0:
                raise ValueError(f"sensor range along ({yaw}, {pitch}) is not positive")
            n_s = int(math.ceil(l_t / cfg.delta_d - 1e-12))
            delta = l_t / n_s
            arcs = delta * np.arange(1, n_s + 1)
            tentacles.append(
                Tentacle(
                    yaw=float(yaw),
                    pitch=float(pitch),
                    length=l_t,
                    delta=delta,
                    nav_points=arcs[:, None] * direction[None, :],
                )
            )
    return TentacleSet(tentacles=tuple(tentacles))


def occupancy_weight(c: int, d: float, cfg: TentacleConfig) -> float:
    """Occupancy weight of a classified voxel at distance `d` from its
    nearest navigation point: beta_max for Priority, beta_max/(alpha_beta*d)
    for Support."""
    if c == PRIORITY:
        return cfg.beta_max
    if d <= cfg.tau_P:
        raise ValueError(f"Support voxel at distance {d} <= tau_P={cfg.tau_P}: classification bug")
    return cfg.beta_max / (cfg.alpha_beta * d)


@dataclass
class TentacleVoxels:
    """Classified voxels of one tentacle, as parallel arrays."""

    o: np.ndarray  # int64 linear grid indices
    beta: np.ndarray  # float weights
    m: np.ndarray  # int32 closest nav-point index, 1-based
    c: np.ndarray  # int8 class flag, Priority=1 / Support=0

    def __len__(self) -> int:
        return len(self.o)

    def __iter__(self) -> Iterator[VoxelRecord]:
        for o, beta, m, c in zip(self.o, self.beta, self.m, self.c):
            yield VoxelRecord(int(o), float(beta), int(m), int(c))


@dataclass
class ClassifiedVoxels:
    """Per-tentacle Support/Priority voxel sets for a whole tentacle set."""

    per_tentacle: list[TentacleVoxels]

    def __len__(self) -> int:
        return len(self.per_tentacle)

    def records(self, j: int) -> TentacleVoxels:
        return self.per_tentacle[j]

    @property
    def total_records(self) -> int:
        return sum(len(v) for v in self.per_tentacle)

    def export_text(self, out: TextIO):
        """One 'j o beta m c' line per record, for external visualization."""
        for j, recs in enumerate(self.per_tentacle):
            for o, beta, m, c in zip(recs.o, recs.beta, recs.m, recs.c):
                out.write(f"{j} {o} {beta:.6f} {m} {c}\n")


def _offset_ball(tau_S: float, d_v: float) -> np.ndarray:
    """Integer cell offsets that can contain a voxel center within tau_S of a
    point in the central cell."""
    reach = tau_S / d_v + math.sqrt(3.0) / 2.0
    r = int(math.ceil(reach))
    axis = np.arange(-r, r + 1)
    ox, oy, oz = np.meshgrid(axis, axis, axis, indexing="ij")
    offsets = np.column_stack((ox.ravel(), oy.ravel(), oz.ravel()))
    keep = np.linalg.norm(offsets, axis=1) <= reach
    return offsets[keep]


def extract_support_priority(
    tset: TentacleSet, cfg: TentacleConfig, grid_cfg: GridConfig
) -> ClassifiedVoxels:
    """Classify grid voxels around every tentacle.

    For each tentacle and each voxel center within reach, the distance d to
    the nearest navigation point decides the class: d <= tau_P is Priority,
    tau_P < d <= tau_S is Support, anything farther is excluded. Ties on the
    nearest point resolve to the lower index. Voxels outside the grid are
    simply absent.
    """
    offsets = _offset_ball(cfg.tau_S, grid_cfg.d_v)
    counts = np.array(grid_cfg.counts)
    half = counts // 2
    stride_y = grid_cfg.n_v_x
    stride_z = grid_cfg.n_v_x * grid_cfg.n_v_y
    per_tentacle = []
    for tentacle in tset:
        cells = np.floor(tentacle.nav_points / grid_cfg.d_v).astype(np.int64) + half
        cand = (cells[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
        inside = np.all((cand >= 0) & (cand < counts), axis=1)
        cand = cand[inside]
        if len(cand) == 0:
            per_tentacle.append(
                TentacleVoxels(
                    o=np.empty(0, np.int64),
                    beta=np.empty(0),
                    m=np.empty(0, np.int32),
                    c=np.empty(0, np.int8),
                )
            )
            continue
        o = np.unique(cand[:, 0] + cand[:, 1] * stride_y + cand[:, 2] * stride_z)
        centers = voxel_centers(o, grid_cfg)
        dists = cdist(centers, tentacle.nav_points)
        m = dists.argmin(axis=1)
        d_min = dists[np.arange(len(o)), m]
        is_priority = d_min <= cfg.tau_P
        keep = d_min <= cfg.tau_S
        beta = np.where(is_priority, cfg.beta_max, cfg.beta_max / (cfg.alpha_beta * np.maximum(d_min, 1e-300)))
        per_tentacle.append(
            TentacleVoxels(
                o=o[keep],
                beta=beta[keep],
                m=(m[keep] + 1).astype(np.int32),
                c=is_priority[keep].astype(np.int8),
            )
        )
    return ClassifiedVoxels(per_tentacle=per_tentacle)
