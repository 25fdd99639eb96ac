"""Deterministic closed-loop world: maps, raycast sensing, kinematic robot.

The simulator stands in for hardware: cylinder worlds with seeded layouts,
an analytic depth sensor (ray vs. cylinder sides and the ground plane), a
first-order pose tracker, and box-vs-cylinder collision checks. The main
loop wires the navigation stack together at a fixed cycle period and
produces a success/collision/timeout outcome with a full pose trace.
Everything is a pure function of the configuration, including the RNG use,
so identical configs give bit-identical traces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from .controller import ControlParams, ControlState, calculate_next_pose
from .geometry import Pose, quat_from_yaw, quat_multiply, quat_normalize, yaw_of
from .grid import GridConfig, RobotCenteredGrid, init_grid, refresh_occupancy
from .heuristics import CycleEvaluator, HeuristicParams
from .localmap import OccupancyMap, PointCloud
from .tentacles import (
    ClassifiedVoxels,
    RangeFn,
    TentacleConfig,
    TentacleSet,
    extract_support_priority,
    sample_tentacles,
)

SUCCESS = "success"
COLLISION = "collision"
TIMEOUT = "timeout"


class MapGenerationError(RuntimeError):
    """Raised when a requested obstacle layout cannot be packed."""


@dataclass(frozen=True)
class Cylinder:
    x: float
    y: float
    radius: float
    height: float


@dataclass
class WorldMap:
    """Vertical-cylinder obstacle field inside an axis-aligned area."""

    obstacles: list[Cylinder]
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    seed: int

    @property
    def min_radius(self) -> float:
        return min((c.radius for c in self.obstacles), default=math.inf)


@dataclass(frozen=True)
class SensorConfig:
    """Synthetic depth sensor: FOV, angular lattice step, range, and rate."""

    fov_h: float = math.radians(90.0)
    fov_v: float = math.radians(60.0)
    ang_res: float = 0.03
    max_range: float = 10.0
    rate: float = 10.0

    def __post_init__(self):
        if self.fov_h <= 0 or self.fov_v <= 0:
            raise ValueError("sensor FOV must be > 0")
        if self.ang_res <= 0:
            raise ValueError("sensor angular resolution must be > 0")
        if self.max_range <= 0:
            raise ValueError("sensor range must be > 0")


@dataclass(frozen=True)
class RobotModel:
    """Bounding-box footprint plus kinematic limits."""

    w_R: float = 0.45  # y extent, meters
    l_R: float = 0.45  # x extent, meters
    h_R: float = 0.25  # z extent, meters
    mu_max: float = 0.9  # m/s
    omega_phi: float = math.pi / 2  # max yaw rate, rad/s
    omega_theta: float = math.pi / 2
    omega_psi: float = math.pi / 2

    def __post_init__(self):
        for name in ("w_R", "l_R", "h_R", "mu_max", "omega_phi", "omega_theta", "omega_psi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def _place_cylinders(
    rng: np.random.Generator,
    count: int,
    bounds: tuple[float, float, float, float],
    radius_range: tuple[float, float],
    height_range: tuple[float, float],
    min_separation: float,
    keep_clear: Sequence[np.ndarray] = (),
    clear_radius: float = 1.0,
    max_attempts: int = 20000,
) -> list[Cylinder]:
    xmin, ymin, xmax, ymax = bounds
    placed: list[Cylinder] = []
    attempts = 0
    while len(placed) < count:
        if attempts >= max_attempts:
            raise MapGenerationError(
                f"could not place {count} obstacles with separation {min_separation} "
                f"in bounds {bounds} after {max_attempts} attempts"
            )
        attempts += 1
        x = rng.uniform(xmin, xmax)
        y = rng.uniform(ymin, ymax)
        r = rng.uniform(*radius_range)
        h = rng.uniform(*height_range)
        if any(math.hypot(x - p[0], y - p[1]) < clear_radius + r for p in keep_clear):
            continue
        if any(math.hypot(x - c.x, y - c.y) < min_separation for c in placed):
            continue
        placed.append(Cylinder(x=x, y=y, radius=r, height=h))
    return placed


def generate_cylinder_map(
    seed: int,
    count: int = 15,
    side: float = 20.0,
    radius_range: tuple[float, float] = (0.3, 0.6),
    height_range: tuple[float, float] = (4.0, 6.0),
    min_clearance: float = 0.7,
    keep_clear: Sequence[np.ndarray] = (),
) -> WorldMap:
    """Seeded cylinder field in a side x side area centered on the origin.

    `min_clearance` is the minimum surface-to-surface gap between obstacles,
    sized so the robot diagonal fits through.
    """
    half = side / 2.0
    bounds = (-half, -half, half, half)
    rng = np.random.default_rng(seed)
    min_sep = min_clearance + 2.0 * radius_range[1]
    obstacles = _place_cylinders(
        rng, count, bounds, radius_range, height_range, min_sep, keep_clear=keep_clear
    )
    return WorldMap(obstacles=obstacles, bounds=bounds, seed=seed)


def generate_forest_map(
    area: float,
    density: float,
    seed: int,
    min_separation: float = 1.0,
    radius_range: tuple[float, float] = (0.1, 0.3),
    height_range: tuple[float, float] = (5.0, 8.0),
    keep_clear: Sequence[np.ndarray] = (),
) -> WorldMap:
    """Seeded tree field: round(area * density) cylinders in a square of the
    given area (m^2), rejection-sampled with a minimum trunk separation."""
    if density < 0:
        raise ValueError("density must be >= 0")
    count = int(round(area * density))
    half = math.sqrt(area) / 2.0
    bounds = (-half, -half, half, half)
    rng = np.random.default_rng(seed)
    obstacles = _place_cylinders(
        rng, count, bounds, radius_range, height_range, min_separation, keep_clear=keep_clear
    )
    return WorldMap(obstacles=obstacles, bounds=bounds, seed=seed)


def sense(world: WorldMap, robot_pose: Pose, cfg: SensorConfig, stamp: float = 0.0) -> PointCloud:
    """Cast the sensor's angular lattice and return sensor-frame hit points.

    Rays intersect cylinder side surfaces (within their height span) and the
    ground plane z=0; the nearest hit within range yields one point with
    belief 1. The sensor frame coincides with the robot frame.
    """
    n_az = max(1, int(math.floor(cfg.fov_h / cfg.ang_res)) + 1)
    n_el = max(1, int(math.floor(cfg.fov_v / cfg.ang_res)) + 1)
    az = np.linspace(-cfg.fov_h / 2.0, cfg.fov_h / 2.0, n_az)
    el = np.linspace(-cfg.fov_v / 2.0, cfg.fov_v / 2.0, n_el)
    azg, elg = np.meshgrid(az, el, indexing="ij")
    azg = azg.ravel()
    elg = elg.ravel()
    dirs_s = np.column_stack(
        (np.cos(elg) * np.cos(azg), np.cos(elg) * np.sin(azg), np.sin(elg))
    )
    R = robot_pose.rotation()
    dirs_w = dirs_s @ R.T
    origin = robot_pose.p
    t_hit = np.full(len(dirs_w), np.inf)

    # ground plane z = 0
    dz = dirs_w[:, 2]
    going_down = dz < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(going_down, -origin[2] / dz, np.inf)
    t_hit = np.minimum(t_hit, np.where(t_ground > 0, t_ground, np.inf))

    dx = dirs_w[:, 0]
    dy = dirs_w[:, 1]
    a = dx * dx + dy * dy
    for cyl in world.obstacles:
        ox = origin[0] - cyl.x
        oy = origin[1] - cyl.y
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - cyl.radius * cyl.radius
        disc = b * b - 4.0 * a * c
        valid = (disc >= 0) & (a > 0)
        sq = np.sqrt(np.where(valid, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(valid, (-b - sq) / (2.0 * a), np.inf)
            t2 = np.where(valid, (-b + sq) / (2.0 * a), np.inf)
            for t in (t1, t2):
                z = origin[2] + t * dz
                ok = valid & (t > 0) & (z >= 0.0) & (z <= cyl.height)
                t_hit = np.where(ok, np.minimum(t_hit, t), t_hit)

    hit = t_hit <= cfg.max_range
    points = dirs_s[hit] * t_hit[hit][:, None]
    return PointCloud(points=points, beliefs=np.ones(len(points)), stamp=stamp)


def step_robot(pose: Pose, cmd, model: RobotModel, d_t: float) -> Pose:
    """Ideal first-order tracker: move toward the commanded robot-frame pose,
    clamped to the per-cycle translation and yaw budgets."""
    disp_w = pose.rotation() @ np.asarray(cmd.p_next, dtype=float)
    dist = float(np.linalg.norm(disp_w))
    budget = model.mu_max * d_t
    if dist > budget:
        disp_w = disp_w * (budget / dist)
    yaw_cmd = yaw_of(cmd.q_next)
    yaw_budget = model.omega_phi * d_t
    yaw_step = min(max(yaw_cmd, -yaw_budget), yaw_budget)
    new_q = quat_normalize(quat_multiply(pose.q, quat_from_yaw(yaw_step)))
    return Pose(p=pose.p + disp_w, q=new_q)


def check_collision(world: WorldMap, pose: Pose, model: RobotModel) -> bool:
    """Oriented bounding box vs. cylinder test (closed: touching counts)."""
    yaw = pose.yaw()
    cos_y = math.cos(yaw)
    sin_y = math.sin(yaw)
    z_lo = pose.p[2] - model.h_R / 2.0
    z_hi = pose.p[2] + model.h_R / 2.0
    half_l = model.l_R / 2.0
    half_w = model.w_R / 2.0
    for cyl in world.obstacles:
        if z_hi < 0.0 or z_lo > cyl.height:
            continue
        rel_x = cyl.x - pose.p[0]
        rel_y = cyl.y - pose.p[1]
        # circle center in the robot's footprint frame
        lx = cos_y * rel_x + sin_y * rel_y
        ly = -sin_y * rel_x + cos_y * rel_y
        ex = max(abs(lx) - half_l, 0.0)
        ey = max(abs(ly) - half_w, 0.0)
        if ex * ex + ey * ey <= cyl.radius * cyl.radius:
            return True
    return False


@dataclass
class ScenarioConfig:
    world: WorldMap
    start: Pose
    goals: list[np.ndarray]
    goal_tolerance: float = 0.5
    time_limit: float = 60.0
    d_t: float = 0.1
    grid_cfg: GridConfig = field(default_factory=lambda: GridConfig(0.2, 110, 110, 40))
    tentacle_cfg: TentacleConfig = field(
        default_factory=lambda: TentacleConfig(
            n_phi=21,
            n_theta=9,
            phi_cov=math.radians(60.0),
            theta_cov=math.radians(45.0),
            l_t_max=10.0,
            delta_d=0.35,
            tau_P=0.35,
            tau_S=0.5,
        )
    )
    heuristic_params: HeuristicParams = field(default_factory=HeuristicParams)
    # mu_min > 0: goal braking subtracts 2*delta_mu per cycle inside a quarter
    # tentacle length of the goal, so a zero floor would stall short of it
    control_params: ControlParams = field(default_factory=lambda: ControlParams(mu_min=0.25))
    sensor_cfg: SensorConfig = field(default_factory=SensorConfig)
    robot: RobotModel = field(default_factory=RobotModel)
    range_fn: Optional[RangeFn] = None
    map_bound_radius: Optional[float] = None  # default: grid diagonal
    eval_dump: Optional[TextIO] = None

    def __post_init__(self):
        self.goals = [np.asarray(g, dtype=float).reshape(3) for g in self.goals]
        if not self.goals:
            raise ValueError("at least one goal is required")
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be > 0")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be > 0")
        if self.d_t <= 0:
            raise ValueError("d_t must be > 0")
        # collision checks run at cycle boundaries; forbid steps that could tunnel
        min_r = self.world.min_radius
        if self.world.obstacles and self.robot.mu_max * self.d_t >= min_r:
            raise ValueError(
                f"per-cycle displacement {self.robot.mu_max * self.d_t:.3f} m must stay below "
                f"the smallest obstacle radius {min_r:.3f} m to rule out tunneling"
            )


@dataclass
class ScenarioResult:
    outcome: str  # success | collision | timeout
    duration: float
    path_length: float
    trace: np.ndarray  # rows: t x y z qx qy qz qw j_best mu_t


@dataclass
class OfflineArtifacts:
    """One-shot initialization products, reusable across scenario runs."""

    grid_cfg: GridConfig
    A_p: np.ndarray
    tset: TentacleSet
    classified: ClassifiedVoxels
    evaluator: CycleEvaluator
    init_arrays_s: float
    init_tentacles_s: float

    def new_grid(self) -> RobotCenteredGrid:
        return RobotCenteredGrid(
            config=self.grid_cfg, A_p=self.A_p, A_rho=np.zeros(self.grid_cfg.total_voxels)
        )


def build_offline(
    grid_cfg: GridConfig, tentacle_cfg: TentacleConfig, range_fn: Optional[RangeFn] = None
) -> OfflineArtifacts:
    """Run the offline stage: position/occupancy arrays, tentacle sampling,
    voxel classification. Phase durations are recorded for timing reports."""
    t0 = time.perf_counter()
    grid = init_grid(grid_cfg)
    t1 = time.perf_counter()
    tset = sample_tentacles(tentacle_cfg, range_fn)
    classified = extract_support_priority(tset, tentacle_cfg, grid_cfg)
    t2 = time.perf_counter()
    evaluator = CycleEvaluator(tset, classified)
    return OfflineArtifacts(
        grid_cfg=grid_cfg,
        A_p=grid.A_p,
        tset=tset,
        classified=classified,
        evaluator=evaluator,
        init_arrays_s=t1 - t0,
        init_tentacles_s=t2 - t1,
    )


class CycleTimer:
    """Accumulates per-phase wall times of the main loop, skipping warm-up cycles."""

    PHASES = ("map_update", "occupancy_heuristics", "selection", "next_pose")

    def __init__(self, warmup: int = 0):
        self.warmup = warmup
        self.cycles = 0
        self.sums = {name: 0.0 for name in self.PHASES}
        self.measured = 0

    def add(self, durations: dict[str, float]):
        self.cycles += 1
        if self.cycles <= self.warmup:
            return
        self.measured += 1
        for name, dt in durations.items():
            self.sums[name] += dt

    def means_ms(self) -> dict[str, float]:
        if self.measured == 0:
            return {name: 0.0 for name in self.PHASES}
        return {name: 1000.0 * self.sums[name] / self.measured for name in self.PHASES}


def run_scenario(
    cfg: ScenarioConfig,
    offline: Optional[OfflineArtifacts] = None,
    timer: Optional[CycleTimer] = None,
    cycle_limit: Optional[int] = None,
) -> ScenarioResult:
    """Closed-loop navigation until all goals are reached, the time limit
    expires, or the robot collides.

    Each cycle: sense, insert the cloud into the local map, refresh the grid
    occupancy over the referenced voxels, evaluate all tentacles, select the
    best, compute the next pose, and step the robot. `offline` allows reuse
    of the grid/tentacle initialization across runs; `cycle_limit` caps the
    number of cycles regardless of outcome (used by timing probes).
    """
    if offline is None:
        offline = build_offline(cfg.grid_cfg, cfg.tentacle_cfg, cfg.range_fn)
    grid = offline.new_grid()
    evaluator = offline.evaluator
    active = evaluator.active_indices

    bound = cfg.map_bound_radius
    if bound is None:
        bound = float(np.linalg.norm(cfg.grid_cfg.extents))
    occ_map = OccupancyMap(resolution=cfg.grid_cfg.d_v, bound_radius=bound)

    pose = Pose(p=cfg.start.p.copy(), q=cfg.start.q.copy())
    state = ControlState(mu_t=0.0, prev_best=None)
    goals = list(cfg.goals)
    goal_idx = 0
    t = 0.0
    trace_rows = [_trace_row(t, pose, -1, state.mu_t)]
    path_length = 0.0

    # goals already satisfied at the start are consumed immediately
    while goal_idx < len(goals) and np.linalg.norm(pose.p - goals[goal_idx]) <= cfg.goal_tolerance:
        goal_idx += 1
    outcome = SUCCESS if goal_idx >= len(goals) else None

    cycles = 0
    while outcome is None:
        if t + cfg.d_t > cfg.time_limit + 1e-12:
            outcome = TIMEOUT
            break
        if cycle_limit is not None and cycles >= cycle_limit:
            outcome = TIMEOUT
            break
        goal = goals[goal_idx]

        cloud = sense(cfg.world, pose, cfg.sensor_cfg, stamp=t)
        t0 = time.perf_counter()
        occ_map.insert_cloud(cloud, pose)
        occ_map.prune(pose.p)
        t1 = time.perf_counter()
        refresh_occupancy(grid, pose, occ_map, indices=active)
        table = evaluator.evaluate(grid, pose, goal, state.prev_best, cfg.heuristic_params)
        t2 = time.perf_counter()
        j_best = table.select_best()
        t3 = time.perf_counter()
        if j_best is not None:
            best = offline.tset[j_best]
            k_obs = table.k_obs_of(j_best)
            goal_R = pose.inverse_transform(goal)
            cmd, state = calculate_next_pose(best, k_obs, goal_R, cfg.control_params, state)
            state = ControlState(mu_t=state.mu_t, prev_best=j_best)
        else:
            cmd, state = calculate_next_pose(None, None, np.zeros(3), cfg.control_params, state)
        t4 = time.perf_counter()
        if timer is not None:
            timer.add(
                {
                    "map_update": t1 - t0,
                    "occupancy_heuristics": t2 - t1,
                    "selection": t3 - t2,
                    "next_pose": t4 - t3,
                }
            )
        if cfg.eval_dump is not None:
            table.dump_records(cfg.eval_dump, cycles)

        new_pose = step_robot(pose, cmd, cfg.robot, cfg.d_t)
        path_length += float(np.linalg.norm(new_pose.p - pose.p))
        pose = new_pose
        t += cfg.d_t
        cycles += 1
        trace_rows.append(_trace_row(t, pose, j_best if j_best is not None else -1, state.mu_t))

        if check_collision(cfg.world, pose, cfg.robot):
            outcome = COLLISION
            break
        while goal_idx < len(goals) and np.linalg.norm(pose.p - goals[goal_idx]) <= cfg.goal_tolerance:
            goal_idx += 1
        if goal_idx >= len(goals):
            outcome = SUCCESS

    return ScenarioResult(
        outcome=outcome,
        duration=t,
        path_length=path_length,
        trace=np.array(trace_rows),
    )


def _trace_row(t: float, pose: Pose, j_best: int, mu_t: float) -> list[float]:
    return [t, *pose.p, *pose.q, float(j_best), mu_t]


# --- map and trace files -----------------------------------------------------


def write_map(world: WorldMap, out: TextIO):
    """Plain-text map: bounds and seed headers, one obstacle per record."""
    xmin, ymin, xmax, ymax = world.bounds
    out.write(f"bounds {xmin:.6f} {ymin:.6f} {xmax:.6f} {ymax:.6f}\n")
    out.write(f"seed {world.seed}\n")
    for c in world.obstacles:
        out.write(f"obstacle {c.x:.6f} {c.y:.6f} {c.radius:.6f} {c.height:.6f}\n")


def read_map(inp: TextIO) -> WorldMap:
    bounds = None
    seed = 0
    obstacles = []
    for line in inp:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "bounds":
            bounds = tuple(float(v) for v in parts[1:5])
        elif parts[0] == "seed":
            seed = int(parts[1])
        elif parts[0] == "obstacle":
            x, y, r, h = (float(v) for v in parts[1:5])
            obstacles.append(Cylinder(x=x, y=y, radius=r, height=h))
        else:
            raise ValueError(f"unrecognized map record: {parts[0]!r}")
    if bounds is None:
        raise ValueError("map file has no bounds record")
    return WorldMap(obstacles=obstacles, bounds=bounds, seed=seed)


def write_trace(trace: np.ndarray, out: TextIO):
    """One record per cycle: 't x y z qx qy qz qw j_best mu_t'. The tentacle
    index is an integer, -1 when no navigable tentacle was available."""
    for row in trace:
        out.write(
            f"{row[0]:.6f} {row[1]:.6f} {row[2]:.6f} {row[3]:.6f} "
            f"{row[4]:.6f} {row[5]:.6f} {row[6]:.6f} {row[7]:.6f} "
            f"{int(row[8])} {row[9]:.6f}\n"
        )


def read_trace(inp: TextIO) -> np.ndarray:
    rows = []
    for line in inp:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        rows.append([float(v) for v in parts])
    if not rows:
        raise ValueError("trace file is empty")
    arr = np.array(rows)
    if arr.shape[1] != 10:
        raise ValueError(f"trace records must have 10 fields, got {arr.shape[1]}")
    return arr


def replay_trace(trace: np.ndarray, world: WorldMap, model: RobotModel) -> list[int]:
    """Re-check a pose trace against a map; returns indices of colliding records."""
    collisions = []
    for i, row in enumerate(trace):
        pose = Pose(p=row[1:4], q=quat_normalize(row[4:8]))
        if check_collision(world, pose, model):
            collisions.append(i)
    return collisions
