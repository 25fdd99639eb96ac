"""Reactive navigation by heuristic evaluation of pre-sampled trajectories
over a robot-centered voxel grid, with a deterministic closed-loop simulator
and a benchmark harness."""

from .controller import ControlParams, ControlState, PoseCommand, calculate_next_pose
from .geometry import Pose
from .grid import (
    GridConfig,
    RobotCenteredGrid,
    init_grid,
    linear_index,
    linear_indices,
    refresh_occupancy,
    voxel_center,
    voxel_centers,
)
from .heuristics import (
    CycleEvaluator,
    EvaluationTable,
    HeuristicParams,
    OccupancySummary,
    TentacleEvaluation,
    clearance,
    clutter,
    closeness_raw,
    evaluate_cycle,
    navigability,
    normalize,
    occupancy_counters,
    select_best,
    smoothness_raw,
    total_cost,
)
from .localmap import OccupancyMap, PointCloud
from .sim import (
    COLLISION,
    SUCCESS,
    TIMEOUT,
    Cylinder,
    MapGenerationError,
    OfflineArtifacts,
    RobotModel,
    ScenarioConfig,
    ScenarioResult,
    SensorConfig,
    WorldMap,
    build_offline,
    check_collision,
    generate_cylinder_map,
    generate_forest_map,
    read_map,
    read_trace,
    replay_trace,
    run_scenario,
    sense,
    step_robot,
    write_map,
    write_trace,
)
from .tentacles import (
    ClassifiedVoxels,
    Tentacle,
    TentacleConfig,
    TentacleSet,
    TentacleVoxels,
    VoxelRecord,
    ellipsoid_range,
    extract_support_priority,
    occupancy_weight,
    sample_tentacles,
)

__version__ = "0.1.0"
