"""Benchmark harness: config parsing, multi-map trials, timing probes, CSV output.

Configuration files are YAML with one section per parameter group (robot,
offline, online, scenario, benchmark, timing); every key carries a
documented default, so an empty file is a valid config. All angles in
config files are degrees. Results are emitted as per-trial and per-map CSV
plus a JSON summary; the whole pipeline is a pure function of the config
file and the global seed.
"""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .controller import ControlParams
from .geometry import Pose, quat_from_yaw
from .grid import GridConfig, init_grid
from .heuristics import HeuristicParams
from .sim import (
    COLLISION,
    SUCCESS,
    TIMEOUT,
    CycleTimer,
    RobotModel,
    ScenarioConfig,
    ScenarioResult,
    SensorConfig,
    WorldMap,
    build_offline,
    generate_cylinder_map,
    generate_forest_map,
    run_scenario,
    write_trace,
)
from .tentacles import TentacleConfig, ellipsoid_range


class ConfigParseError(Exception):
    """The config file could not be read or is not valid YAML."""


class ConfigValidationError(Exception):
    """The config parsed but violates a parameter invariant."""


DEFAULTS: dict[str, dict] = {
    "robot": {
        "w_R": 0.45,
        "l_R": 0.45,
        "h_R": 0.25,
        "mu_max": 0.9,
        "omega_phi": 90.0,  # deg/s
        "omega_theta": 90.0,
        "omega_psi": 90.0,
        "d_s": 0.3,  # sensor spatial resolution at max range, meters
        "rho_x": 10.0,  # sensor range per axis, meters
        "rho_y": 10.0,
        "rho_z": 10.0,
    },
    "offline": {
        "d_v": 0.2,
        "n_v_x": 110,
        "n_v_y": 110,
        "n_v_z": 40,
        "n_phi": 21,
        "n_theta": 9,
        "n_psi": 1,
        "n_s": None,  # alternative to delta_d: delta_d = l_t_max / n_s
        "l_t_max": 10.0,
        "phi": 60.0,  # coverage angles, degrees
        "theta": 45.0,
        "psi": 0.0,
        "delta_d": 0.35,
        "tau_P": 0.35,
        "tau_S": 0.5,
        "beta_max": 1.0,
        "alpha_beta": 10.0,
    },
    "online": {
        "alpha_crash": 0.15,
        "tau_D_err": 0.0,
        "lambda_clear": 2.0,
        "lambda_clut": 1.0,
        "lambda_close": 1.2,
        "lambda_smo": 0.05,
        "alpha_omega": 0.8,
        "mu_nom": 0.8,
        "delta_mu": 0.1,
        "mu_min": 0.25,
    },
    "scenario": {
        "d_t": 0.1,
        "time_limit": 90.0,
        "goal_tolerance": 0.5,
        "flight_z": 1.0,
        "fov_h": 90.0,  # degrees
        "fov_v": 60.0,
        "sensor_rate": 10.0,
        "start": None,  # [x, y, z, yaw_deg]; per-map default when None
        "goals": None,  # [[x, y, z], ...]; per-map default when None
    },
    "benchmark": {
        "output_dir": "bench_out",
        "seed": 1,
        "trials": 10,
        "plots": True,
        "maps": None,  # default: 10 forest maps, area 100 m^2, density 0.2
    },
    "timing": {
        "warmup_cycles": 50,
        "measure_cycles": 50,
        "init_repeats": 2,
        "configs": None,  # default grid defined in default_timing_grid()
    },
}


@dataclass(frozen=True)
class MapSpec:
    kind: str  # forest | cylinders | empty
    seed: int
    label: str
    count: int = 15
    area: float = 100.0
    density: float = 0.2


@dataclass
class BenchmarkSpec:
    maps: list[MapSpec]
    trials: int
    output_dir: str
    seed: int
    plots: bool


@dataclass
class TimingSpec:
    warmup_cycles: int
    measure_cycles: int
    init_repeats: int
    configs: list[dict]


@dataclass
class ParameterSet:
    """All parameter groups merged with defaults, ready to build typed configs."""

    robot: dict
    offline: dict
    online: dict
    scenario: dict

    def grid_config(self, d_v: Optional[float] = None, n_v: Optional[int] = None) -> GridConfig:
        off = self.offline
        if d_v is None:
            d_v = off["d_v"]
        if n_v is not None:
            return GridConfig(d_v=d_v, n_v_x=n_v, n_v_y=n_v, n_v_z=n_v)
        return GridConfig(d_v=d_v, n_v_x=off["n_v_x"], n_v_y=off["n_v_y"], n_v_z=off["n_v_z"])

    def tentacle_config(self, n_phi: Optional[int] = None, n_theta: Optional[int] = None) -> TentacleConfig:
        off = self.offline
        delta_d = off["delta_d"]
        if off["n_s"] is not None:
            delta_d = off["l_t_max"] / off["n_s"]
        return TentacleConfig(
            n_phi=n_phi if n_phi is not None else off["n_phi"],
            n_theta=n_theta if n_theta is not None else off["n_theta"],
            phi_cov=math.radians(off["phi"]),
            theta_cov=math.radians(off["theta"]),
            l_t_max=off["l_t_max"],
            delta_d=delta_d,
            tau_P=off["tau_P"],
            tau_S=off["tau_S"],
            beta_max=off["beta_max"],
            alpha_beta=off["alpha_beta"],
        )

    def heuristic_params(self) -> HeuristicParams:
        on = self.online
        return HeuristicParams(
            alpha_crash=on["alpha_crash"],
            tau_D_err=on["tau_D_err"],
            lambda_clear=on["lambda_clear"],
            lambda_clut=on["lambda_clut"],
            lambda_close=on["lambda_close"],
            lambda_smo=on["lambda_smo"],
        )

    def control_params(self) -> ControlParams:
        on = self.online
        return ControlParams(
            alpha_omega=on["alpha_omega"],
            mu_nom=on["mu_nom"],
            delta_mu=on["delta_mu"],
            mu_max=self.robot["mu_max"],
            mu_min=on["mu_min"],
            omega_max_phi=math.radians(self.robot["omega_phi"]),
            d_t=self.scenario["d_t"],
        )

    def robot_model(self) -> RobotModel:
        r = self.robot
        return RobotModel(
            w_R=r["w_R"],
            l_R=r["l_R"],
            h_R=r["h_R"],
            mu_max=r["mu_max"],
            omega_phi=math.radians(r["omega_phi"]),
            omega_theta=math.radians(r["omega_theta"]),
            omega_psi=math.radians(r["omega_psi"]),
        )

    def sensor_config(self) -> SensorConfig:
        r = self.robot
        s = self.scenario
        max_range = max(r["rho_x"], r["rho_y"], r["rho_z"])
        # angular lattice spaced to d_s at max range
        ang_res = r["d_s"] / max_range
        return SensorConfig(
            fov_h=math.radians(s["fov_h"]),
            fov_v=math.radians(s["fov_v"]),
            ang_res=ang_res,
            max_range=max_range,
            rate=s["sensor_rate"],
        )

    def range_fn(self):
        r = self.robot
        return ellipsoid_range(r["rho_x"], r["rho_y"], r["rho_z"])


def _merge_section(name: str, user: dict) -> dict:
    merged = dict(DEFAULTS[name])
    for key, value in user.items():
        if key not in merged:
            raise ConfigValidationError(f"unknown key '{key}' in section '{name}'")
        merged[key] = value
    return merged


def _validate(params: ParameterSet, bench: BenchmarkSpec, timing: TimingSpec):
    off = params.offline
    on = params.online
    robot = params.robot
    scen = params.scenario
    if off["tau_S"] <= off["tau_P"]:
        raise ConfigValidationError(
            f"tau_S ({off['tau_S']}) must exceed tau_P ({off['tau_P']}): support voxels lie beyond priority ones"
        )
    if off["tau_P"] <= 0:
        raise ConfigValidationError("tau_P must be > 0")
    for key in ("n_v_x", "n_v_y", "n_v_z"):
        if off[key] < 1:
            raise ConfigValidationError(f"{key} must be >= 1")
        if off[key] % 2 != 0:
            raise ConfigValidationError(f"{key} must be even (robot-centered grid), got {off[key]}")
    if off["d_v"] <= 0:
        raise ConfigValidationError("d_v must be > 0")
    if off["n_phi"] < 1 or off["n_theta"] < 1:
        raise ConfigValidationError("n_phi and n_theta must be >= 1 (at least one tentacle)")
    if off["n_psi"] != 1 or off["psi"] != 0.0:
        raise ConfigValidationError("roll sampling is fixed: n_psi must be 1 and psi must be 0")
    if off["n_s"] is not None:
        if off["n_s"] < 1:
            raise ConfigValidationError("n_s must be >= 1")
        if off["delta_d"] != DEFAULTS["offline"]["delta_d"]:
            raise ConfigValidationError("give either n_s or delta_d, not both")
    if off["l_t_max"] <= 0 or off["delta_d"] <= 0:
        raise ConfigValidationError("l_t_max and delta_d must be > 0")
    if off["alpha_beta"] <= 0 or off["beta_max"] <= 0:
        raise ConfigValidationError("alpha_beta and beta_max must be > 0")
    if not 0 < on["alpha_crash"] <= 1:
        raise ConfigValidationError("alpha_crash must be in (0, 1]")
    if on["tau_D_err"] < 0:
        raise ConfigValidationError("tau_D_err must be >= 0")
    for key in ("lambda_clear", "lambda_clut", "lambda_close", "lambda_smo"):
        if on[key] < 0 or not math.isfinite(on[key]):
            raise ConfigValidationError(f"{key} must be finite and >= 0")
    if not 0 < on["alpha_omega"] <= 1:
        raise ConfigValidationError("alpha_omega must be in (0, 1]")
    if on["mu_nom"] > robot["mu_max"]:
        raise ConfigValidationError(
            f"mu_nom ({on['mu_nom']}) must not exceed mu_max ({robot['mu_max']})"
        )
    if on["mu_min"] > on["mu_nom"]:
        raise ConfigValidationError("mu_min must not exceed mu_nom")
    if on["delta_mu"] <= 0:
        raise ConfigValidationError("delta_mu must be > 0")
    for key in ("w_R", "l_R", "h_R", "mu_max", "d_s", "rho_x", "rho_y", "rho_z"):
        if robot[key] <= 0:
            raise ConfigValidationError(f"{key} must be > 0")
    if scen["d_t"] <= 0 or scen["time_limit"] <= 0 or scen["goal_tolerance"] <= 0:
        raise ConfigValidationError("d_t, time_limit and goal_tolerance must be > 0")
    if bench.trials < 1:
        raise ConfigValidationError("trials must be >= 1")
    if timing.warmup_cycles < 50:
        raise ConfigValidationError("warmup_cycles must be >= 50 (steady-state measurement)")
    if timing.measure_cycles < 1:
        raise ConfigValidationError("measure_cycles must be >= 1")


def _map_specs(raw_maps, seed: int) -> list[MapSpec]:
    if raw_maps is None:
        return [
            MapSpec(kind="forest", seed=seed + i, label=f"forest{i:02d}", area=100.0, density=0.2)
            for i in range(10)
        ]
    specs = []
    allowed = {"type", "seed", "label", "count", "area", "density"}
    for i, entry in enumerate(raw_maps):
        if not isinstance(entry, dict) or "type" not in entry:
            raise ConfigValidationError(f"benchmark.maps[{i}] must be a mapping with a 'type' key")
        unknown = set(entry) - allowed
        if unknown:
            raise ConfigValidationError(f"unknown key(s) {sorted(unknown)} in benchmark.maps[{i}]")
        kind = entry["type"]
        if kind not in ("forest", "cylinders", "empty"):
            raise ConfigValidationError(f"benchmark.maps[{i}].type must be forest, cylinders or empty")
        specs.append(
            MapSpec(
                kind=kind,
                seed=int(entry.get("seed", seed + i)),
                label=str(entry.get("label", f"{kind}{i:02d}")),
                count=int(entry.get("count", 15)),
                area=float(entry.get("area", 100.0)),
                density=float(entry.get("density", 0.2)),
            )
        )
    return specs


def parse_config(path, seed_override: Optional[int] = None, output_override: Optional[str] = None):
    """Load and validate a YAML config.

    Returns (ParameterSet, BenchmarkSpec, TimingSpec). A missing or
    unreadable file and YAML syntax errors raise ConfigParseError; semantic
    problems raise ConfigValidationError with the violated invariant in the
    message.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"config file {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigValidationError("config root must be a mapping of sections")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigValidationError(f"unknown config section(s): {sorted(unknown)}")
    sections = {
        name: _merge_section(name, raw.get(name) or {}) for name in DEFAULTS
    }
    params = ParameterSet(
        robot=sections["robot"],
        offline=sections["offline"],
        online=sections["online"],
        scenario=sections["scenario"],
    )
    bench_raw = sections["benchmark"]
    seed = int(seed_override if seed_override is not None else bench_raw["seed"])
    output_dir = output_override if output_override is not None else bench_raw["output_dir"]
    bench = BenchmarkSpec(
        maps=_map_specs(bench_raw["maps"], seed),
        trials=int(bench_raw["trials"]),
        output_dir=str(output_dir),
        seed=seed,
        plots=bool(bench_raw["plots"]),
    )
    timing_raw = sections["timing"]
    timing = TimingSpec(
        warmup_cycles=int(timing_raw["warmup_cycles"]),
        measure_cycles=int(timing_raw["measure_cycles"]),
        init_repeats=int(timing_raw["init_repeats"]),
        configs=timing_raw["configs"] or default_timing_grid(),
    )
    _validate(params, bench, timing)
    return params, bench, timing


def default_timing_grid() -> list[dict]:
    """Three probe configs spanning an 8x voxel-count step and a ~2x tentacle step."""
    return [
        {"label": "dv0.2-n110-t651", "d_v": 0.2, "n_v": 110, "n_phi": 31, "n_theta": 21},
        {"label": "dv0.1-n220-t651", "d_v": 0.1, "n_v": 220, "n_phi": 31, "n_theta": 21},
        {"label": "dv0.1-n220-t1271", "d_v": 0.1, "n_v": 220, "n_phi": 41, "n_theta": 31},
    ]


def build_world(spec: MapSpec, keep_clear=()) -> WorldMap:
    if spec.kind == "forest":
        return generate_forest_map(spec.area, spec.density, spec.seed, keep_clear=keep_clear)
    if spec.kind == "cylinders":
        return generate_cylinder_map(spec.seed, count=spec.count, keep_clear=keep_clear)
    if spec.kind == "empty":
        return WorldMap(obstacles=[], bounds=(-10.0, -10.0, 10.0, 10.0), seed=spec.seed)
    raise ConfigValidationError(f"unknown map kind {spec.kind!r}")


def _default_route(spec: MapSpec, world: WorldMap, flight_z: float):
    xmin, ymin, xmax, ymax = world.bounds
    if spec.kind == "cylinders":
        # diagonal crossing; corners kept clear at generation time
        start = Pose(p=[xmin + 1.0, ymin + 1.0, flight_z], q=quat_from_yaw(math.pi / 4.0))
        goals = [np.array([xmax - 1.0, ymax - 1.0, flight_z])]
    else:
        start = Pose(p=[xmin - 1.5, 0.0, flight_z], q=quat_from_yaw(0.0))
        goals = [np.array([xmax + 1.5, 0.0, flight_z])]
    return start, goals


def scenario_for_map(spec: MapSpec, params: ParameterSet) -> ScenarioConfig:
    """Assemble a scenario for one benchmark map, with seeded start/goal routes."""
    flight_z = params.scenario["flight_z"]
    half = math.sqrt(spec.area) / 2.0 if spec.kind == "forest" else 10.0
    if spec.kind == "cylinders":
        clear = [np.array([-half + 1.0, -half + 1.0]), np.array([half - 1.0, half - 1.0])]
    else:
        clear = []
    world = build_world(spec, keep_clear=clear)
    start, goals = _default_route(spec, world, flight_z)
    if params.scenario["start"] is not None:
        x, y, z, yaw_deg = params.scenario["start"]
        start = Pose(p=[x, y, z], q=quat_from_yaw(math.radians(yaw_deg)))
    if params.scenario["goals"] is not None:
        goals = [np.asarray(g, dtype=float) for g in params.scenario["goals"]]
    return ScenarioConfig(
        world=world,
        start=start,
        goals=goals,
        goal_tolerance=params.scenario["goal_tolerance"],
        time_limit=params.scenario["time_limit"],
        d_t=params.scenario["d_t"],
        grid_cfg=params.grid_config(),
        tentacle_cfg=params.tentacle_config(),
        heuristic_params=params.heuristic_params(),
        control_params=params.control_params(),
        sensor_cfg=params.sensor_config(),
        robot=params.robot_model(),
        range_fn=params.range_fn(),
    )


@dataclass
class TrialRow:
    map_label: str
    trial: int
    seed: int
    outcome: str
    duration: float
    path_length: float


@dataclass
class MapAggregate:
    map_label: str
    trials: int
    successes: int
    success_rate: float
    duration_mean: float
    duration_std: float
    path_length_mean: float
    path_length_std: float


@dataclass
class BenchmarkResults:
    rows: list[TrialRow]
    aggregates: list[MapAggregate]
    traces: dict[tuple[str, int], np.ndarray]

    @property
    def overall_success_rate(self) -> float:
        if not self.rows:
            return 0.0
        return sum(1 for r in self.rows if r.outcome == SUCCESS) / len(self.rows)


def aggregate_rows(rows: list[TrialRow]) -> list[MapAggregate]:
    """Per-map success rate plus duration/path statistics over successful trials."""
    by_map: dict[str, list[TrialRow]] = {}
    for row in rows:
        by_map.setdefault(row.map_label, []).append(row)
    aggregates = []
    for label, group in by_map.items():
        successes = [r for r in group if r.outcome == SUCCESS]
        durations = np.array([r.duration for r in successes])
        paths = np.array([r.path_length for r in successes])
        aggregates.append(
            MapAggregate(
                map_label=label,
                trials=len(group),
                successes=len(successes),
                success_rate=len(successes) / len(group),
                duration_mean=float(durations.mean()) if len(successes) else math.nan,
                duration_std=float(durations.std()) if len(successes) else math.nan,
                path_length_mean=float(paths.mean()) if len(successes) else math.nan,
                path_length_std=float(paths.std()) if len(successes) else math.nan,
            )
        )
    return aggregates


def run_benchmark(spec: BenchmarkSpec, params: ParameterSet, progress=None) -> BenchmarkResults:
    """Run every map x trial scenario and aggregate per map.

    The offline stage (grid arrays, tentacle sampling, voxel classification)
    is shared across all runs since it depends only on the parameter set.
    Individual scenario outcomes, including collisions and timeouts, are
    recorded as rows and never abort the suite.
    """
    offline = build_offline(params.grid_config(), params.tentacle_config(), params.range_fn())
    rows: list[TrialRow] = []
    traces: dict[tuple[str, int], np.ndarray] = {}
    for map_spec in spec.maps:
        scenario = scenario_for_map(map_spec, params)
        for trial in range(spec.trials):
            result = run_scenario(scenario, offline=offline)
            rows.append(
                TrialRow(
                    map_label=map_spec.label,
                    trial=trial,
                    seed=map_spec.seed,
                    outcome=result.outcome,
                    duration=result.duration,
                    path_length=result.path_length,
                )
            )
            traces[(map_spec.label, trial)] = result.trace
            if progress is not None:
                progress(rows[-1])
    return BenchmarkResults(rows=rows, aggregates=aggregate_rows(rows), traces=traces)


def emit_results(results: BenchmarkResults, outdir, write_traces: bool = True) -> list[Path]:
    """Write trials.csv, aggregates.csv, summary.json, and per-trial traces.

    Files are deterministic: fixed 6-decimal floats, rows ordered by
    (map, trial), newline-terminated records.
    """
    if not results.rows:
        raise ValueError("no results to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    trials_path = outdir / "trials.csv"
    with open(trials_path, "w") as f:
        f.write("map,trial,seed,outcome,duration_s,path_length_m\n")
        for row in sorted(results.rows, key=lambda r: (r.map_label, r.trial)):
            f.write(
                f"{row.map_label},{row.trial},{row.seed},{row.outcome},"
                f"{row.duration:.6f},{row.path_length:.6f}\n"
            )
    written.append(trials_path)

    agg_path = outdir / "aggregates.csv"
    with open(agg_path, "w") as f:
        f.write(
            "map,trials,successes,success_rate,duration_mean_s,duration_std_s,"
            "path_length_mean_m,path_length_std_m\n"
        )
        for agg in sorted(results.aggregates, key=lambda a: a.map_label):
            f.write(
                f"{agg.map_label},{agg.trials},{agg.successes},{agg.success_rate:.6f},"
                f"{agg.duration_mean:.6f},{agg.duration_std:.6f},"
                f"{agg.path_length_mean:.6f},{agg.path_length_std:.6f}\n"
            )
    written.append(agg_path)

    summary = {
        "overall_success_rate": round(results.overall_success_rate, 6),
        "trials": len(results.rows),
        "outcomes": {
            key: sum(1 for r in results.rows if r.outcome == key)
            for key in (SUCCESS, COLLISION, TIMEOUT)
        },
        "maps": [
            {
                "map": agg.map_label,
                "trials": agg.trials,
                "successes": agg.successes,
                "success_rate": round(agg.success_rate, 6),
                "duration_mean_s": _round6(agg.duration_mean),
                "duration_std_s": _round6(agg.duration_std),
                "path_length_mean_m": _round6(agg.path_length_mean),
                "path_length_std_m": _round6(agg.path_length_std),
            }
            for agg in sorted(results.aggregates, key=lambda a: a.map_label)
        ],
    }
    summary_path = outdir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)

    if write_traces:
        trace_dir = outdir / "traces"
        trace_dir.mkdir(exist_ok=True)
        for (label, trial), trace in sorted(results.traces.items()):
            path = trace_dir / f"{label}_t{trial:02d}.trace"
            with open(path, "w") as f:
                write_trace(trace, f)
            written.append(path)
    return written


def _round6(value: float):
    return None if math.isnan(value) else round(value, 6)


@dataclass
class TimingReport:
    """Initialization durations and steady-state per-cycle phase means."""

    label: str
    d_v: float
    n_v: int
    n_tentacles: int
    init_arrays_s: float
    init_tentacles_s: float
    phase_means_ms: dict[str, float]

    @property
    def cycle_total_ms(self) -> float:
        return sum(self.phase_means_ms.values())


def run_timing_probe(params: ParameterSet, timing: TimingSpec, seed: int = 1) -> list[TimingReport]:
    """Measure initialization and main-loop phases across the probe grid.

    Each probe config overrides the grid and tentacle-count parameters, runs
    a seeded forest scene for warmup+measure cycles, and reports per-phase
    means with the warm-up cycles discarded. Array initialization is timed
    as the minimum over init_repeats dedicated runs.
    """
    init_grid(GridConfig(0.5, 16, 16, 16))  # allocator warm-up
    reports = []
    for probe in timing.configs:
        label = probe.get("label", "probe")
        grid_cfg = params.grid_config(d_v=probe.get("d_v"), n_v=probe.get("n_v"))
        tent_cfg = params.tentacle_config(
            n_phi=probe.get("n_phi"), n_theta=probe.get("n_theta")
        )
        init_arrays = math.inf
        for _ in range(max(1, timing.init_repeats)):
            t0 = time.perf_counter()
            init_grid(grid_cfg)
            init_arrays = min(init_arrays, time.perf_counter() - t0)
        offline = build_offline(grid_cfg, tent_cfg, params.range_fn())

        world = generate_forest_map(100.0, 0.2, seed)
        cycles = timing.warmup_cycles + timing.measure_cycles
        scenario = ScenarioConfig(
            world=world,
            start=Pose(p=[-6.5, 0.0, params.scenario["flight_z"]], q=quat_from_yaw(0.0)),
            goals=[np.array([60.0, 0.0, params.scenario["flight_z"]])],  # out of reach: keep looping
            goal_tolerance=params.scenario["goal_tolerance"],
            time_limit=(cycles + 2) * params.scenario["d_t"],
            d_t=params.scenario["d_t"],
            grid_cfg=grid_cfg,
            tentacle_cfg=tent_cfg,
            heuristic_params=params.heuristic_params(),
            control_params=params.control_params(),
            sensor_cfg=params.sensor_config(),
            robot=params.robot_model(),
            range_fn=params.range_fn(),
        )
        timer = CycleTimer(warmup=timing.warmup_cycles)
        run_scenario(scenario, offline=offline, timer=timer, cycle_limit=cycles)
        reports.append(
            TimingReport(
                label=label,
                d_v=grid_cfg.d_v,
                n_v=grid_cfg.n_v_x,
                n_tentacles=len(offline.tset),
                init_arrays_s=init_arrays,
                init_tentacles_s=offline.init_tentacles_s,
                phase_means_ms=timer.means_ms(),
            )
        )
    return reports


def emit_timing(reports: list[TimingReport], outdir) -> Path:
    """Write timing.csv: one row per probe config."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "timing.csv"
    with open(path, "w") as f:
        f.write(
            "label,d_v,n_v,n_tentacles,init_arrays_s,init_tentacles_s,"
            "map_update_ms,occupancy_heuristics_ms,selection_ms,next_pose_ms,cycle_total_ms\n"
        )
        for r in reports:
            means = r.phase_means_ms
            f.write(
                f"{r.label},{r.d_v:.6f},{r.n_v},{r.n_tentacles},"
                f"{r.init_arrays_s:.6f},{r.init_tentacles_s:.6f},"
                f"{means['map_update']:.6f},{means['occupancy_heuristics']:.6f},"
                f"{means['selection']:.6f},{means['next_pose']:.6f},{r.cycle_total_ms:.6f}\n"
            )
    return path


def format_timing_table(reports: list[TimingReport]) -> str:
    buf = io.StringIO()
    header = f"{'config':<22}{'init arrays [s]':>16}{'init tentacles [s]':>20}{'cycle total [ms]':>18}"
    buf.write(header + "\n")
    for r in reports:
        buf.write(
            f"{r.label:<22}{r.init_arrays_s:>16.4f}{r.init_tentacles_s:>20.3f}{r.cycle_total_ms:>18.3f}\n"
        )
    return buf.getvalue()
