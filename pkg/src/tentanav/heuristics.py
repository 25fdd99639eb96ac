"""Per-cycle heuristic evaluation of all tentacles and best-tentacle selection.

Five heuristics are computed per tentacle each cycle:

* navigability: three-valued gate from the first blocked navigation point
  versus the crash distance (1 navigable, 0 non-navigable, -1 temporarily
  navigable);
* clearance: 1 - l_obs/l_t, from totally clear (0) to blocked at the robot (1);
* nearby clutter: weighted occupancy over the tentacle's Support and
  Priority voxels, normalized by the total weight;
* goal closeness: distance from a selected on-trajectory point to the goal,
  normalized by the per-cycle maximum over tentacles;
* smoothness: distance between first navigation points of this tentacle and
  the previously selected one, normalized by the per-cycle maximum.

The total cost is a weighted sum of the last four; selection takes the
arg-min over tentacles whose navigability is nonzero. The module provides
per-tentacle reference functions with the exact contract semantics, plus a
vectorized `CycleEvaluator` that computes the identical quantities for the
whole tentacle set at once (used by the simulator's main loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from .geometry import Pose
from .grid import RobotCenteredGrid
from .tentacles import ClassifiedVoxels, Tentacle, TentacleSet, TentacleVoxels


@dataclass(frozen=True)
class HeuristicParams:
    """Crash-distance scale, occupancy error threshold, and heuristic weights."""

    alpha_crash: float = 0.15
    tau_D_err: float = 0.0
    lambda_clear: float = 2.0
    lambda_clut: float = 1.0
    lambda_close: float = 1.2
    lambda_smo: float = 0.05

    def __post_init__(self):
        if not 0 < self.alpha_crash <= 1:
            raise ValueError(f"alpha_crash must be in (0, 1], got {self.alpha_crash}")
        if self.tau_D_err < 0:
            raise ValueError("tau_D_err must be >= 0")
        for name in ("lambda_clear", "lambda_clut", "lambda_close", "lambda_smo"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass
class OccupancySummary:
    """Occupancy aggregates of one tentacle for the current cycle.

    H[k] counts occupied Priority voxels whose closest navigation point is k
    (1-based; H[0] is unused). k_obs is the smallest k whose counter exceeds
    tau_D_err, or None when the tentacle is unobstructed; l_obs is the arc
    length to that point (l_t when clear). Omega_tot/Omega_obs are the
    total and occupancy-weighted sums of voxel weights over Support and
    Priority voxels.
    """

    H: np.ndarray
    k_obs: Optional[int]
    l_obs: float
    l_t: float
    n_s: int
    Omega_tot: float
    Omega_obs: float


def occupancy_counters(
    tentacle: Tentacle,
    voxels: TentacleVoxels,
    grid: RobotCenteredGrid,
    params: HeuristicParams,
) -> OccupancySummary:
    """Count occupied Priority voxels per navigation point and locate the
    first blocked one; also accumulate the clutter sums."""
    rho = grid.A_rho[voxels.o] if len(voxels) else np.empty(0)
    occupied_priority = (voxels.c == 1) & (rho > 0)
    H = np.bincount(voxels.m[occupied_priority], minlength=tentacle.n_s + 1).astype(np.int64)
    blocked = np.nonzero(H > params.tau_D_err)[0]
    if len(blocked):
        k_obs: Optional[int] = int(blocked[0])
        l_obs = tentacle.length * k_obs / tentacle.n_s
    else:
        k_obs = None
        l_obs = tentacle.length
    Omega_tot = float(voxels.beta.sum()) if len(voxels) else 0.0
    Omega_obs = float((voxels.beta * rho).sum()) if len(voxels) else 0.0
    return OccupancySummary(
        H=H,
        k_obs=k_obs,
        l_obs=l_obs,
        l_t=tentacle.length,
        n_s=tentacle.n_s,
        Omega_tot=Omega_tot,
        Omega_obs=Omega_obs,
    )


def navigability(summary: OccupancySummary, alpha_crash: float) -> int:
    """Three-valued navigability from the first blocked arc length.

    The crash distance is alpha_crash * l_t. A tentacle blocked exactly at
    the crash distance counts as temporarily navigable (-1).
    """
    tau_crash = alpha_crash * summary.l_t
    if summary.l_obs == summary.l_t:
        return 1
    if summary.l_obs < tau_crash:
        return 0
    return -1


def clearance(summary: OccupancySummary) -> float:
    """Obstacle proximity along the tentacle: 0 totally clear, 1 blocked at the robot."""
    return 1.0 - summary.l_obs / summary.l_t


def clutter(voxels: TentacleVoxels, grid: RobotCenteredGrid) -> float:
    """Weighted occupancy ratio over the tentacle's Support and Priority voxels.

    An empty voxel set yields 0: no observable voxels means no evidence of
    clutter.
    """
    if len(voxels) == 0:
        return 0.0
    Omega_tot = voxels.beta.sum()
    if Omega_tot == 0.0:
        return 0.0
    Omega_obs = (voxels.beta * grid.A_rho[voxels.o]).sum()
    return float(Omega_obs / Omega_tot)


def closeness_raw(
    tentacle: Tentacle,
    robot_pose: Pose,
    goal_w: np.ndarray,
    summary: OccupancySummary,
) -> float:
    """Distance from the tentacle's selected point to the goal (pre-normalization).

    When the goal lies beyond the tentacle's length, the selected point is
    the first blocked navigation point (the tip when clear). Otherwise the
    goal distance is projected onto the arc length, clamped to the sampled
    range, and the nearest navigation point is selected.
    """
    goal_R = robot_pose.inverse_transform(np.asarray(goal_w, dtype=float))
    goal_dist = float(np.linalg.norm(goal_R))
    if goal_dist > tentacle.length:
        k_sel = summary.k_obs if summary.k_obs is not None else tentacle.n_s
    else:
        arc = min(max(goal_dist, tentacle.delta), tentacle.length)
        k_sel = int(np.clip(np.round(arc / tentacle.delta), 1, tentacle.n_s))
    p_s_world = robot_pose.transform(tentacle.nav_points[k_sel - 1])
    return float(np.linalg.norm(p_s_world - goal_w))


def smoothness_raw(tentacle: Tentacle, prev_best: Optional[Tentacle]) -> float:
    """Distance between first navigation points of this tentacle and the
    previously selected one; 0 on the first cycle (no previous best)."""
    if prev_best is None:
        return 0.0
    return float(np.linalg.norm(tentacle.first_point - prev_best.first_point))


def normalize(raw: Sequence[float]) -> np.ndarray:
    """Divide by the maximum; an all-zero (or empty) input stays all zero."""
    arr = np.asarray(raw, dtype=float)
    if len(arr) == 0:
        return arr
    top = arr.max()
    if top <= 0.0:
        return np.zeros_like(arr)
    return arr / top


@dataclass
class TentacleEvaluation:
    """The five heuristic values and total cost of one tentacle."""

    pi_nav: int
    pi_clear: float
    pi_clut: float
    pi_close: float
    pi_smo: float
    F: float = 0.0


def total_cost(ev: TentacleEvaluation, params: HeuristicParams) -> float:
    """Weighted sum of the four continuous heuristics."""
    return (
        params.lambda_clear * ev.pi_clear
        + params.lambda_clut * ev.pi_clut
        + params.lambda_close * ev.pi_close
        + params.lambda_smo * ev.pi_smo
    )


def select_best(evals: Sequence[TentacleEvaluation]) -> Optional[int]:
    """Arg-min of F over tentacles with nonzero navigability.

    Ties break to the lowest index; returns None when every tentacle is
    non-navigable (the caller should hold).
    """
    best: Optional[int] = None
    best_cost = math.inf
    for j, ev in enumerate(evals):
        if ev.pi_nav == 0:
            continue
        if ev.F < best_cost:
            best = j
            best_cost = ev.F
    return best


def evaluate_cycle(
    tset: TentacleSet,
    classified: ClassifiedVoxels,
    grid: RobotCenteredGrid,
    robot_pose: Pose,
    goal_w: np.ndarray,
    prev_best: Optional[int],
    params: HeuristicParams,
) -> tuple[list[TentacleEvaluation], list[OccupancySummary]]:
    """Reference per-tentacle evaluation of the whole set for one cycle.

    Composes the per-tentacle heuristics, applies the per-cycle
    normalizations, and fills the total costs. The vectorized
    `CycleEvaluator` computes the same quantities; this path is the readable
    contract implementation used for small runs and cross-checking.
    """
    prev_tentacle = tset[prev_best] if prev_best is not None else None
    summaries = [
        occupancy_counters(tset[j], classified.records(j), grid, params) for j in range(len(tset))
    ]
    close_raw = [closeness_raw(tset[j], robot_pose, goal_w, summaries[j]) for j in range(len(tset))]
    smo_raw = [smoothness_raw(tset[j], prev_tentacle) for j in range(len(tset))]
    pi_close = normalize(close_raw)
    pi_smo = normalize(smo_raw)
    evals = []
    for j in range(len(tset)):
        ev = TentacleEvaluation(
            pi_nav=navigability(summaries[j], params.alpha_crash),
            pi_clear=clearance(summaries[j]),
            pi_clut=clutter(classified.records(j), grid),
            pi_close=float(pi_close[j]),
            pi_smo=float(pi_smo[j]),
        )
        ev.F = total_cost(ev, params)
        evals.append(ev)
    return evals, summaries


@dataclass
class EvaluationTable:
    """Vectorized per-cycle evaluation results for all tentacles."""

    pi_nav: np.ndarray
    pi_clear: np.ndarray
    pi_clut: np.ndarray
    pi_close: np.ndarray
    pi_smo: np.ndarray
    F: np.ndarray
    k_obs: np.ndarray  # first blocked nav-point index per tentacle; 0 = none
    l_obs: np.ndarray

    def __len__(self) -> int:
        return len(self.F)

    def k_obs_of(self, j: int) -> Optional[int]:
        k = int(self.k_obs[j])
        return k if k > 0 else None

    def rows(self) -> list[TentacleEvaluation]:
        return [
            TentacleEvaluation(
                pi_nav=int(self.pi_nav[j]),
                pi_clear=float(self.pi_clear[j]),
                pi_clut=float(self.pi_clut[j]),
                pi_close=float(self.pi_close[j]),
                pi_smo=float(self.pi_smo[j]),
                F=float(self.F[j]),
            )
            for j in range(len(self))
        ]

    def select_best(self) -> Optional[int]:
        mask = self.pi_nav != 0
        if not mask.any():
            return None
        candidates = np.nonzero(mask)[0]
        return int(candidates[np.argmin(self.F[candidates])])

    def dump_records(self, out: TextIO, cycle: int):
        """One 'cycle j pi_nav pi_clear pi_clut pi_close pi_smo F' line per tentacle."""
        for j in range(len(self)):
            out.write(
                f"{cycle} {j} {int(self.pi_nav[j])} {self.pi_clear[j]:.6f} "
                f"{self.pi_clut[j]:.6f} {self.pi_close[j]:.6f} {self.pi_smo[j]:.6f} {self.F[j]:.6f}\n"
            )


def _concat_ranges(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate [s, s+len) integer ranges without a Python loop."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    ends = np.cumsum(lengths)
    return np.arange(total, dtype=np.int64) + np.repeat(starts - (ends - lengths), lengths)


class CycleEvaluator:
    """Evaluates every tentacle against the refreshed grid in bulk.

    Flattens all classified voxel records into shared arrays at construction
    and keeps a voxel-to-record index so each cycle only touches records of
    voxels that are actually occupied. `active_indices` is the union of all
    referenced grid voxels; refreshing just those each cycle is sufficient,
    since no other A_rho entry is ever read.
    """

    def __init__(self, tset: TentacleSet, classified: ClassifiedVoxels):
        self.tset = tset
        n_t = len(tset)
        self.n_s = np.array([t.n_s for t in tset], dtype=np.int64)
        self.l_t = np.array([t.length for t in tset])
        self.delta = np.array([t.delta for t in tset])
        self.first_points = np.stack([t.first_point for t in tset])
        max_ns = int(self.n_s.max())
        self._stride = max_ns + 1
        # nav points padded with the tip so gathers stay in-bounds
        self.navs = np.stack(
            [
                np.vstack([t.nav_points, np.repeat(t.nav_points[-1:], max_ns - t.n_s, axis=0)])
                for t in tset
            ]
        )
        per = [classified.records(j) for j in range(n_t)]
        self.rec_j = np.concatenate([np.full(len(v), j, dtype=np.int32) for j, v in enumerate(per)])
        self.rec_o = np.concatenate([v.o for v in per]).astype(np.int64)
        self.rec_beta = np.concatenate([v.beta for v in per])
        self.rec_m = np.concatenate([v.m for v in per]).astype(np.int64)
        self.rec_prio = np.concatenate([v.c for v in per]).astype(bool)
        self.rec_hkey = self.rec_j.astype(np.int64) * self._stride + self.rec_m
        self.Omega_tot = np.bincount(self.rec_j, weights=self.rec_beta, minlength=n_t)
        self.active_indices, rec_active = np.unique(self.rec_o, return_inverse=True)
        order = np.argsort(rec_active, kind="stable")
        self._csr_rows = order.astype(np.int64)
        counts = np.bincount(rec_active, minlength=len(self.active_indices))
        self._csr_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        # position of each record's voxel in active_indices, for cheap rho gathers
        self._rec_active = rec_active.astype(np.int64)

    def evaluate(
        self,
        grid: RobotCenteredGrid,
        robot_pose: Pose,
        goal_w: np.ndarray,
        prev_best: Optional[int],
        params: HeuristicParams,
    ) -> EvaluationTable:
        n_t = len(self.tset)
        rho_active = grid.A_rho[self.active_indices]
        occupied = np.nonzero(rho_active > 0)[0]
        starts = self._csr_ptr[occupied]
        lengths = self._csr_ptr[occupied + 1] - starts
        rows = self._csr_rows[_concat_ranges(starts, lengths)]

        # occupancy counters over occupied Priority records, keyed by (tentacle, nav point)
        prio_rows = rows[self.rec_prio[rows]]
        H = np.bincount(self.rec_hkey[prio_rows], minlength=n_t * self._stride).reshape(
            n_t, self._stride
        )
        blocked = H > params.tau_D_err
        has_obs = blocked.any(axis=1)
        k_obs = np.where(has_obs, blocked.argmax(axis=1), 0).astype(np.int64)
        l_obs = np.where(has_obs, self.l_t * k_obs / self.n_s, self.l_t)

        tau_crash = params.alpha_crash * self.l_t
        pi_nav = np.where(l_obs == self.l_t, 1, np.where(l_obs < tau_crash, 0, -1)).astype(np.int8)
        pi_clear = 1.0 - l_obs / self.l_t

        rho_rows = rho_active[self._rec_active[rows]]
        Omega_obs = np.bincount(
            self.rec_j[rows], weights=self.rec_beta[rows] * rho_rows, minlength=n_t
        )
        pi_clut = np.divide(
            Omega_obs, self.Omega_tot, out=np.zeros(n_t), where=self.Omega_tot > 0
        )

        goal_w = np.asarray(goal_w, dtype=float)
        goal_dist = float(np.linalg.norm(robot_pose.inverse_transform(goal_w)))
        far = goal_dist > self.l_t
        k_proj = np.clip(
            np.round(np.clip(goal_dist, self.delta, self.l_t) / self.delta), 1, self.n_s
        ).astype(np.int64)
        k_sel = np.where(far, np.where(has_obs, k_obs, self.n_s), k_proj)
        p_s = self.navs[np.arange(n_t), k_sel - 1]
        close_raw = np.linalg.norm(robot_pose.transform(p_s) - goal_w, axis=1)
        pi_close = normalize(close_raw)

        if prev_best is None:
            pi_smo = np.zeros(n_t)
        else:
            pi_smo = normalize(
                np.linalg.norm(self.first_points - self.first_points[prev_best], axis=1)
            )

        F = (
            params.lambda_clear * pi_clear
            + params.lambda_clut * pi_clut
            + params.lambda_close * pi_close
            + params.lambda_smo * pi_smo
        )
        return EvaluationTable(
            pi_nav=pi_nav,
            pi_clear=pi_clear,
            pi_clut=pi_clut,
            pi_close=pi_close,
            pi_smo=pi_smo,
            F=F,
            k_obs=k_obs,
            l_obs=l_obs,
        )
