import io
import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from tentanav import (
    GridConfig,
    TentacleConfig,
    ellipsoid_range,
    extract_support_priority,
    occupancy_weight,
    sample_tentacles,
    voxel_centers,
)
from tentanav.tentacles import PRIORITY, SUPPORT


def config(**overrides):
    base = dict(
        n_phi=5,
        n_theta=3,
        phi_cov=math.radians(60),
        theta_cov=math.radians(45),
        l_t_max=10.0,
        delta_d=0.5,
        tau_P=0.35,
        tau_S=0.5,
        beta_max=1.0,
        alpha_beta=10.0,
    )
    base.update(overrides)
    return TentacleConfig(**base)


class TestConfig:
    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError, match="tau_S > tau_P"):
            config(tau_P=0.5, tau_S=0.3)

    def test_counts_at_least_one(self):
        with pytest.raises(ValueError):
            config(n_phi=0)

    def test_tentacle_count(self):
        assert config(n_phi=7, n_theta=4).n_tentacles == 28


class TestSampling:
    def test_single_sample_points_straight_ahead(self):
        ts = sample_tentacles(config(n_phi=1, n_theta=1))
        t = ts[0]
        assert t.yaw == 0.0 and t.pitch == 0.0
        assert np.allclose(t.nav_points[-1], [10.0, 0.0, 0.0])

    def test_yaw_samples_inclusive_uniform(self):
        ts = sample_tentacles(config(n_phi=3, n_theta=1))
        yaws = sorted(math.degrees(t.yaw) for t in ts)
        assert yaws == pytest.approx([-30.0, 0.0, 30.0])

    def test_nav_point_spacing(self):
        ts = sample_tentacles(config(n_phi=1, n_theta=1, delta_d=0.5))
        t = ts[0]
        assert t.n_s == 20
        arcs = np.linalg.norm(t.nav_points, axis=1)
        assert np.allclose(arcs, 0.5 * np.arange(1, 21))

    def test_consecutive_spacing_uniform(self):
        ts = sample_tentacles(config(n_phi=3, n_theta=3, delta_d=0.4))
        for t in ts:
            gaps = np.linalg.norm(np.diff(t.nav_points, axis=0), axis=1)
            assert np.allclose(gaps, t.delta, atol=1e-9)
            assert abs(t.nav_points[-1] @ t.direction - t.length) < 1e-9

    def test_non_divisible_length_respaces(self):
        # 10 / 0.35 = 28.57 -> 29 points spaced 10/29
        ts = sample_tentacles(config(n_phi=1, n_theta=1, delta_d=0.35))
        t = ts[0]
        assert t.n_s == 29
        assert t.delta == pytest.approx(10.0 / 29)

    def test_set_size(self):
        assert len(sample_tentacles(config(n_phi=5, n_theta=3))) == 15

    def test_sensor_range_limits_length(self):
        ts = sample_tentacles(config(n_phi=1, n_theta=1), sensor_range_fn=lambda d: 4.0)
        assert ts[0].length == 4.0

    def test_ellipsoid_range(self):
        fn = ellipsoid_range(10.0, 10.0, 5.0)
        assert fn(np.array([1.0, 0.0, 0.0])) == pytest.approx(10.0)
        assert fn(np.array([0.0, 0.0, 1.0])) == pytest.approx(5.0)
        ts = sample_tentacles(config(n_phi=1, n_theta=3), sensor_range_fn=fn)
        lengths = sorted(t.length for t in ts)
        assert lengths[-1] == pytest.approx(10.0)  # level tentacle
        assert lengths[0] < 10.0  # pitched tentacles shortened


class TestOccupancyWeight:
    def test_priority_gets_max_weight(self):
        assert occupancy_weight(PRIORITY, 0.05, config()) == 1.0
        assert occupancy_weight(PRIORITY, 0.3, config()) == 1.0

    def test_support_weight_decays(self):
        assert occupancy_weight(SUPPORT, 0.4, config()) == pytest.approx(0.25)
        assert occupancy_weight(SUPPORT, 0.5, config()) == pytest.approx(0.2)

    def test_support_inside_priority_band_is_contract_violation(self):
        with pytest.raises(ValueError, match="classification"):
            occupancy_weight(SUPPORT, 0.3, config())


class TestExtraction:
    GRID = GridConfig(d_v=0.25, n_v_x=20, n_v_y=20, n_v_z=20)
    TENT = TentacleConfig(
        n_phi=5,
        n_theta=1,
        phi_cov=math.radians(60),
        theta_cov=math.radians(45),
        l_t_max=2.2,
        delta_d=0.35,
        tau_P=0.35,
        tau_S=0.5,
        beta_max=1.0,
        alpha_beta=10.0,
    )

    def brute_force(self, tentacle):
        centers = voxel_centers(np.arange(self.GRID.total_voxels), self.GRID)
        dists = cdist(centers, tentacle.nav_points)
        m = dists.argmin(axis=1)
        d_min = dists[np.arange(len(centers)), m]
        keep = d_min <= self.TENT.tau_S
        prio = d_min <= self.TENT.tau_P
        beta = np.where(prio, 1.0, 1.0 / (10.0 * d_min))
        return (
            np.nonzero(keep)[0],
            beta[keep],
            (m[keep] + 1).astype(np.int32),
            prio[keep].astype(np.int8),
        )

    def test_matches_brute_force_exactly(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        for j, tentacle in enumerate(ts):
            o, beta, m, c = self.brute_force(tentacle)
            recs = cv.records(j)
            assert np.array_equal(recs.o, o)
            assert np.array_equal(recs.m, m)
            assert np.array_equal(recs.c, c)
            assert np.array_equal(recs.beta, beta)

    def test_classes_partition_by_distance(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        for j, tentacle in enumerate(ts):
            recs = cv.records(j)
            centers = voxel_centers(recs.o, self.GRID)
            d = np.linalg.norm(centers - tentacle.nav_points[recs.m - 1], axis=1)
            assert ((recs.c == 1) == (d <= self.TENT.tau_P)).all()
            assert (d <= self.TENT.tau_S).all()

    def test_priority_support_disjoint_and_bounded(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        for j in range(len(ts)):
            recs = cv.records(j)
            assert len(np.unique(recs.o)) == len(recs.o)  # each voxel classified once
            assert set(np.unique(recs.c)) <= {0, 1}
            assert (recs.m >= 1).all() and (recs.m <= ts[j].n_s).all()
        assert cv.total_records <= len(ts) * self.GRID.total_voxels

    def test_closest_point_is_argmin(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        for j, tentacle in enumerate(ts):
            recs = cv.records(j)
            centers = voxel_centers(recs.o, self.GRID)
            dists = cdist(centers, tentacle.nav_points)
            claimed = dists[np.arange(len(recs.o)), recs.m - 1]
            assert np.allclose(claimed, dists.min(axis=1), atol=0, rtol=0)
            # ties resolve to the lower index
            first_min = dists.argmin(axis=1) + 1
            assert np.array_equal(recs.m, first_min)

    def test_support_weight_monotone_in_distance(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        for j, tentacle in enumerate(ts):
            recs = cv.records(j)
            support = recs.c == 0
            centers = voxel_centers(recs.o[support], self.GRID)
            d = np.linalg.norm(centers - tentacle.nav_points[recs.m[support] - 1], axis=1)
            order = np.argsort(d)
            beta_sorted = recs.beta[support][order]
            assert (np.diff(beta_sorted) <= 1e-12).all()

    def test_tentacle_beyond_grid_keeps_in_grid_voxels_only(self):
        small = GridConfig(d_v=0.25, n_v_x=8, n_v_y=8, n_v_z=8)
        ts = sample_tentacles(self.TENT)  # length 2.2 > half extent 1.0
        cv = extract_support_priority(ts, self.TENT, small)
        for j in range(len(ts)):
            recs = cv.records(j)
            assert (recs.o >= 0).all() and (recs.o < small.total_voxels).all()

    def test_export_format(self):
        ts = sample_tentacles(self.TENT)
        cv = extract_support_priority(ts, self.TENT, self.GRID)
        buf = io.StringIO()
        cv.export_text(buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == cv.total_records
        j, o, beta, m, c = lines[0].split()
        assert int(j) == 0 and int(c) in (0, 1) and float(beta) > 0
