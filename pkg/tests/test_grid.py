import math

import numpy as np
import pytest

from tentanav import (
    GridConfig,
    OccupancyMap,
    PointCloud,
    Pose,
    init_grid,
    linear_index,
    linear_indices,
    refresh_occupancy,
    voxel_center,
    voxel_centers,
)
from tentanav.geometry import quat_from_yaw


CFG4 = GridConfig(d_v=1.0, n_v_x=4, n_v_y=4, n_v_z=4)


class TestGridConfig:
    def test_extents_and_counts(self):
        cfg = GridConfig(d_v=0.5, n_v_x=4, n_v_y=6, n_v_z=2)
        assert cfg.extents == (2.0, 3.0, 1.0)
        assert cfg.total_voxels == 48

    @pytest.mark.parametrize("bad", [dict(d_v=0.0), dict(d_v=-1.0)])
    def test_rejects_nonpositive_voxel_size(self, bad):
        with pytest.raises(ValueError):
            GridConfig(n_v_x=4, n_v_y=4, n_v_z=4, **bad)

    def test_rejects_odd_counts(self):
        with pytest.raises(ValueError, match="even"):
            GridConfig(d_v=1.0, n_v_x=5, n_v_y=4, n_v_z=4)

    def test_rejects_zero_counts(self):
        with pytest.raises(ValueError):
            GridConfig(d_v=1.0, n_v_x=0, n_v_y=4, n_v_z=4)


class TestLinearIndex:
    def test_center_cell(self):
        assert linear_index((0.1, 0.1, 0.1), CFG4) == 42

    def test_out_of_grid_is_absent(self):
        assert linear_index((2.0, 0.1, 0.1), CFG4) is None

    def test_negative_coordinate(self):
        assert linear_index((-2.0, 0.1, 0.1), CFG4) == 40

    def test_upper_boundary_belongs_to_next_cell(self):
        # x = 1.0 is the upper boundary of the cell [0, 1): floor puts it in the next one
        cfg = GridConfig(d_v=1.0, n_v_x=6, n_v_y=6, n_v_z=6)
        o_low = linear_index((0.999999, 0.1, 0.1), cfg)
        o_hi = linear_index((1.0, 0.1, 0.1), cfg)
        assert o_hi == o_low + 1

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-3, 3, size=(500, 3))
        out = linear_indices(pts, CFG4)
        for p, o in zip(pts, out):
            expected = linear_index(p, CFG4)
            assert (o == -1 and expected is None) or o == expected


class TestVoxelCenter:
    def test_center_voxel(self):
        assert np.allclose(voxel_center(42, CFG4), [0.5, 0.5, 0.5])

    def test_corner_voxel(self):
        assert np.allclose(voxel_center(0, CFG4), [-1.5, -1.5, -1.5])

    def test_out_of_range_raises(self):
        with pytest.raises(IndexError):
            voxel_center(64, CFG4)
        with pytest.raises(IndexError):
            voxel_center(-1, CFG4)

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    @pytest.mark.parametrize("d_v", [1.0, 0.25])
    def test_round_trip_cubic(self, n, d_v):
        cfg = GridConfig(d_v=d_v, n_v_x=n, n_v_y=n, n_v_z=n)
        o = np.arange(cfg.total_voxels)
        assert np.array_equal(linear_indices(voxel_centers(o, cfg), cfg), o)

    def test_round_trip_mixed_counts(self):
        cfg = GridConfig(d_v=0.3, n_v_x=4, n_v_y=8, n_v_z=2)
        for o in range(cfg.total_voxels):
            assert linear_index(voxel_center(o, cfg), cfg) == o

    def test_injectivity_of_centers(self):
        cfg = GridConfig(d_v=0.5, n_v_x=6, n_v_y=4, n_v_z=4)
        centers = voxel_centers(np.arange(cfg.total_voxels), cfg)
        assert len(np.unique(centers, axis=0)) == cfg.total_voxels


class TestInitGrid:
    def test_small_grid_zero_occupancy(self):
        grid = init_grid(GridConfig(d_v=1.0, n_v_x=2, n_v_y=2, n_v_z=2))
        assert len(grid.A_p) == 8
        assert len(grid.A_rho) == 8
        assert (grid.A_rho == 0).all()

    def test_positions_match_voxel_centers(self):
        cfg = GridConfig(d_v=0.7, n_v_x=4, n_v_y=2, n_v_z=6)
        grid = init_grid(cfg)
        assert np.allclose(grid.A_p, voxel_centers(np.arange(cfg.total_voxels), cfg))

    def test_reference_voxel_count(self):
        cfg = GridConfig(d_v=0.2, n_v_x=110, n_v_y=110, n_v_z=110)
        assert cfg.total_voxels == 1_331_000
        grid = init_grid(cfg)
        assert len(grid.A_p) == 1_331_000

    def test_doubling_counts_scales_voxels_8x(self):
        a = GridConfig(d_v=0.2, n_v_x=110, n_v_y=110, n_v_z=110)
        b = GridConfig(d_v=0.1, n_v_x=220, n_v_y=220, n_v_z=220)
        assert b.total_voxels == 8 * a.total_voxels

    def test_absurd_size_raises_resource_error(self):
        with pytest.raises(MemoryError):
            init_grid(GridConfig(d_v=0.001, n_v_x=2048, n_v_y=2048, n_v_z=2048))


class TestRefreshOccupancy:
    def setup_method(self):
        self.cfg = GridConfig(d_v=0.5, n_v_x=8, n_v_y=8, n_v_z=8)
        self.grid = init_grid(self.cfg)

    def test_empty_map_all_zero(self):
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        refresh_occupancy(self.grid, Pose(), occ)
        assert (self.grid.A_rho == 0).all()

    def test_point_at_robot_position_occupies_center(self):
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        occ.insert_cloud(PointCloud(points=[[0.1, 0.1, 0.1]], beliefs=[1.0]), Pose())
        refresh_occupancy(self.grid, Pose(), occ)
        o = linear_index((0.1, 0.1, 0.1), self.cfg)
        assert self.grid.A_rho[o] > 0

    def test_rotation_moves_occupancy_to_rotated_voxel(self):
        # fixed world obstacle at (1.1, 0.1, 0.1); robot yawed 90 deg sees it at (0.1, -1.1, 0.1)
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        occ.insert_cloud(PointCloud(points=[[1.1, 0.1, 0.1]], beliefs=[1.0]), Pose())
        pose = Pose(q=quat_from_yaw(math.pi / 2))
        refresh_occupancy(self.grid, pose, occ)
        o_rotated = linear_index((0.1, -1.1, 0.1), self.cfg)
        o_unrotated = linear_index((1.1, 0.1, 0.1), self.cfg)
        assert self.grid.A_rho[o_rotated] > 0
        assert self.grid.A_rho[o_unrotated] == 0

    def test_identity_pose_matches_direct_queries(self):
        rng = np.random.default_rng(11)
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        pts = rng.uniform(-2, 2, size=(60, 3))
        occ.insert_cloud(PointCloud(points=pts, beliefs=rng.uniform(0, 1, 60)), Pose())
        refresh_occupancy(self.grid, Pose(), occ)
        direct = np.array([occ.query(p) for p in self.grid.A_p])
        assert np.array_equal(self.grid.A_rho, direct)

    def test_occupancy_stays_in_unit_range(self):
        rng = np.random.default_rng(12)
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        pts = rng.uniform(-2, 2, size=(200, 3))
        occ.insert_cloud(PointCloud(points=pts, beliefs=rng.uniform(0, 1, 200)), Pose())
        refresh_occupancy(self.grid, Pose(p=[0.3, -0.2, 0.1], q=quat_from_yaw(0.4)), occ)
        assert (self.grid.A_rho >= 0).all() and (self.grid.A_rho <= 1).all()

    def test_partial_refresh_touches_only_requested_indices(self):
        occ = OccupancyMap(resolution=0.5, bound_radius=20.0)
        occ.insert_cloud(PointCloud(points=[[0.1, 0.1, 0.1]], beliefs=[1.0]), Pose())
        self.grid.A_rho[:] = 0.5
        o = linear_index((0.1, 0.1, 0.1), self.cfg)
        refresh_occupancy(self.grid, Pose(), occ, indices=np.array([o]))
        assert self.grid.A_rho[o] == 1.0
        untouched = np.delete(self.grid.A_rho, o)
        assert (untouched == 0.5).all()


class TestPose:
    def test_rejects_non_unit_quaternion(self):
        with pytest.raises(ValueError):
            Pose(q=[0.0, 0.0, 0.0, 1.1])

    def test_transform_round_trip(self):
        pose = Pose(p=[1.0, -2.0, 0.5], q=quat_from_yaw(0.7))
        local = np.array([0.3, 0.4, -0.1])
        assert np.allclose(pose.inverse_transform(pose.transform(local)), local)
