import io
import math

import numpy as np
import pytest

from tentanav import OccupancyMap, PointCloud, Pose
from tentanav.geometry import quat_from_yaw


def make_map(resolution=0.5, bound_radius=20.0):
    return OccupancyMap(resolution=resolution, bound_radius=bound_radius)


class TestPointCloud:
    def test_rejects_out_of_range_beliefs(self):
        with pytest.raises(ValueError):
            PointCloud(points=[[0, 0, 0]], beliefs=[1.5])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PointCloud(points=[[0, 0, 0]], beliefs=[0.5, 0.5])


class TestInsert:
    def test_empty_cloud_is_noop(self):
        m = make_map()
        m.insert_cloud(PointCloud(points=np.empty((0, 3)), beliefs=[]), Pose())
        assert len(m) == 0

    def test_identity_transform_insert(self):
        m = make_map()
        m.insert_cloud(PointCloud(points=[[1.0, 0.0, 0.0]], beliefs=[1.0]), Pose())
        assert m.query([1.0, 0.0, 0.0]) == 1.0

    def test_latest_write_wins(self):
        m = make_map()
        m.insert_cloud(PointCloud(points=[[1.0, 0.0, 0.0]], beliefs=[1.0]), Pose())
        m.insert_cloud(PointCloud(points=[[1.0, 0.0, 0.0]], beliefs=[0.3]), Pose())
        assert m.query([1.0, 0.0, 0.0]) == 0.3

    def test_sensor_pose_transforms_points(self):
        m = make_map()
        pose = Pose(p=[2.0, 0.0, 0.0], q=quat_from_yaw(math.pi / 2))
        # sensor-frame (1, 0, 0) lands at world (2, 1, 0)
        m.insert_cloud(PointCloud(points=[[1.0, 0.0, 0.0]], beliefs=[0.8]), pose)
        assert m.query([2.0, 1.0, 0.0]) == 0.8
        assert m.query([3.0, 0.0, 0.0]) == 0.0

    def test_insert_idempotent(self):
        m = make_map()
        cloud = PointCloud(points=[[0.2, 0.7, -1.0], [1.4, 1.4, 0.0]], beliefs=[0.5, 0.9])
        m.insert_cloud(cloud, Pose())
        first = dict(m._cells)
        m.insert_cloud(cloud, Pose())
        assert m._cells == first


class TestQuery:
    def test_unobserved_reads_zero(self):
        assert make_map().query([5.0, 5.0, 5.0]) == 0.0

    def test_queries_within_one_cell_agree(self):
        m = make_map()
        m.insert_cloud(PointCloud(points=[[1.1, 1.1, 1.1]], beliefs=[0.8]), Pose())
        assert m.query([1.01, 1.2, 1.4]) == m.query([1.49, 1.01, 1.01]) == 0.8

    def test_query_many_matches_scalar(self):
        rng = np.random.default_rng(5)
        m = make_map()
        pts = rng.uniform(-4, 4, size=(80, 3))
        m.insert_cloud(PointCloud(points=pts, beliefs=rng.uniform(0, 1, 80)), Pose())
        queries = rng.uniform(-5, 5, size=(300, 3))
        batch = m.query_many(queries)
        scalars = np.array([m.query(q) for q in queries])
        assert np.array_equal(batch, scalars)

    def test_query_insert_consistency(self):
        rng = np.random.default_rng(6)
        m = make_map(resolution=0.2)
        pts = rng.uniform(-3, 3, size=(50, 3))
        beliefs = rng.uniform(0, 1, 50)
        m.insert_cloud(PointCloud(points=pts, beliefs=beliefs), Pose())
        # latest write per cell: walk the cloud in order
        expected = {}
        for p, b in zip(pts, beliefs):
            expected[tuple(np.floor(p / 0.2).astype(int))] = b
        for p, _ in zip(pts, beliefs):
            assert m.query(p) == expected[tuple(np.floor(p / 0.2).astype(int))]


class TestPrune:
    def test_within_radius_unchanged(self):
        m = make_map(bound_radius=10.0)
        m.insert_cloud(PointCloud(points=[[1, 1, 0], [2, -2, 1]], beliefs=[0.5, 0.5]), Pose())
        m.prune([0.0, 0.0, 0.0])
        assert len(m) == 2

    def test_distant_cell_removed(self):
        m = make_map(bound_radius=5.0)
        m.insert_cloud(PointCloud(points=[[1, 0, 0], [6.2, 0, 0]], beliefs=[0.5, 0.5]), Pose())
        m.prune([0.0, 0.0, 0.0])
        assert len(m) == 1
        assert m.query([1, 0, 0]) == 0.5
        assert m.query([6.2, 0, 0]) == 0.0

    def test_prune_empty_map(self):
        m = make_map()
        m.prune([0.0, 0.0, 0.0])
        assert len(m) == 0

    def test_bounded_cell_count_after_prune(self):
        rng = np.random.default_rng(7)
        m = make_map(resolution=0.5, bound_radius=3.0)
        pts = rng.uniform(-8, 8, size=(2000, 3))
        m.insert_cloud(PointCloud(points=pts, beliefs=np.ones(2000)), Pose())
        m.prune([0.0, 0.0, 0.0])
        limit = (2 * 3.0 / 0.5 + 1) ** 3
        assert len(m) <= limit
        centers = m.cell_centers()
        assert (np.linalg.norm(centers, axis=1) <= 3.0).all()


class TestDump:
    def test_dump_format(self):
        m = make_map()
        m.insert_cloud(PointCloud(points=[[1.0, 0.0, 0.0]], beliefs=[0.8]), Pose())
        buf = io.StringIO()
        m.dump_text(buf)
        line = buf.getvalue().strip()
        assert line == "1.250000 0.250000 0.250000 0.800000"

    def test_dump_deterministic(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(-4, 4, size=(40, 3))
        beliefs = rng.uniform(0, 1, 40)
        outputs = []
        for _ in range(2):
            m = make_map()
            m.insert_cloud(PointCloud(points=pts, beliefs=beliefs), Pose())
            buf = io.StringIO()
            m.dump_text(buf)
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]
