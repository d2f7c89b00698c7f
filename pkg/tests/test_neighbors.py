import time

import numpy as np
import pytest

from dstpll.errors import DimensionMismatch, EmptyInput, KTooLarge, NonFiniteFeature
from dstpll.neighbors import BallTree, build, linear_scan, query


def random_case(rng):
    """A (points, x, k) triple; sometimes with duplicate rows or x on a row."""
    n = int(rng.integers(1, 60))
    d = int(rng.integers(1, 8))
    pts = rng.normal(0, 1, (n, d))
    if n > 2 and rng.random() < 0.4:
        # duplicate a block of rows to force exact distance ties
        src = rng.integers(0, n, size=max(1, n // 3))
        dst = rng.integers(0, n, size=src.size)
        pts[dst] = pts[src]
    x = pts[int(rng.integers(0, n))].copy() if rng.random() < 0.3 else rng.normal(0, 1, d)
    k = int(rng.integers(1, n + 1))
    return pts, x, k


class TestBuild:
    def test_single_point(self):
        tree = build(np.array([[1.0, 2.0]]))
        assert tree.n == 1
        assert tree.node_radius[0] == 0.0
        assert tree.query([1.0, 2.0], 1) == [(0, 0.0)]

    def test_two_identical_points(self):
        tree = build(np.array([[3.0], [3.0]]))
        assert tree.node_radius[0] == 0.0
        assert tree.query([3.0], 2) == [(0, 0.0), (1, 0.0)]

    def test_indexes_every_row_once(self, rng):
        pts = rng.normal(0, 1, (500, 4))
        tree = build(pts)
        assert sorted(tree.row_index.tolist()) == list(range(500))

    def test_leaf_points_inside_ball(self, rng):
        pts = rng.normal(0, 1, (400, 5))
        tree = build(pts)
        for node in range(len(tree.node_start)):
            if tree.node_left[node] >= 0:
                continue
            start, end = tree.node_start[node], tree.node_end[node]
            rows = pts[tree.row_index[start:end]]
            dist = np.sqrt(((rows - tree.node_center[node]) ** 2).sum(axis=1))
            assert (dist <= tree.node_radius[node] + 1e-9).all()

    def test_rejects_bad_input(self):
        with pytest.raises(EmptyInput):
            build(np.zeros((0, 3)))
        with pytest.raises(EmptyInput):
            build(np.zeros(3))
        with pytest.raises(NonFiniteFeature):
            build(np.array([[1.0, np.nan]]))


class TestQuery:
    def test_one_dimensional(self):
        tree = build(np.array([[0.0], [10.0]]))
        assert tree.query([1.0], 1) == [(0, 1.0)]

    def test_query_on_stored_point(self, rng):
        pts = rng.normal(0, 1, (50, 3))
        tree = build(pts)
        idx, dist = tree.query(pts[17], 1)[0]
        assert idx == 17 and dist == 0.0

    def test_no_duplicates_sorted(self, rng):
        pts = rng.normal(0, 1, (200, 4))
        tree = build(pts)
        out = tree.query(rng.normal(0, 1, 4), 25)
        indices = [i for i, _ in out]
        dists = [d for _, d in out]
        assert len(set(indices)) == len(indices) == 25
        assert all(dists[i] <= dists[i + 1] for i in range(len(dists) - 1))

    def test_errors(self, rng):
        pts = rng.normal(0, 1, (10, 3))
        tree = build(pts)
        with pytest.raises(KTooLarge):
            tree.query(np.zeros(3), 11)
        with pytest.raises(KTooLarge):
            tree.query(np.zeros(3), 0)
        with pytest.raises(DimensionMismatch):
            tree.query(np.zeros(4), 1)
        with pytest.raises(NonFiniteFeature):
            tree.query(np.array([0.0, np.inf, 0.0]), 1)
        with pytest.raises(KTooLarge):
            linear_scan(pts, np.zeros(3), 11)

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(2718)
        for _ in range(150):
            pts, x, k = random_case(rng)
            tree = build(pts)
            assert query(tree, x, k) == linear_scan(pts, x, k)

    def test_mirrored_trivial_cases_linear_scan(self):
        assert linear_scan(np.array([[0.0], [10.0]]), [1.0], 1) == [(0, 1.0)]
        pts = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert linear_scan(pts, pts[1], 1) == [(1, 0.0)]


@pytest.mark.slow
def test_batched_build_and_queries_beat_linear_scan():
    # smoke comparison, not a hard bound: on data with neighborhood
    # structure (the method's whole premise) build + a query batch should
    # beat scanning per query; uniform noise in 16-d would defeat any
    # metric tree
    rng = np.random.default_rng(7)
    centers = rng.random((40, 16)) * 4
    pts = centers[rng.integers(0, 40, 100_000)] + rng.normal(0, 0.08, (100_000, 16))
    queries = centers[rng.integers(0, 40, 100)] + rng.normal(0, 0.08, (100, 16))

    start = time.perf_counter()
    tree = build(pts)
    tree_out = [tree.query(q, 10) for q in queries]
    tree_time = time.perf_counter() - start

    start = time.perf_counter()
    scan_out = [linear_scan(pts, q, 10) for q in queries]
    scan_time = time.perf_counter() - start

    assert tree_out == scan_out
    assert tree_time < scan_time
