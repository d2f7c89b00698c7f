"""Exact k-nearest-neighbor search with a ball tree.

The tree partitions points into nested balls (center + radius) by splitting
on the dimension of maximal spread at the median, leaf size 16. Queries are
exact: results are bit-identical to :func:`linear_scan`, including tie
handling, because leaves evaluate the same distance expression the scan
uses and pruning is strictly conservative.

Distances are Euclidean. Ties are broken by ascending row index so results
are deterministic and reproducible across runs.
"""

from __future__ import annotations

import heapq

import numpy as np

from .errors import DimensionMismatch, EmptyInput, KTooLarge, NonFiniteFeature

LEAF_SIZE = 16

# pruning slack: never skip a ball whose computed lower bound ties the
# current k-th distance up to float rounding, so exact ties survive
_PRUNE_SLACK = 1e-12


def _as_matrix(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise EmptyInput(f"expected an n x d matrix, got shape {pts.shape}")
    if pts.shape[0] < 1 or pts.shape[1] < 1:
        raise EmptyInput(f"need at least one row and one column, got {pts.shape}")
    if not np.isfinite(pts).all():
        raise NonFiniteFeature("points contain NaN or infinite entries")
    return pts


def _as_query(x, dim: int) -> np.ndarray:
    q = np.ascontiguousarray(x, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != dim:
        raise DimensionMismatch(f"query shape {q.shape} vs data dimension {dim}")
    if not np.isfinite(q).all():
        raise NonFiniteFeature("query contains NaN or infinite entries")
    return q


def _row_distances(block: np.ndarray, x: np.ndarray) -> np.ndarray:
    # the one distance expression used everywhere, so tree and scan agree
    # on every float
    return np.sqrt(((block - x) ** 2).sum(axis=1))


class BallTree:
    """Immutable ball tree over an owned copy of the input rows.

    Node arrays are exposed for inspection (tests check that every leaf's
    points lie inside its ball): ``node_start``/``node_end`` index into
    ``row_index``, children are ``node_left``/``node_right`` (-1 for
    leaves), and each node has ``node_center`` and ``node_radius``.
    """

    def __init__(self, points):
        pts = _as_matrix(points)
        self.points = pts
        self.n, self.dim = pts.shape

        index = np.arange(self.n, dtype=np.int64)
        starts: list[int] = []
        ends: list[int] = []
        lefts: list[int] = []
        rights: list[int] = []
        centers: list[np.ndarray] = []
        radii: list[float] = []

        def build_node(start: int, end: int) -> int:
            node = len(starts)
            starts.append(start)
            ends.append(end)
            lefts.append(-1)
            rights.append(-1)
            rows = pts[index[start:end]]
            center = rows.mean(axis=0)
            radius = float(_row_distances(rows, center).max())
            centers.append(center)
            radii.append(radius)
            if end - start > LEAF_SIZE:
                spread = rows.max(axis=0) - rows.min(axis=0)
                split_dim = int(np.argmax(spread))
                mid = (end - start) // 2
                values = pts[index[start:end], split_dim]
                order = np.argpartition(values, mid)
                index[start:end] = index[start:end][order]
                lefts[node] = build_node(start, start + mid)
                rights[node] = build_node(start + mid, end)
            return node

        build_node(0, self.n)
        self.row_index = index
        self._rows = pts[index]  # leaf-contiguous copy
        self.node_start = np.asarray(starts, dtype=np.int64)
        self.node_end = np.asarray(ends, dtype=np.int64)
        self.node_left = np.asarray(lefts, dtype=np.int64)
        self.node_right = np.asarray(rights, dtype=np.int64)
        self.node_center = np.asarray(centers, dtype=np.float64)
        self.node_radius = np.asarray(radii, dtype=np.float64)

    def query(self, x, k: int) -> list[tuple[int, float]]:
        """The k nearest rows to ``x``, ascending by (distance, index)."""
        q = _as_query(x, self.dim)
        if not 1 <= k <= self.n:
            raise KTooLarge(f"k={k} outside 1..{self.n}")

        # candidate heap keeps the k best as (-distance, -index); heap[0]
        # is the current worst so tuple comparison implements the
        # (distance, index) order exactly
        best: list[tuple[float, float]] = []
        rows = self._rows
        index = self.row_index
        center = self.node_center
        radius = self.node_radius

        def lower_bound(node: int) -> float:
            d = float(np.sqrt(((center[node] - q) ** 2).sum()))
            lb = d - float(radius[node])
            return lb if lb > 0.0 else 0.0

        pending = [(lower_bound(0), 0)]
        while pending:
            lb, node = heapq.heappop(pending)
            if len(best) == k:
                kth = -best[0][0]
                if lb > kth + _PRUNE_SLACK * (kth + 1.0):
                    continue
            left = self.node_left[node]
            if left >= 0:
                right = self.node_right[node]
                heapq.heappush(pending, (lower_bound(left), int(left)))
                heapq.heappush(pending, (lower_bound(right), int(right)))
                continue
            start = int(self.node_start[node])
            end = int(self.node_end[node])
            dist = _row_distances(rows[start:end], q)
            if len(best) == k:
                kth = -best[0][0]
                positions = np.nonzero(dist <= kth)[0]
            else:
                positions = range(end - start)
            for pos in positions:
                entry = (-float(dist[pos]), -int(index[start + pos]))
                if len(best) < k:
                    heapq.heappush(best, entry)
                elif entry > best[0]:
                    heapq.heapreplace(best, entry)
        ordered = sorted((-d, -i) for d, i in best)
        return [(int(i), float(d)) for d, i in ordered]


def build(points) -> BallTree:
    """Index ``points`` (n x d, finite reals) for repeated exact queries."""
    return BallTree(points)


def query(tree: BallTree, x, k: int) -> list[tuple[int, float]]:
    return tree.query(x, k)


def linear_scan(points, x, k: int) -> list[tuple[int, float]]:
    """Brute-force oracle with the same contract as :meth:`BallTree.query`."""
    pts = _as_matrix(points)
    q = _as_query(x, pts.shape[1])
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise KTooLarge(f"k={k} outside 1..{n}")
    dist = _row_distances(pts, q)
    order = np.lexsort((np.arange(n), dist))[:k]
    return [(int(i), float(dist[i])) for i in order]
