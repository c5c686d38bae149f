"""
Weighted undirected graphs and shortest-path primitives.

Graphs are stored in CSR form (``indptr``, ``indices``, ``weights``) with a
symmetric adjacency. Shortest paths run on :mod:`scipy.sparse.csgraph`.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with strictly positive edge weights.

    Build instances with :meth:`from_edges`, which validates weights, drops
    nothing silently and collapses parallel edges to their minimum weight.

    Attributes
    ----------
    n : int
        Number of vertices, ids are ``0..n-1``.
    indptr, indices, weights : ndarray
        Symmetric CSR adjacency.
    coords : ndarray or None
        Optional vertex coordinates, shape (n, dim). Used for measure anchors.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    coords: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, n, u, v, w, coords=None):
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        w = np.asarray(w, dtype=np.float64).ravel()
        if not (len(u) == len(v) == len(w)):
            raise ValueError("edge arrays must have equal length")
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        if len(u):
            if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(u == v):
                raise ValueError("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("edge weights must be positive and finite")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        # parallel edges collapse to the minimum weight
        order = np.lexsort((w, hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if len(lo):
            first = np.ones(len(lo), dtype=bool)
            first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
            lo, hi, w = lo[first], hi[first], w[first]
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = np.concatenate([w, w])
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        mat.sort_indices()
        if coords is not None:
            coords = np.asarray(coords, dtype=np.float64)
            if coords.shape[0] != n:
                raise ValueError("coords must have one row per vertex")
        return cls(n, mat.indptr.astype(np.int64), mat.indices.astype(np.int64),
                   mat.data.astype(np.float64), coords)

    @cached_property
    def csr(self):
        return sp.csr_matrix((self.weights, self.indices, self.indptr),
                             shape=(self.n, self.n))

    @property
    def m(self):
        """Number of undirected edges."""
        return len(self.indices) // 2

    def degree(self):
        return np.diff(self.indptr)

    def neighbors(self, v):
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def edges(self):
        """Return ``(u, v, w)`` arrays listing each undirected edge once, u < v."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def subgraph(self, vertices):
        """Induced subgraph on ``vertices`` (relabelled in the given order)."""
        vertices = np.asarray(vertices, dtype=np.int64)
        sub = self.csr[vertices][:, vertices].tocsr()
        sub.sort_indices()
        coords = None if self.coords is None else self.coords[vertices]
        return WeightedGraph(len(vertices), sub.indptr.astype(np.int64),
                             sub.indices.astype(np.int64),
                             sub.data.astype(np.float64), coords)

    def components(self):
        """Return ``(count, labels)`` of connected components."""
        return csgraph.connected_components(self.csr, directed=False)


@dataclass(frozen=True)
class DistanceBlock:
    """Shortest-path distances between two vertex lists.

    ``values[i, j]`` is the distance between ``rows[i]`` and ``cols[j]``;
    ``inf`` marks unreachable pairs.
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def _check_vertex(graph, v):
    if not (0 <= int(v) < graph.n):
        raise ValueError(f"vertex {v} out of range for graph with {graph.n} vertices")


def dijkstra_sssp(graph, source):
    """Single-source shortest-path distances.

    Parameters
    ----------
    graph : WeightedGraph
    source : int

    Returns
    -------
    dist : ndarray, shape (n,)
        ``inf`` for vertices unreachable from ``source``.
    """
    _check_vertex(graph, source)
    return csgraph.dijkstra(graph.csr, directed=True, indices=int(source))


def multi_source_distances(graph, targets):
    """Distances from every vertex to each of ``targets``.

    Returns a :class:`DistanceBlock` of shape (n, len(targets)) whose column
    ``j`` equals ``dijkstra_sssp(graph, targets[j])``.
    """
    targets = np.asarray(targets, dtype=np.int64).ravel()
    if len(targets) == 0:
        raise ValueError("targets must be nonempty")
    for t in targets:
        _check_vertex(graph, t)
    d = csgraph.dijkstra(graph.csr, directed=True, indices=targets)
    return DistanceBlock(np.arange(graph.n), targets, np.ascontiguousarray(d.T))


def all_pairs_distances(graph):
    """Dense APSP matrix via one Dijkstra run per vertex."""
    if graph.n == 0:
        return np.zeros((0, 0))
    return csgraph.dijkstra(graph.csr, directed=True)


def shortcut_subgraph(graph, Y, X, pairwise_X):
    """Induced subgraph on ``Y`` with the ``X`` pairs joined by shortcut edges.

    Every pair ``i != j`` of ``X`` gets an edge of weight ``pairwise_X[i, j]``
    (the distance in the full graph); original edges between ``X`` vertices
    are replaced and unreachable pairs get no edge.

    Parameters
    ----------
    graph : WeightedGraph
    Y : array-like of int
    X : array-like of int
        Subset of ``Y``.
    pairwise_X : DistanceBlock or ndarray, shape (len(X), len(X))
        Rows and columns follow the order of ``X``.

    Returns
    -------
    sub : WeightedGraph
        Vertices relabelled so that new id ``t`` is ``ids[t]``.
    ids : ndarray
        Sorted ``Y``; maps new ids to old ids.
    """
    ids = np.unique(np.asarray(Y, dtype=np.int64))
    X = np.asarray(X, dtype=np.int64).ravel()
    D = pairwise_X.values if isinstance(pairwise_X, DistanceBlock) else np.asarray(pairwise_X, dtype=np.float64)
    if D.shape != (len(X), len(X)):
        raise ValueError(f"pairwise_X has shape {D.shape}, expected {(len(X), len(X))}")
    new_id = np.full(graph.n, -1, dtype=np.int64)
    new_id[ids] = np.arange(len(ids))
    if len(X) and np.any(new_id[X] < 0):
        raise ValueError("X must be a subset of Y")

    u, v, w = graph.edges()
    in_x = np.zeros(graph.n, dtype=bool)
    in_x[X] = True
    keep = (new_id[u] >= 0) & (new_id[v] >= 0) & ~(in_x[u] & in_x[v])
    su, sv, sw = new_id[u[keep]], new_id[v[keep]], w[keep]

    iu, ju = np.triu_indices(len(X), k=1)
    dx = D[iu, ju]
    ok = np.isfinite(dx)
    xu, xv, xw = new_id[X[iu[ok]]], new_id[X[ju[ok]]], dx[ok]

    coords = None if graph.coords is None else graph.coords[ids]
    sub = WeightedGraph.from_edges(len(ids), np.concatenate([su, xu]),
                                   np.concatenate([sv, xv]),
                                   np.concatenate([sw, xw]), coords)
    return sub, ids


def hop_distances(graph, source):
    """Unweighted BFS depth of every vertex from ``source`` (-1 if unreachable)."""
    _check_vertex(graph, source)
    d = csgraph.dijkstra(graph.csr, directed=True, indices=int(source), unweighted=True)
    return np.where(np.isfinite(d), d, -1).astype(np.int64)


def diameter_estimate(graph, start=0):
    """Double-sweep lower bound on the weighted diameter of ``start``'s component."""
    if graph.n == 0:
        return 0.0
    d0 = dijkstra_sssp(graph, start)
    far = int(np.argmax(np.where(np.isfinite(d0), d0, -1.0)))
    d1 = dijkstra_sssp(graph, far)
    return float(np.max(d1[np.isfinite(d1)]))
