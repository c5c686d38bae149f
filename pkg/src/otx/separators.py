"""
Balanced vertex separators ``(A, S, B)``.

Three constructions are provided: the centroid of a tree, a BFS-layer
separator for planar-like graphs, and random sub-sampling of an existing
separator down to a few vertices.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .graph import hop_distances

MODES = ("tree_centroid", "planar_bfs", "subsampled")


class SeparatorModeError(ValueError):
    """The requested separator mode does not apply to the input graph."""


@dataclass(frozen=True, eq=False)
class Separation:
    """Vertex partition ``A | S | B`` with ``S`` separating ``A`` from ``B``.

    ``approximate`` is set when ``S`` was thinned out and edges between ``A``
    and ``B`` may remain.
    """

    A: np.ndarray
    S: np.ndarray
    B: np.ndarray
    approximate: bool = False

    @property
    def n(self):
        return len(self.A) + len(self.S) + len(self.B)

    @property
    def balance(self):
        return min(len(self.A), len(self.B)) / max(self.n, 1)

    def to_json(self):
        return json.dumps({"A": self.A.tolist(), "S": self.S.tolist(),
                           "B": self.B.tolist(), "approximate": bool(self.approximate)})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(*(np.asarray(d[k], dtype=np.int64) for k in "ASB"),
                   approximate=bool(d.get("approximate", False)))


def default_target_size(n):
    """``max(2, ceil(2 log2 log2 n))`` separator vertices kept by sub-sampling."""
    if n < 4:
        return 2
    return max(2, math.ceil(2 * math.log2(math.log2(n))))


@dataclass(frozen=True)
class SeparatorConfig:
    mode: str = "planar_bfs"
    target_size: int | None = None
    balance_floor: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown separator mode {self.mode!r}")
        if self.target_size is not None and self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        if not 0 < self.balance_floor < 0.5:
            raise ValueError("balance_floor must lie in (0, 0.5)")

    def target_for(self, n):
        return self.target_size if self.target_size is not None else default_target_size(n)


def _sorted(ids):
    return np.sort(np.asarray(ids, dtype=np.int64))


def is_valid_separation(graph, sep, check_edges=True):
    """Check the partition invariants (and, optionally, the no A-B edge rule)."""
    labels = np.full(graph.n, -1)
    for tag, part in enumerate((sep.A, sep.S, sep.B)):
        if np.any(labels[part] != -1):
            return False
        labels[part] = tag
    if np.any(labels < 0):
        return False
    if check_edges:
        u, v, _ = graph.edges()
        lu, lv = labels[u], labels[v]
        if np.any(((lu == 0) & (lv == 2)) | ((lu == 2) & (lv == 0))):
            return False
    return True


def tree_centroid_separator(graph):
    """Centroid separator of a tree.

    ``S`` is a single vertex whose removal leaves components of at most
    ``ceil(n / 2)`` vertices; the components are packed greedily, largest
    first, onto the smaller of ``A`` and ``B``. Runs in O(n).
    """
    n = graph.n
    if n == 0:
        raise SeparatorModeError("empty graph")
    if graph.m != n - 1 or graph.components()[0] != 1:
        raise SeparatorModeError("graph is not a tree")
    if n == 1:
        empty = np.zeros(0, dtype=np.int64)
        return Separation(empty, np.array([0]), empty)

    order, parent = csgraph.breadth_first_order(graph.csr, 0, directed=True,
                                                return_predecessors=True)
    size = np.ones(n, dtype=np.int64)
    for v in order[:0:-1]:
        size[parent[v]] += size[v]
    # largest remaining piece if v is removed: max(child subtrees, n - size[v])
    heaviest = n - size
    child_max = np.zeros(n, dtype=np.int64)
    np.maximum.at(child_max, parent[order[1:]], size[order[1:]])
    heaviest = np.maximum(heaviest, child_max)
    c = int(np.argmin(heaviest))

    # components of T - c
    keep = np.ones(n, dtype=bool)
    keep[c] = False
    rest = np.flatnonzero(keep)
    _, labels = csgraph.connected_components(graph.csr[rest][:, rest], directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    comps = [rest[idx] for idx in np.split(order, splits)]
    comps.sort(key=len, reverse=True)
    A, B = [], []
    na = nb = 0
    for comp in comps:
        if na <= nb:
            A.append(comp)
            na += len(comp)
        else:
            B.append(comp)
            nb += len(comp)
    cat = lambda parts: _sorted(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
    return Separation(cat(A), np.array([c], dtype=np.int64), cat(B))


def pseudo_peripheral_vertex(graph, start=0):
    """Vertex found by repeated BFS sweeps towards the farthest hop level."""
    v, ecc = int(start), -1
    for _ in range(8):
        depth = hop_distances(graph, v)
        far = int(np.argmax(depth))
        if depth[far] <= ecc:
            break
        v, ecc = far, int(depth[far])
    return v


def planar_separator(graph, config=None):
    """BFS-layer separator.

    Runs BFS from a pseudo-peripheral vertex and picks the smallest hop layer
    that leaves at least ``balance_floor * n`` vertices on both sides (ties go
    to the earliest layer). If no layer qualifies, the most balanced layer is
    used. ``A`` holds the earlier layers, ``B`` the later ones.
    """
    config = config or SeparatorConfig()
    n = graph.n
    if n < 3:
        raise SeparatorModeError("planar separator needs at least 3 vertices")
    if graph.components()[0] != 1:
        raise SeparatorModeError("graph must be connected")
    rng = np.random.default_rng(config.seed)
    start = pseudo_peripheral_vertex(graph, int(rng.integers(n)))
    depth = hop_distances(graph, start)
    counts = np.bincount(depth)
    before = np.concatenate([[0], np.cumsum(counts)[:-1]])
    after = n - before - counts
    floor = config.balance_floor * n
    ok = (before >= floor) & (after >= floor)
    if np.any(ok):
        cand = np.flatnonzero(ok)
        layer = int(cand[np.argmin(counts[cand])])
    else:
        layer = int(np.argmax(np.minimum(before, after)))
    return Separation(np.flatnonzero(depth < layer), np.flatnonzero(depth == layer),
                      np.flatnonzero(depth > layer))


def subsample_separator(graph, sep, config=None):
    """Keep ``target_size`` random separator vertices, push the rest into A or B.

    The result is flagged ``approximate`` whenever vertices were dropped,
    since edges between A and B may then exist.
    """
    config = config or SeparatorConfig(mode="subsampled")
    k = config.target_for(graph.n)
    if len(sep.S) <= k:
        return sep
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(sep.S))
    keep = np.sort(sep.S[perm[:k]])
    dropped = sep.S[perm[k:]]
    to_a = rng.random(len(dropped)) < 0.5
    return Separation(_sorted(np.concatenate([sep.A, dropped[to_a]])), keep,
                      _sorted(np.concatenate([sep.B, dropped[~to_a]])), approximate=True)


def find_separator(graph, config):
    """Dispatch on ``config.mode``.

    ``subsampled`` runs :func:`planar_separator` and then thins it; the other
    modes return an exact separation.
    """
    if config.mode == "tree_centroid":
        return tree_centroid_separator(graph)
    sep = planar_separator(graph, config)
    if config.mode == "subsampled":
        sep = subsample_separator(graph, sep, config)
    return sep
