"""
Separator trees for fast products with generalized distance matrices.

A node stores a separation ``(A, S, B)`` of its graph, the distances from
``A`` and ``B`` to ``S`` and between the ``S`` vertices, and two children
built on ``A + S`` and ``B + S`` where the ``S`` vertices are joined by
shortcut edges carrying their true distance. Small graphs are kept as
explicit leaves.

:func:`integrate` then computes ``y = f(D) x``: the ``A x B`` and ``B x A``
blocks come from :mod:`otx.cross`, the blocks inside ``A + S`` and
``B + S`` from the children, and the ``S x S`` block, which both children
count, is subtracted once.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .cross import DIRECT_CUTOFF, CrossPlan
from .graph import all_pairs_distances, multi_source_distances, shortcut_subgraph
from .kernels import CostWeightedExponential, ExponentialKernel, Kernel
from .separators import Separation, SeparatorConfig, find_separator


class UnsupportedKernelError(TypeError):
    """The requested product is not available for this kernel."""


@dataclass
class SgfiConfig:
    """Build parameters.

    Attributes
    ----------
    max_depth : int or None
        Depth ``h`` at which every node becomes a leaf; ``None`` for no limit.
    leaf_size_threshold : int
        Graphs with at most this many vertices are stored explicitly.
    separator : SeparatorConfig
    kernel : Kernel
        Kernel whose cross operators are prepared at build time.
    cutoff : int
        Pair-by-pair cutover of the cross-block recursion.
    """

    max_depth: int | None = None
    leaf_size_threshold: int = 512
    separator: SeparatorConfig = field(default_factory=SeparatorConfig)
    kernel: Kernel = field(default_factory=lambda: ExponentialKernel(1.0))
    cutoff: int = DIRECT_CUTOFF

    def __post_init__(self):
        if self.leaf_size_threshold < 2:
            raise ValueError("leaf_size_threshold must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")


class SgfiNode:
    """One node of the separator tree.

    ``*_ids`` are vertex ids of the root graph; ``*_pos`` are positions in
    this node's own vertex order (the sorted ``ids``), which is what
    :func:`integrate` indexes with.
    """

    def __init__(self, ids, depth):
        self.ids = ids
        self.depth = depth
        self.explicit_graph = None
        self.left_sgfi = self.right_sgfi = None
        self.approximate = False
        self.sep_pos = self.left_pos = self.right_pos = None
        self.left_child_pos = self.right_child_pos = None
        self.sep_dist_matrix = self.left_distances = self.right_distances = None
        self.plan = None
        self._cache = {}

    @property
    def n(self):
        return len(self.ids)

    @property
    def is_leaf(self):
        return self.explicit_graph is not None

    @property
    def sep_ids(self):
        return None if self.sep_pos is None else self.ids[self.sep_pos]

    @property
    def left_ids(self):
        return None if self.left_pos is None else self.ids[self.left_pos]

    @property
    def right_ids(self):
        return None if self.right_pos is None else self.ids[self.right_pos]

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right_sgfi, node.left_sgfi))

    @property
    def tree_approximate(self):
        return any(node.approximate for node in self.iter_nodes())

    def leaf_matrix(self, kernel):
        """Kernel matrix of a leaf, cached per kernel object."""
        key = ("leaf", kernel)
        if key not in self._cache:
            if "apsp" not in self._cache:
                self._cache["apsp"] = all_pairs_distances(self.explicit_graph)
            self._cache[key] = kernel(self._cache["apsp"])
        return self._cache[key]

    def cross_operator(self, kernel):
        key = ("cross", kernel)
        if key not in self._cache:
            self._cache[key] = self.plan.operator(kernel)
        return self._cache[key]

    def sep_matrix(self, kernel):
        key = ("sep", kernel)
        if key not in self._cache:
            self._cache[key] = kernel(self.sep_dist_matrix)
        return self._cache[key]

    def __repr__(self):
        if self.is_leaf:
            return f"SgfiNode(leaf, n={self.n}, depth={self.depth})"
        return (f"SgfiNode(n={self.n}, depth={self.depth}, |A|={len(self.left_pos)}, "
                f"|S|={len(self.sep_pos)}, |B|={len(self.right_pos)})")


def _component_split(graph):
    """Empty-separator split of a disconnected graph, components packed greedily."""
    _, labels = graph.components()
    sizes = np.bincount(labels)
    A, B, na, nb = [], [], 0, 0
    for c in np.argsort(-sizes, kind="stable"):
        if na <= nb:
            A.append(c)
            na += sizes[c]
        else:
            B.append(c)
            nb += sizes[c]
    in_a = np.isin(labels, A)
    return Separation(np.flatnonzero(in_a), np.zeros(0, dtype=np.int64), np.flatnonzero(~in_a))


def build_sgfi(graph, config=None):
    """Build the separator tree of ``graph``.

    Parameters
    ----------
    graph : WeightedGraph
    config : SgfiConfig, optional

    Returns
    -------
    SgfiNode
        The root; its vertex order is ``0..n-1`` of ``graph``.
    """
    config = config or SgfiConfig()
    if graph.n == 0:
        raise ValueError("cannot build a separator tree on an empty graph")
    seeds = np.random.SeedSequence(config.separator.seed)
    return _build(graph, np.arange(graph.n), 0, config, seeds)


def _leaf(node, graph, config):
    node.explicit_graph = graph
    node.leaf_matrix(config.kernel)
    return node


def _build(graph, ids, depth, config, seeds):
    node = SgfiNode(ids, depth)
    n = graph.n
    if n <= config.leaf_size_threshold or (config.max_depth is not None and depth >= config.max_depth):
        return _leaf(node, graph, config)

    if graph.components()[0] > 1:
        sep = _component_split(graph)
    else:
        sep_seed = int(seeds.generate_state(1)[0])
        sep_cfg = SeparatorConfig(config.separator.mode, config.separator.target_size,
                                  config.separator.balance_floor, sep_seed)
        if sep_cfg.mode != "tree_centroid" and n < 3:
            return _leaf(node, graph, config)
        sep = find_separator(graph, sep_cfg)
    if len(sep.A) == 0 or len(sep.B) == 0:
        return _leaf(node, graph, config)

    S = sep.S
    node.approximate = sep.approximate
    node.sep_pos, node.left_pos, node.right_pos = S, sep.A, sep.B
    if len(S):
        dist = multi_source_distances(graph, S).values
    else:
        dist = np.zeros((n, 0))
    # Dijkstra from each end may round a path length differently
    node.sep_dist_matrix = np.minimum(dist[S], dist[S].T)
    node.left_distances = dist[sep.A]
    node.right_distances = dist[sep.B]
    node.plan = CrossPlan(node.left_distances, node.right_distances, config.cutoff)
    node.cross_operator(config.kernel)

    left_seeds, right_seeds = seeds.spawn(2)
    g_left, pos_left = shortcut_subgraph(graph, np.concatenate([sep.A, S]), S, node.sep_dist_matrix)
    g_right, pos_right = shortcut_subgraph(graph, np.concatenate([sep.B, S]), S, node.sep_dist_matrix)
    node.left_child_pos, node.right_child_pos = pos_left, pos_right
    node.left_sgfi = _build(g_left, ids[pos_left], depth + 1, config, left_seeds)
    node.right_sgfi = _build(g_right, ids[pos_right], depth + 1, config, right_seeds)
    return node


def integrate(node, x, kernel):
    """Compute ``y = f(D) x`` with the separator tree.

    Exact up to floating point when no node is ``approximate`` and the
    kernel factorises exactly.

    Parameters
    ----------
    node : SgfiNode
    x : ndarray, shape (node.n,)
    kernel : Kernel
        Must use the same ``epsilon`` as intended for ``D``; the tree itself
        only stores distances.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (node.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({node.n},)")
    return _integrate(node, x, kernel)


def _integrate(node, x, kernel):
    if node.is_leaf:
        return node.leaf_matrix(kernel) @ x
    y = np.zeros_like(x)
    A, S, B = node.left_pos, node.sep_pos, node.right_pos
    op = node.cross_operator(kernel)
    y[A] += op.matvec(x[B])
    y[B] += op.rmatvec(x[A])
    lp, rp = node.left_child_pos, node.right_child_pos
    y[lp] += _integrate(node.left_sgfi, x[lp], kernel)
    y[rp] += _integrate(node.right_sgfi, x[rp], kernel)
    if len(S):
        y[S] -= node.sep_matrix(kernel) @ x[S]
    return y


def integrate_weighted(node, x, kernel):
    """Compute ``(D o f(D)) x`` for an exponential ``f``.

    Uses the rank-2 split of ``d exp(-d / eps)`` in the cross blocks.
    """
    if not isinstance(kernel, ExponentialKernel):
        raise UnsupportedKernelError("cost-weighted products need an exponential kernel")
    return integrate(node, x, _weighted(kernel))


_WEIGHTED = {}


def _weighted(kernel):
    # one derived kernel object per base kernel, so node caches are reused
    key = id(kernel)
    if key not in _WEIGHTED or _WEIGHTED[key][0] is not kernel:
        _WEIGHTED[key] = (kernel, CostWeightedExponential(kernel.epsilon))
    return _WEIGHTED[key][1]


def sgfi_stats(root):
    """Tree statistics as a JSON-serialisable dict."""
    levels = {}
    leaves = []
    approx = 0
    depth = 0
    for node in root.iter_nodes():
        depth = max(depth, node.depth)
        if node.is_leaf:
            leaves.append(node.n)
            continue
        levels.setdefault(node.depth, []).append(len(node.sep_pos))
        approx += bool(node.approximate)
    plan_size = sum(node.plan.size() for node in root.iter_nodes() if not node.is_leaf)
    return {
        "n": root.n,
        "depth": depth,
        "separator_sizes": {str(k): v for k, v in sorted(levels.items())},
        "leaf_sizes": sorted(leaves),
        "approximate_nodes": approx,
        "approximate": approx > 0,
        "cross_plan_size": plan_size,
    }


def sgfi_stats_json(root, **kwargs):
    return json.dumps(sgfi_stats(root), **kwargs)
