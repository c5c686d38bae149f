"""
Reference and comparison kernel operators.

:class:`DenseKernel` materialises the full geodesic kernel and is the oracle
for every exactness check. :class:`SparseKernel` and :class:`NystromKernel`
are the cheap approximations a separator tree is compared against, and
:func:`greenkhorn_solve` is the greedy coordinate variant of Sinkhorn.
"""

import time

import numpy as np
import scipy.sparse as sp

from .graph import all_pairs_distances, multi_source_distances
from .kernels import CostWeightedExponential, ExponentialKernel
from .measures import check_measure
from .sinkhorn import NumericalUnderflowError, SinkhornState, UNDERFLOW

DENSE_CAP = 25_000
_CHUNK = 1024


class ResourceError(MemoryError):
    """The requested dense object would not fit the configured cap."""


class DenseKernel:
    """Materialised ``K = f_eps(D)`` together with ``D``.

    Parameters
    ----------
    D : ndarray, shape (n, n)
        Shortest-path distances.
    kernel : Kernel
    """

    symmetric = True

    def __init__(self, D, kernel):
        self.D = D
        self.kernel = kernel
        self.epsilon = kernel.epsilon
        self.matrix = kernel(D)
        self.n = D.shape[0]

    def apply(self, x):
        return self.matrix @ x

    def apply_transpose(self, x):
        return self.matrix.T @ x

    def apply_cost_weighted(self, x):
        # (D o K) x, row block by row block to avoid a third n x n array
        out = np.empty(self.n)
        for s in range(0, self.n, _CHUNK):
            blk = self.D[s:s + _CHUNK]
            Kb = self.matrix[s:s + _CHUNK]
            DK = np.where(np.isfinite(blk), blk, 0.0) * Kb
            out[s:s + _CHUNK] = DK @ x
        return out

    @property
    def nbytes(self):
        return self.D.nbytes + self.matrix.nbytes


def build_dense(graph, kernel, cap=DENSE_CAP):
    """All-pairs Dijkstra followed by ``K = f_eps(D)``.

    Raises
    ------
    ResourceError
        If ``graph.n > cap``.
    """
    if graph.n > cap:
        raise ResourceError(f"dense kernel refused: n={graph.n} exceeds cap {cap}")
    D = all_pairs_distances(graph)
    # Dijkstra from i and from j can round d(i, j) differently; keep the smaller
    for s in range(0, graph.n, _CHUNK):
        D[s:s + _CHUNK] = np.minimum(D[s:s + _CHUNK], D[:, s:s + _CHUNK].T)
    return DenseKernel(D, kernel)


class SparseKernel:
    """Dense kernel with every entry below ``threshold`` dropped."""

    symmetric = True

    def __init__(self, matrix, cost_matrix, threshold, epsilon):
        self.matrix = matrix
        self.cost_matrix = cost_matrix
        self.threshold = threshold
        self.epsilon = epsilon
        self.n = matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def apply(self, x):
        return self.matrix @ x

    def apply_transpose(self, x):
        return self.matrix.T @ x

    def apply_cost_weighted(self, x):
        return self.cost_matrix @ x


def build_sparse(dense, threshold=1e-4):
    """Keep the entries ``K_ij >= threshold`` of ``dense``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    rows, cols, vals, dvals = [], [], [], []
    for s in range(0, dense.n, _CHUNK):
        Kb = dense.matrix[s:s + _CHUNK]
        r, c = np.nonzero(Kb >= threshold)
        rows.append(r + s)
        cols.append(c)
        vals.append(Kb[r, c])
        dvals.append(dense.D[s:s + _CHUNK][r, c])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    vals, dvals = np.concatenate(vals), np.concatenate(dvals)
    shape = (dense.n, dense.n)
    K = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    DK = sp.csr_matrix((dvals * vals, (rows, cols)), shape=shape)
    return SparseKernel(K, DK, threshold, dense.epsilon)


class NystromKernel:
    """Low-rank ``K ~ K[:, L] K[L, L]^+ K[L, :]`` stored as ``F F^T``.

    ``cost_factors`` approximate ``D o K`` the same way from the same
    landmarks, so plans can be priced without the dense distance matrix.
    """

    symmetric = True

    def __init__(self, landmarks, factors, cost_factors, epsilon):
        self.landmarks = landmarks
        self.factors = factors
        self.cost_factors = cost_factors
        self.epsilon = epsilon
        self.n = factors.shape[0]

    @property
    def rank(self):
        return self.factors.shape[1]

    def apply(self, x):
        return self.factors @ (self.factors.T @ x)

    def apply_transpose(self, x):
        return self.apply(x)

    def apply_cost_weighted(self, x):
        left, right = self.cost_factors
        return left @ (right.T @ x)


def farthest_point_landmarks(graph, rank, seed=0):
    """Greedy farthest-point sampling under graph distances.

    Returns the landmark ids and the ``n x rank`` distances to them.
    """
    rng = np.random.default_rng(seed)
    first = int(rng.integers(graph.n))
    landmarks = [first]
    cols = [multi_source_distances(graph, [first]).values[:, 0]]
    nearest = cols[0].copy()
    while len(landmarks) < rank:
        # unreachable vertices are picked first; ties go to the smallest id
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0:
            unused = np.setdiff1d(np.arange(graph.n), landmarks)
            nxt = int(unused[0])
        landmarks.append(nxt)
        col = multi_source_distances(graph, [nxt]).values[:, 0]
        cols.append(col)
        nearest = np.minimum(nearest, col)
    return np.asarray(landmarks), np.column_stack(cols)


def _psd_factor(C, W):
    """``F`` with ``F F^T = C W^+ C^T``; eigenvalues below ``1e-10 max`` dropped."""
    W = 0.5 * (W + W.T)
    lam, V = np.linalg.eigh(W)
    top = lam.max() if lam.size else 0.0
    keep = lam > 1e-10 * top if top > 0 else np.zeros(lam.shape, bool)
    return C @ (V[:, keep] / np.sqrt(lam[keep]))


def build_nystrom(graph, kernel, rank=64, seed=0):
    """Geodesic Nystrom approximation of ``f_eps(D)`` with ``rank`` landmarks.

    Parameters
    ----------
    graph : WeightedGraph
    kernel : Kernel
    rank : int
        Number of landmarks ``r``, at most ``n``.
    seed : int
        Picks the first landmark.
    """
    if rank < 1 or rank > graph.n:
        raise ValueError(f"rank must lie in [1, n={graph.n}], got {rank}")
    L, DL = farthest_point_landmarks(graph, rank, seed)
    F = _psd_factor(kernel(DL), kernel(DL[L]))
    cost = None
    if isinstance(kernel, ExponentialKernel):
        # D o K is not PSD in general, so use the plain (unsymmetrised) Nystrom form
        g = CostWeightedExponential(kernel.epsilon)
        C, W = g(DL), g(DL[L])
        cost = (C, C @ np.linalg.pinv(W, rcond=1e-10, hermitian=True))
    return NystromKernel(L, F, cost, kernel.epsilon)


def _rho(x, y):
    """Bregman-type violation ``y - x + x log(x / y)``, with ``0 log 0 = 0``.

    Evaluated as ``x (t - log1p(t))`` with ``y = x (1 + t)``; the direct
    form cancels to rounding noise once ``y`` is within about 1e-8 of ``x``.
    """
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - x) / x
        out = x * (t - np.log1p(t))
    return np.where(x > 0, out, y)


def greenkhorn_solve(a, b, K, max_updates=50_000, tol=1e-4):
    """Greedy Sinkhorn: rescale one row or column per update.

    Each update picks the row or column with the largest violation
    ``rho(target, current)`` and rescales it to match its marginal exactly.

    Parameters
    ----------
    a, b : ndarray, shape (n,)
    K : DenseKernel
    max_updates : int
    tol : float
        Stop once the l1 marginal error is at most ``tol``.

    Returns
    -------
    SinkhornState
        ``iterations`` counts single-row or single-column updates.
    """
    a, b = check_measure(a), check_measure(b)
    M = K.matrix
    n = M.shape[0]
    t0 = time.perf_counter()
    u = np.ones(n)
    v = np.ones(n)
    r = M @ v
    c = M.T @ u
    state = SinkhornState(a, b, u, v, K.epsilon, tol=tol, operator=K)
    err = np.abs(r - a).sum() + np.abs(c - b).sum()
    updates = 0
    while err > tol and updates < max_updates:
        i = int(np.argmax(_rho(a, r)))
        j = int(np.argmax(_rho(b, c)))
        if _rho(a[i], r[i]) >= _rho(b[j], c[j]):
            Kv = M[i] @ v
            if a[i] > 0 and Kv < UNDERFLOW:
                raise NumericalUnderflowError("row of K v vanished; increase epsilon")
            new = a[i] / Kv if a[i] > 0 else 0.0
            c += (new - u[i]) * M[i] * v
            u[i] = new
            r[i] = new * Kv
        else:
            KTu = M[:, j] @ u
            if b[j] > 0 and KTu < UNDERFLOW:
                raise NumericalUnderflowError("column of K^T u vanished; increase epsilon")
            new = b[j] / KTu if b[j] > 0 else 0.0
            r += (new - v[j]) * M[:, j] * u
            v[j] = new
            c[j] = new * KTu
        updates += 1
        if updates % n == 0:
            # the rank-one updates of r and c drift; refresh them every n updates
            r = u * (M @ v)
            c = v * (M.T @ u)
        err = np.abs(r - a).sum() + np.abs(c - b).sum()
    state.u, state.v, state.iterations = u, v, updates
    # recompute the marginals from scratch so drift in r, c is not reported
    state.marginal_error = float(np.abs(u * (M @ v) - a).sum() + np.abs(v * (M.T @ u) - b).sum())
    state.converged = state.marginal_error <= tol
    state.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    return state
