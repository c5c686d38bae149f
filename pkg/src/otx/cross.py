"""
Fast actions of the cross block ``M[i, j] = f(min_k AD[i, k] + BD[j, k])``.

Pair ``(i, j)`` is charged to the first separator column ``k`` realising the
minimum. For a fixed ``k`` that is a dominance condition between

    w_i = AD[i, k] - AD[i, k']   and   z_j = BD[j, k'] - BD[j, k]   (k' != k)

namely ``w_i < z_j`` on coordinates ``k' < k`` and ``w_i <= z_j`` on
``k' > k``. The pairs are found by median splits on one coordinate at a
time: rows at or below the pivot against columns above it satisfy that
coordinate outright and drop it, the two same-side halves recurse on the
same coordinates, and the remaining quadrant is empty. Coordinates that
every remaining pair already satisfies are dropped as well. Once no
coordinate is left, a block is a full product ``rows x cols`` and the kernel
factorises it; small blocks are resolved pair by pair.

The split structure only depends on ``AD`` and ``BD``, so it is computed
once (:class:`CrossPlan`) and turned into sparse factors per kernel
(:class:`CrossOperator`); each product is then a handful of sparse matvecs.
"""

import numpy as np
import scipy.sparse as sp

from ._plan_jit import plan_column
from .kernels import ExponentialKernel

#: blocks with |rows| * |cols| at or below DIRECT_CUTOFF**2 are evaluated pair by pair
DIRECT_CUTOFF = 32


def _two_diff(a, b):
    """Error-free ``a - b = hi + lo`` (TwoSum); ``lo`` is 0 for infinite results."""
    hi = a - b
    with np.errstate(invalid="ignore"):
        bp = hi - a
        ap = hi - bp
        lo = (a - ap) + (-b - bp)
    lo[~np.isfinite(hi)] = 0.0
    return hi, lo


def _joint_ranks(WH, WL, ZH, ZL):
    """Dense ranks of the double-doubles ``W`` and ``Z`` on a shared scale, per column.

    Plain float differences are not transitive across separator columns on
    near-ties, which can leave a pair with no winning column; the exact
    ranks are.
    """
    p = WH.shape[0]
    RW = np.empty(WH.shape, dtype=np.int64)
    RZ = np.empty(ZH.shape, dtype=np.int64)
    for t in range(WH.shape[1]):
        h = np.concatenate([WH[:, t], ZH[:, t]])
        l = np.concatenate([WL[:, t], ZL[:, t]])
        order = np.lexsort((l, h))
        hs, ls = h[order], l[order]
        new = np.ones(len(h), dtype=np.int64)
        new[0] = 0
        new[1:] = (hs[1:] != hs[:-1]) | (ls[1:] != ls[:-1])
        r = np.empty(len(h), dtype=np.int64)
        r[order] = np.cumsum(new)
        RW[:, t], RZ[:, t] = r[:p], r[p:]
    return RW, RZ


def _split(w, z, hi, pivot_rule):
    """Pivot rank: rows ``w <= pivot`` satisfy the coordinate with columns ``z > pivot``."""
    nw, nz = len(w), len(z)
    if pivot_rule == "merged":
        piv = np.partition(np.concatenate([w, z]), (nw + nz - 1) // 2)[(nw + nz - 1) // 2]
        na, nb = (w <= piv).sum(), (z > piv).sum()
        # both same-coordinate children must shrink, else fall back to the row median
        if na + (nz - nb) < nw + nz and (nw - na) + nb < nw + nz:
            return piv
    piv = np.partition(w, (nw - 1) // 2)[(nw - 1) // 2]
    if piv == hi:
        piv = w[w < hi].max()
    return piv


class CrossPlan:
    """Assignment of every (row, col) pair to its first arg-min column.

    Parameters
    ----------
    AD, BD : ndarray
        Row-point and column-point distances to the separator, shape (p, s) and (q, s).
    cutoff : int
        Blocks with at most ``cutoff**2`` pairs are resolved pair by pair.
    pivot : {"merged", "rows"}
        Split on the median of the merged row and column coordinates, or on
        the median of the row coordinates only.
    engine : {"numba", "numpy"}
        Compiled recursion, or the equivalent pure NumPy loop.

    Attributes
    ----------
    blocks : list of (k, rows, cols)
        Full products: every pair in ``rows x cols`` is assigned to ``k``.
    pair_rows, pair_cols, pair_k : ndarray
        Individually assigned pairs.
    """

    def __init__(self, AD, BD, cutoff=DIRECT_CUTOFF, pivot="merged", engine="numba"):
        AD = np.asarray(AD, dtype=np.float64)
        BD = np.asarray(BD, dtype=np.float64)
        if AD.ndim != 2 or BD.ndim != 2:
            raise ValueError("distance blocks must be 2-d")
        if AD.shape[1] != BD.shape[1]:
            raise ValueError(f"column mismatch: {AD.shape[1]} vs {BD.shape[1]} separator vertices")
        self.AD, self.BD = AD, BD
        if pivot not in ("merged", "rows"):
            raise ValueError("pivot must be 'merged' or 'rows'")
        self.cutoff = int(cutoff)
        self.pivot = pivot
        if engine not in ("numba", "numpy"):
            raise ValueError("engine must be 'numba' or 'numpy'")
        self.engine = engine
        self.blocks = []
        pr, pc, pk = [], [], []
        for k in range(AD.shape[1]):
            self._plan_column(k, pr, pc, pk)
        cat = lambda xs: np.concatenate(xs).astype(np.int64) if xs else np.zeros(0, dtype=np.int64)
        self.pair_rows, self.pair_cols, self.pair_k = cat(pr), cat(pc), cat(pk)

    @property
    def shape(self):
        return self.AD.shape[0], self.BD.shape[0]

    def _plan_column(self, k, pr, pc, pk):
        AD, BD = self.AD, self.BD
        s = AD.shape[1]
        rows = np.flatnonzero(np.isfinite(AD[:, k]))
        cols = np.flatnonzero(np.isfinite(BD[:, k]))
        if len(rows) == 0 or len(cols) == 0:
            return
        others = np.array([t for t in range(s) if t != k], dtype=np.int64)
        WH, WL = _two_diff(AD[rows, k][:, None], AD[rows][:, others])
        ZH, ZL = _two_diff(BD[cols][:, others], BD[cols, k][:, None])
        W, Z = _joint_ranks(WH, WL, ZH, ZL)
        # on ties the lower column wins: w <= z becomes w < z + 1 for k' > k
        Z += (others > k)
        area = self.cutoff * self.cutoff
        if self.engine == "numba":
            br, bc, ii, jj = plan_column(W, Z, area, self.pivot == "merged")
            self.blocks.extend((k, rows[r], cols[c]) for r, c in zip(br, bc))
            pr.append(rows[ii])
            pc.append(cols[jj])
            pk.append(np.full(len(ii), k))
            return
        stack = [(np.arange(len(rows)), np.arange(len(cols)), np.arange(len(others)))]
        while stack:
            ia, jb, dims = stack.pop()
            if len(ia) == 0 or len(jb) == 0:
                continue
            if len(dims):
                w, z = W[ia][:, dims], Z[jb][:, dims]
                wmin, zmax = w.min(axis=0), z.max(axis=0)
                if not np.all(wmin < zmax):
                    continue
                # drop rows/cols that can never satisfy some coordinate
                row_ok = np.all(w < zmax, axis=1)
                col_ok = np.all(z > wmin, axis=1)
                if not row_ok.all() or not col_ok.all():
                    ia, jb = ia[row_ok], jb[col_ok]
                    if len(ia) == 0 or len(jb) == 0:
                        continue
                    w, z = w[row_ok], z[col_ok]
                live = w.max(axis=0) >= z.min(axis=0)
                dims, w, z = dims[live], w[:, live], z[:, live]
            if len(dims) == 0:
                self.blocks.append((k, rows[ia], cols[jb]))
                continue
            if len(ia) * len(jb) <= area:
                ok = np.all(w[:, None, :] < z[None, :, :], axis=2)
                ii, jj = np.nonzero(ok)
                pr.append(rows[ia[ii]])
                pc.append(cols[jb[jj]])
                pk.append(np.full(len(ii), k))
                continue
            w0, z0 = w[:, 0], z[:, 0]
            lo, hi = w0.min(), w0.max()
            rest = dims[1:]
            if lo == hi:
                # constant row coordinate: a plain threshold on the columns
                stack.append((ia, jb[z0 > lo], rest))
                continue
            piv = _split(w0, z0, hi, self.pivot)
            left, right_b = w0 <= piv, z0 > piv
            stack.append((ia[~left], jb[right_b], dims))
            stack.append((ia[left], jb[~right_b], dims))
            stack.append((ia[left], jb[right_b], rest))

    def pair_count(self):
        """Number of (row, col) assignments made by the plan."""
        return int(sum(len(r) * len(c) for _, r, c in self.blocks) + len(self.pair_rows))

    def coverage(self):
        """Dense matrix counting how often each pair was assigned (small inputs only)."""
        cov = np.zeros(self.shape, dtype=np.int64)
        for _, r, c in self.blocks:
            cov[np.ix_(r, c)] += 1
        np.add.at(cov, (self.pair_rows, self.pair_cols), 1)
        return cov

    def assignment(self):
        """Dense matrix of the column each pair was charged to (-1 if none)."""
        out = np.full(self.shape, -1, dtype=np.int64)
        for k, r, c in self.blocks:
            out[np.ix_(r, c)] = k
        out[self.pair_rows, self.pair_cols] = self.pair_k
        return out

    def size(self):
        """Stored index count; a proxy for memory and per-product work."""
        return int(sum(len(r) + len(c) for _, r, c in self.blocks) + 3 * len(self.pair_rows))

    def operator(self, kernel):
        return CrossOperator(self, kernel)


class CrossOperator:
    """Sparse factorisation ``M = SA @ SB + P`` of the cross block for one kernel."""

    def __init__(self, plan, kernel):
        self.plan, self.kernel = plan, kernel
        p, q = plan.shape
        AD, BD = plan.AD, plan.BD
        nb = len(plan.blocks)
        ks = np.array([k for k, _, _ in plan.blocks], dtype=np.int64)
        lr = np.array([len(r) for _, r, _ in plan.blocks], dtype=np.int64)
        lc = np.array([len(c) for _, _, c in plan.blocks], dtype=np.int64)
        cat = lambda xs: np.concatenate(xs).astype(np.int64) if xs else np.zeros(0, dtype=np.int64)
        r_all = cat([r for _, r, _ in plan.blocks])
        c_all = cat([c for _, _, c in plan.blocks])
        br, bc = np.repeat(np.arange(nb), lr), np.repeat(np.arange(nb), lc)
        fa = kernel.factors(AD[r_all, ks[br]], "left")
        fb = kernel.factors(BD[c_all, ks[bc]], "right")
        rank = fa.shape[1] if nb else 1
        # block t owns feature columns t*rank .. t*rank + rank - 1
        feat = np.arange(rank)
        self.SA = sp.csr_matrix((fa.ravel(), (np.repeat(r_all, rank), (br[:, None] * rank + feat).ravel())),
                                shape=(p, nb * rank))
        self.SB = sp.csr_matrix((fb.ravel(), ((bc[:, None] * rank + feat).ravel(), np.repeat(c_all, rank))),
                                shape=(nb * rank, q))
        pv = kernel(AD[plan.pair_rows, plan.pair_k] + BD[plan.pair_cols, plan.pair_k])
        self.P = sp.csr_matrix((pv, (plan.pair_rows, plan.pair_cols)), shape=(p, q))
        self.SAt, self.SBt, self.Pt = self.SA.T.tocsr(), self.SB.T.tocsr(), self.P.T.tocsr()

    def matvec(self, v):
        """``M @ v``."""
        return self.SA @ (self.SB @ v) + self.P @ v

    def rmatvec(self, u):
        """``M.T @ u``."""
        return self.SBt @ (self.SAt @ u) + self.Pt @ u


def cross_compute(AD, BD, u, v, kernel=None, cutoff=DIRECT_CUTOFF, count=False, pivot="merged"):
    """Return ``(M @ v, M.T @ u)`` for ``M[i, j] = f(min_k AD[i, k] + BD[j, k])``.

    Parameters
    ----------
    AD : ndarray, shape (|A|, |S|)
    BD : ndarray, shape (|B|, |S|)
    u : ndarray, shape (|A|,)
    v : ndarray, shape (|B|,)
    kernel : Kernel, optional
        Defaults to ``ExponentialKernel(1.0)``.
    count : bool
        Also return the number of assigned pairs (``|A| |B|`` when every
        distance is finite).
    """
    kernel = kernel or ExponentialKernel(1.0)
    plan = CrossPlan(AD, BD, cutoff, pivot)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (plan.shape[0],) or v.shape != (plan.shape[1],):
        raise ValueError("u and v must match the rows of AD and BD")
    op = plan.operator(kernel)
    L, R = op.matvec(v), op.rmatvec(u)
    if count:
        return L, R, plan.pair_count()
    return L, R


def cross_brute_force(AD, BD, u, v, kernel):
    """O(|A| |B| |S|) reference evaluation of :func:`cross_compute`."""
    AD, BD = np.asarray(AD, float), np.asarray(BD, float)
    D = np.min(AD[:, None, :] + BD[None, :, :], axis=2)
    M = kernel(D)
    return M @ v, M.T @ u
