"""Compiled version of the cross-block dominance recursion (see :mod:`otx.cross`)."""

import numpy as np
from numba import njit


@njit(cache=True)
def _filter(a, mask):
    out = np.empty(mask.sum(), dtype=np.int64)
    t = 0
    for i in range(a.size):
        if mask[i]:
            out[t] = a[i]
            t += 1
    return out


@njit(cache=True)
def plan_column(W, Z, area, merged):
    """Return ``(block_rows, block_cols, pair_rows, pair_cols)`` for one separator column.

    ``W`` and ``Z`` hold integer ranks; a pair qualifies iff ``W[i] < Z[j]``
    on every coordinate. Same traversal order as the NumPy implementation.
    """
    p, d = W.shape
    q = Z.shape[0]
    s_ia = [np.arange(p)]
    s_jb = [np.arange(q)]
    s_dm = [np.arange(d)]
    b_rows = [np.empty(0, dtype=np.int64)]
    b_cols = [np.empty(0, dtype=np.int64)]
    pr = np.empty(64, dtype=np.int64)
    pc = np.empty(64, dtype=np.int64)
    npairs = 0
    while len(s_ia):
        ia = s_ia.pop()
        jb = s_jb.pop()
        dims = s_dm.pop()
        if ia.size == 0 or jb.size == 0:
            continue
        nd = dims.size
        if nd:
            wmin = np.empty(nd, dtype=np.int64)
            zmax = np.empty(nd, dtype=np.int64)
            dead = False
            for t in range(nd):
                c = dims[t]
                m = W[ia[0], c]
                for i in range(1, ia.size):
                    m = min(m, W[ia[i], c])
                wmin[t] = m
                m = Z[jb[0], c]
                for j in range(1, jb.size):
                    m = max(m, Z[jb[j], c])
                zmax[t] = m
                if wmin[t] >= zmax[t]:
                    dead = True
                    break
            if dead:
                continue
            row_ok = np.ones(ia.size, dtype=np.bool_)
            for i in range(ia.size):
                for t in range(nd):
                    if W[ia[i], dims[t]] >= zmax[t]:
                        row_ok[i] = False
                        break
            col_ok = np.ones(jb.size, dtype=np.bool_)
            for j in range(jb.size):
                for t in range(nd):
                    if Z[jb[j], dims[t]] <= wmin[t]:
                        col_ok[j] = False
                        break
            if not row_ok.all():
                ia = _filter(ia, row_ok)
            if not col_ok.all():
                jb = _filter(jb, col_ok)
            if ia.size == 0 or jb.size == 0:
                continue
            live = np.zeros(nd, dtype=np.bool_)
            for t in range(nd):
                c = dims[t]
                wmax = W[ia[0], c]
                for i in range(1, ia.size):
                    wmax = max(wmax, W[ia[i], c])
                zmin = Z[jb[0], c]
                for j in range(1, jb.size):
                    zmin = min(zmin, Z[jb[j], c])
                live[t] = wmax >= zmin
            dims = _filter(dims, live)
        if dims.size == 0:
            b_rows.append(ia)
            b_cols.append(jb)
            continue
        if ia.size * jb.size <= area:
            for i in range(ia.size):
                for j in range(jb.size):
                    ok = True
                    for t in range(dims.size):
                        if W[ia[i], dims[t]] >= Z[jb[j], dims[t]]:
                            ok = False
                            break
                    if ok:
                        if npairs == pr.size:
                            pr = np.concatenate((pr, np.empty(pr.size, dtype=np.int64)))
                            pc = np.concatenate((pc, np.empty(pc.size, dtype=np.int64)))
                        pr[npairs] = ia[i]
                        pc[npairs] = jb[j]
                        npairs += 1
            continue
        c0 = dims[0]
        w0 = np.empty(ia.size, dtype=np.int64)
        for i in range(ia.size):
            w0[i] = W[ia[i], c0]
        z0 = np.empty(jb.size, dtype=np.int64)
        for j in range(jb.size):
            z0[j] = Z[jb[j], c0]
        lo, hi = w0.min(), w0.max()
        rest = dims[1:].copy()
        if lo == hi:
            s_ia.append(ia)
            s_jb.append(_filter(jb, z0 > lo))
            s_dm.append(rest)
            continue
        nw, nz = w0.size, z0.size
        piv = hi
        found = False
        if merged:
            allv = np.sort(np.concatenate((w0, z0)))
            piv = allv[(nw + nz - 1) // 2]
            na = (w0 <= piv).sum()
            nb = (z0 > piv).sum()
            found = na + (nz - nb) < nw + nz and (nw - na) + nb < nw + nz
        if not found:
            piv = np.sort(w0)[(nw - 1) // 2]
            if piv == hi:
                piv = lo
                for i in range(nw):
                    if w0[i] < hi and w0[i] > piv:
                        piv = w0[i]
        left = w0 <= piv
        right_b = z0 > piv
        s_ia.append(_filter(ia, ~left))
        s_jb.append(_filter(jb, right_b))
        s_dm.append(dims)
        s_ia.append(_filter(ia, left))
        s_jb.append(_filter(jb, ~right_b))
        s_dm.append(dims)
        s_ia.append(_filter(ia, left))
        s_jb.append(_filter(jb, right_b))
        s_dm.append(rest)
    return b_rows[1:], b_cols[1:], pr[:npairs], pc[:npairs]
