"""Probability measures on graph vertices: validation, file I/O, geodesic mixtures."""

import warnings

import numpy as np

from .graph import diameter_estimate, hop_distances, multi_source_distances

SUM_TOL = 1e-12


def check_measure(weights, tol=1e-9):
    """Return ``weights`` as a float array after checking it is a probability vector."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("a measure is a 1-d array")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("measure entries must be finite and nonnegative")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"measure sums to {w.sum():.12g}, expected 1")
    return w


def normalize(weights):
    w = np.asarray(weights, dtype=np.float64)
    if np.any(~np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("cannot normalise: need finite nonnegative weights with positive sum")
    return w / w.sum()


def load_measure(path):
    """Read one nonnegative number per line, normalising (with a warning) if needed."""
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                x = float(line)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
            if not np.isfinite(x) or x < 0:
                raise ValueError(f"{path}:{lineno}: negative or non-finite mass {x}")
            vals.append(x)
    w = np.asarray(vals)
    if abs(w.sum() - 1.0) > 1e-6:
        warnings.warn(f"{path}: masses sum to {w.sum():.6g}; normalising", stacklevel=2)
    return normalize(w)


def save_measure(path, weights):
    np.savetxt(path, np.asarray(weights, dtype=np.float64), fmt="%.17g")


def geodesic_gaussian_mixture(graph, anchors, weights, sigma):
    """Mixture of ``exp(-d(x, c)^2 / (2 sigma^2))`` bumps around ``anchors``.

    Each component is normalised over the vertices before mixing with
    ``weights``; the result sums to 1.
    """
    anchors = np.asarray(anchors, dtype=np.int64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if len(anchors) != len(weights) or len(anchors) == 0:
        raise ValueError("need one weight per anchor")
    if np.any(weights <= 0) or abs(weights.sum() - 1) > 1e-9:
        raise ValueError("weights must be positive and sum to 1")
    D = multi_source_distances(graph, anchors).values
    out = np.zeros(graph.n)
    for t, w in enumerate(weights):
        d = D[:, t]
        comp = np.where(np.isfinite(d), np.exp(-0.5 * (d / sigma) ** 2), 0.0)
        out += w * comp / comp.sum()
    return normalize(out)


def pca_anchors(graph):
    """Extremal vertices ``(left, right, low, high)`` along the top two principal axes.

    Graphs without coordinates fall back to BFS-eccentricity extremes.
    """
    if graph.coords is not None and graph.coords.shape[1] >= 2:
        X = graph.coords - graph.coords.mean(axis=0)
        _, _, vt = np.linalg.svd(X, full_matrices=False)
        # fix signs so the result does not depend on the SVD implementation
        for t in range(2):
            if vt[t][np.argmax(np.abs(vt[t]))] < 0:
                vt[t] = -vt[t]
        p1, p2 = X @ vt[0], X @ vt[1]
        return int(np.argmin(p1)), int(np.argmax(p1)), int(np.argmin(p2)), int(np.argmax(p2))
    d0 = hop_distances(graph, 0)
    left = int(np.argmax(d0))
    dl = hop_distances(graph, left)
    right = int(np.argmax(dl))
    dr = hop_distances(graph, right)
    # low/high: the vertices most off the left-right axis, on either side
    skew = dl - dr
    off = dl + dr
    mid = np.abs(skew) <= max(1, np.abs(skew).min())
    cand = np.flatnonzero(mid) if mid.any() else np.arange(graph.n)
    low = int(cand[np.argmax(off[cand])])
    dlow = hop_distances(graph, low)
    high = int(np.argmax(dlow))
    return left, right, low, high


def bbox_diameter(graph):
    """Euclidean diagonal of the coordinate bounding box (graph diameter without coords)."""
    if graph.coords is None:
        return diameter_estimate(graph)
    span = graph.coords.max(axis=0) - graph.coords.min(axis=0)
    return float(np.linalg.norm(span))


def default_sigma(graph):
    """``max(0.18 * diam, 3 * mean edge length, 1e-8)``."""
    _, _, w = graph.edges()
    mean_w = float(w.mean()) if len(w) else 0.0
    return max(0.18 * bbox_diameter(graph), 3.0 * mean_w, 1e-8)


def default_measures(graph, sigma=None):
    """Source on (left, low) with weights (0.7, 0.3); target on (right, high) with (0.65, 0.35)."""
    sigma = default_sigma(graph) if sigma is None else sigma
    left, right, low, high = pca_anchors(graph)
    a = geodesic_gaussian_mixture(graph, [left, low], [0.7, 0.3], sigma) if low != left \
        else geodesic_gaussian_mixture(graph, [left], [1.0], sigma)
    b = geodesic_gaussian_mixture(graph, [right, high], [0.65, 0.35], sigma) if high != right \
        else geodesic_gaussian_mixture(graph, [right], [1.0], sigma)
    return a, b
