"""Synthetic graph families: dumbbells, necked grid surfaces and random trees."""

import heapq

import numpy as np

from .graph import WeightedGraph


def _lattice_graph(points, euclidean):
    """Triangulated lattice graph on integer points.

    Joins horizontal, vertical and ``(+1, +1)`` diagonal neighbours. Only one
    diagonal per unit square is used, so the drawing stays planar.
    """
    points = np.asarray(sorted(set(map(tuple, points))), dtype=np.int64)
    index = {tuple(p): i for i, p in enumerate(points)}
    us, vs, ws = [], [], []
    diag = np.sqrt(2.0) if euclidean else 1.0
    for i, (x, y) in enumerate(points):
        for dx, dy, w in ((1, 0, 1.0), (0, 1, 1.0), (1, 1, diag)):
            j = index.get((x + dx, y + dy))
            if j is not None:
                us.append(i)
                vs.append(j)
                ws.append(w)
    return WeightedGraph.from_edges(len(points), us, vs, ws,
                                    coords=points.astype(np.float64))


def generate_dumbbell(radius, width):
    """Two triangulated discs joined by a narrow bridge.

    The discs have radius ``radius`` (lattice points with x^2 + y^2 <= r^2)
    and are centred at (0, 0) and (3r, 0), so the bridge between them is
    ``radius`` long; it is ``width`` lattice rows wide. All edges have unit
    weight.
    """
    r, w = int(radius), int(width)
    if r < 2 or w < 1:
        raise ValueError("need radius >= 2 and width >= 1")
    pts = []
    span = np.arange(-r, r + 1)
    gx, gy = np.meshgrid(span, span, indexing="ij")
    disc = gx ** 2 + gy ** 2 <= r * r
    for cx in (0, 3 * r):
        pts.extend(zip(gx[disc] + cx, gy[disc]))
    y0 = -((w - 1) // 2)
    for x in range(0, 3 * r + 1):
        for y in range(y0, y0 + w):
            pts.append((x, y))
    return _lattice_graph(pts, euclidean=False)


def dumbbell_bridge(graph, radius):
    """Boolean mask of the bridge vertices of a :func:`generate_dumbbell` graph."""
    x, y = graph.coords[:, 0], graph.coords[:, 1]
    r2 = float(radius) ** 2
    in_left = x ** 2 + y ** 2 <= r2
    in_right = (x - 3 * radius) ** 2 + y ** 2 <= r2
    return ~(in_left | in_right)


def _neck_columns(side, necks):
    if necks == 0:
        return []
    cols = [int(round((c + 1) * (side - 1) / (necks + 1))) for c in range(necks)]
    if len(set(cols)) != necks or min(cols) < 1 or max(cols) > side - 2 \
            or any(b - a < 2 for a, b in zip(cols, cols[1:])):
        raise ValueError(f"side={side} is too small for {necks} necks")
    return cols


def generate_grid_surface(side, necks=0):
    """Triangulated ``side x side`` grid split into lobes by narrow corridors.

    Each neck is a lattice column from which every vertex except a run of
    three is removed, so consecutive lobes only touch through that corridor.
    Corridors alternate between the top and the bottom edge, which makes the
    lobes a chain that hop-distance layers cut through at the necks. Edge
    weights are Euclidean lengths (1 or sqrt(2)).
    """
    side, necks = int(side), int(necks)
    if side < 3 or necks < 0:
        raise ValueError("need side >= 3 and necks >= 0")
    walls = {c: k for k, c in enumerate(_neck_columns(side, necks))}
    top, bottom = {side - 3, side - 2, side - 1}, {0, 1, 2}
    pts = [(x, y) for x in range(side) for y in range(side)
           if x not in walls or y in (top if walls[x] % 2 == 0 else bottom)]
    return _lattice_graph(pts, euclidean=True)


def grid_surface_necks(graph, side, necks):
    """Return one array of corridor vertex ids per neck."""
    walls = _neck_columns(side, necks)
    x = graph.coords[:, 0]
    return [np.flatnonzero(x == c) for c in walls]


def grid_side_for_size(n, necks=0):
    """Smallest-error ``side`` so that the grid surface has about ``n`` vertices."""
    best, best_err = 3, None
    side = 3
    while True:
        try:
            walls = _neck_columns(side, necks)
        except ValueError:
            side += 1
            continue
        count = side * side - len(walls) * (side - 3)
        err = abs(count - n)
        if best_err is None or err < best_err:
            best, best_err = side, err
        if count > n:
            return best
        side += 1


def generate_random_tree(n, seed=0, weight_range=(1.0, 1.0)):
    """Uniform random labelled tree decoded from a random Pruefer sequence.

    Edge weights are drawn uniformly from ``weight_range``.
    """
    n = int(n)
    low, high = weight_range
    if n < 1 or not (0 < low <= high):
        raise ValueError("need n >= 1 and 0 < low <= high")
    rng = np.random.default_rng(seed)
    if n == 1:
        return WeightedGraph.from_edges(1, [], [], [])
    if n == 2:
        return WeightedGraph.from_edges(2, [0], [1], rng.uniform(low, high, 1))
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, seq, 1)
    leaves = [int(i) for i in np.flatnonzero(degree == 1)]
    heapq.heapify(leaves)
    us, vs = [], []
    for s in seq:
        leaf = heapq.heappop(leaves)
        us.append(leaf)
        vs.append(int(s))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, int(s))
    us.append(heapq.heappop(leaves))
    vs.append(heapq.heappop(leaves))
    return WeightedGraph.from_edges(n, us, vs, rng.uniform(low, high, n - 1))


def generate_path(n, weights=None):
    """Path ``0 - 1 - ... - n-1``; unit weights unless ``weights`` is given."""
    if weights is None:
        weights = np.ones(max(n - 1, 0))
    coords = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
    return WeightedGraph.from_edges(n, np.arange(n - 1), np.arange(1, n), weights,
                                    coords=coords)
