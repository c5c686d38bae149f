"""Readers for edge lists and triangle meshes (OFF and a subset of OBJ)."""

import numpy as np

from .graph import WeightedGraph


class ParseError(ValueError):
    """Malformed input file; the message carries ``path:line``."""

    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path, self.lineno = path, lineno


def _content_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def load_edge_list(path):
    """Read ``n m`` followed by ``m`` lines ``u v w`` (0-based ids).

    Parallel edges keep their minimum weight. ``#`` starts a comment.
    """
    lines = _content_lines(path)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise ParseError(path, 0, "empty file") from None
    if len(head) != 2:
        raise ParseError(path, lineno, "header must be 'n m'")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError(path, lineno, "header must be two integers") from None
    if n < 0 or m < 0:
        raise ParseError(path, lineno, "negative counts")
    u, v, w = np.empty(m, np.int64), np.empty(m, np.int64), np.empty(m)
    count = 0
    for lineno, tok in lines:
        if count == m:
            raise ParseError(path, lineno, f"more than the declared {m} edges")
        if len(tok) != 3:
            raise ParseError(path, lineno, "expected 'u v w'")
        try:
            a, b, x = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise ParseError(path, lineno, "expected two integers and a number") from None
        if not (0 <= a < n and 0 <= b < n):
            raise ParseError(path, lineno, f"vertex id out of range 0..{n - 1}")
        if a == b:
            raise ParseError(path, lineno, "self-loop")
        if not (x > 0 and np.isfinite(x)):
            raise ParseError(path, lineno, f"weight must be positive, got {tok[2]}")
        u[count], v[count], w[count] = a, b, x
        count += 1
    if count != m:
        raise ParseError(path, lineno if m else 1, f"declared {m} edges, found {count}")
    return WeightedGraph.from_edges(n, u, v, w)


def _faces_to_graph(coords, faces, drop_unreferenced):
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    pairs = []
    for f in faces:
        f = np.asarray(f, dtype=np.int64)
        pairs.append(np.column_stack([f, np.roll(f, -1)]))
    e = np.concatenate(pairs) if pairs else np.zeros((0, 2), np.int64)
    e = e[e[:, 0] != e[:, 1]]
    e = np.unique(np.sort(e, axis=1), axis=0)
    ids = np.arange(len(coords))
    if drop_unreferenced:
        ids = np.unique(e)
        remap = np.full(len(coords), -1, np.int64)
        remap[ids] = np.arange(len(ids))
        e = remap[e]
        coords = coords[ids]
    w = np.linalg.norm(coords[e[:, 0]] - coords[e[:, 1]], axis=1)
    if np.any(w <= 0):
        raise ValueError("mesh has coincident vertices joined by an edge")
    return WeightedGraph.from_edges(len(coords), e[:, 0], e[:, 1], w, coords=coords), ids


def _read_off(path):
    lines = _content_lines(path)
    try:
        lineno, tok = next(lines)
        if tok[0] != "OFF":
            raise ParseError(path, lineno, "missing OFF header")
        tok = tok[1:] or next(lines)[1]
        nv, nf = int(tok[0]), int(tok[1])
    except StopIteration:
        raise ParseError(path, 0, "truncated header") from None
    except (ValueError, IndexError):
        raise ParseError(path, lineno, "bad counts line") from None
    coords, faces = [], []
    for lineno, tok in lines:
        try:
            if len(coords) < nv:
                coords.append([float(t) for t in tok[:3]])
                if len(tok) < 3:
                    raise ValueError
                continue
            if len(faces) < nf:
                k = int(tok[0])
                f = [int(t) for t in tok[1:1 + k]]
                if len(f) != k or k < 2:
                    raise ValueError
                if min(f) < 0 or max(f) >= nv:
                    raise ParseError(path, lineno, "face references a missing vertex")
                faces.append(f)
        except ValueError:
            raise ParseError(path, lineno, "malformed line") from None
    if len(coords) != nv or len(faces) != nf:
        raise ParseError(path, lineno, "fewer vertices or faces than declared")
    return coords, faces


def _read_obj(path):
    coords, faces = [], []
    for lineno, tok in _content_lines(path):
        try:
            if tok[0] == "v":
                coords.append([float(t) for t in tok[1:4]])
                if len(tok) < 4:
                    raise ValueError
            elif tok[0] == "f":
                f = [int(t.split("/")[0]) for t in tok[1:]]
                if len(f) < 2:
                    raise ValueError
                # 1-based, negative indices count from the end
                f = [i - 1 if i > 0 else len(coords) + i for i in f]
                if min(f) < 0 or max(f) >= len(coords):
                    raise ParseError(path, lineno, "face references a missing vertex")
                faces.append(f)
        except ValueError:
            raise ParseError(path, lineno, "malformed line") from None
    return coords, faces


def load_mesh(path, drop_unreferenced=True, return_mapping=False):
    """Graph of the unique mesh edges, weighted by Euclidean length.

    Parameters
    ----------
    path : str
        ``.off`` or ``.obj`` file.
    drop_unreferenced : bool
        Drop vertices that no face uses, renumbering the rest.
    return_mapping : bool
        Also return the original index of every graph vertex.
    """
    path = str(path)
    reader = _read_obj if path.lower().endswith(".obj") else _read_off
    coords, faces = reader(path)
    graph, ids = _faces_to_graph(coords, faces, drop_unreferenced)
    return (graph, ids) if return_mapping else graph


def save_edge_list(path, graph):
    u, v, w = graph.edges()
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {len(u)}\n")
        for a, b, x in zip(u, v, w):
            fh.write(f"{a} {b} {float(x)!r}\n")
