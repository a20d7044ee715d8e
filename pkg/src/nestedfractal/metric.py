"""Graph metrics of the approximation levels and their limit.

d_n is the shortest-path metric of the level-n graph; it increases with n
and converges to the geodesic distance induced by the ambient embedding.
Parallel edges collapse to their minimum length for all metric queries.
"""

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import InvalidProjection, NotAVertex, Unreachable
from .functions import values_on
from .numerics import geometric_tail


@dataclass
class GraphPath:
    """A vertex path in one level graph, with its length."""

    level: int
    vertex_ids: list
    length: float


@dataclass
class DistanceSequence:
    """d_n for n from the first common level up to n_max, plus the
    geometric-increment extrapolation of the limit."""

    x: np.ndarray
    y: np.ndarray
    levels: np.ndarray
    values: np.ndarray
    extrapolated: float
    q_estimate: float
    residual: float


def shortest_path_distance(graph, x_id, y_id):
    """Exact shortest path by Dijkstra, with a deterministic witness.

    Ties are broken towards smaller vertex ids (the heap orders equal
    distances by id, and among equal-distance predecessors the smallest
    id wins), so the returned path is reproducible.
    """
    adj = graph.adjacency()
    indptr, indices, weights = adj.indptr, adj.indices, adj.data
    n = graph.n_vertices
    if not (0 <= x_id < n and 0 <= y_id < n):
        raise NotAVertex(f"vertex ids must lie in 0..{n - 1}")
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    dist[x_id] = 0.0
    heap = [(0.0, x_id)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == y_id:
            break
        for idx in range(indptr[u], indptr[u + 1]):
            v = indices[idx]
            if done[v]:
                continue
            nd = d + weights[idx]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and (pred[v] == -1 or u < pred[v]):
                pred[v] = u
    if not np.isfinite(dist[y_id]):
        raise Unreachable(f"no path between {x_id} and {y_id}")
    path = [int(y_id)]
    while path[-1] != x_id:
        path.append(int(pred[path[-1]]))
    path.reverse()
    return float(dist[y_id]), GraphPath(
        level=graph.level, vertex_ids=path, length=float(dist[y_id])
    )


def graph_distances(graph, source_ids, target_ids=None):
    """Distances from the given sources (C Dijkstra; values only)."""
    mat = csgraph.dijkstra(graph.adjacency(), directed=False, indices=source_ids)
    if target_ids is None:
        return mat
    return mat[..., target_ids]


def _locate(fractal, x, y, n_max, budget=None):
    """Smallest level containing both points as vertices."""
    for n in range(n_max + 1):
        graph = fractal.graph(n, budget=budget)
        xi = graph.find_vertex(x)
        yi = graph.find_vertex(y)
        if xi is not None and yi is not None:
            return n, xi, yi
    raise NotAVertex(f"{x} and {y} are not both vertices up to level {n_max}")


def distance_sequence(fractal, x, y, n_max, budget=None):
    """d_n for all levels from the first containing x and y up to n_max.

    The limit is estimated by fitting a geometric model to the increments
    (exact when the increments are self-similar; when they vanish, the
    edge-subdivision case, the last value is already the limit). The
    extrapolation is an estimate: the fit residual is the observed spread
    of the increment ratios.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k0, _, _ = _locate(fractal, x, y, n_max, budget=budget)
    levels = np.arange(k0, n_max + 1)
    vals = np.empty(len(levels))
    for i, n in enumerate(levels):
        graph = fractal.graph(n, budget=budget)
        xi, yi = graph.find_vertex(x), graph.find_vertex(y)
        d = graph_distances(graph, xi, [yi])[0]
        if not np.isfinite(d):
            raise Unreachable(f"level {n} graph does not connect the points")
        vals[i] = d
    atol = 1e-13 * max(1.0, float(vals.max()))
    limit, q, residual = geometric_tail(vals, atol=atol)
    limit = max(limit, float(vals[-1]))
    return DistanceSequence(
        x=x,
        y=y,
        levels=levels,
        values=vals,
        extrapolated=limit,
        q_estimate=q,
        residual=residual,
    )


def distance_multilevel(fractal, x, y, n, k_cap, budget=None):
    """Distance in the graph whose edge set spans levels n..max(n, k(x,y)).

    For n at least the first common level this equals d_n; for smaller n
    the coarser edges are added to the level-k graph and can only shorten
    paths (with n = 0 this is the distance induced by the plain commutator
    seminorm).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k0, _, _ = _locate(fractal, x, y, k_cap, budget=budget)
    if n >= k0:
        graph = fractal.graph(n, budget=budget)
        xi, yi = graph.find_vertex(x), graph.find_vertex(y)
        d = graph_distances(graph, xi, [yi])[0]
        return float(d)
    fine = fractal.graph(k0, budget=budget)
    rows, cols, vals = [], [], []
    for level in range(n, k0 + 1):
        g = fractal.graph(level, budget=budget)
        u = fine.find_vertices(g.vertices[g.edge_u])
        v = fine.find_vertices(g.vertices[g.edge_v])
        if (u < 0).any() or (v < 0).any():
            raise NotAVertex(f"level-{level} vertices missing from level {k0}")
        rows.append(u)
        cols.append(v)
        vals.append(g.edge_lengths)
    u = np.concatenate(rows + cols)
    v = np.concatenate(cols + rows)
    w = np.concatenate(vals + vals)
    order = np.lexsort((w, v, u))
    u, v, w = u[order], v[order], w[order]
    keep = np.ones(len(u), dtype=bool)
    keep[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])
    union = sparse.csr_matrix(
        (w[keep], (u[keep], v[keep])), shape=(fine.n_vertices, fine.n_vertices)
    )
    xi, yi = fine.find_vertex(x), fine.find_vertex(y)
    d = csgraph.dijkstra(union, directed=False, indices=xi)[yi]
    if not np.isfinite(d):
        raise Unreachable("union graph does not connect the points")
    return float(d)


def project_path(fractal, path, n, budget=None):
    """Project a level-m path onto level n < m.

    Walks the path and keeps the vertices that exist at level n (first
    visits; the input being simple, every kept vertex is new). Consecutive
    kept vertices share a level-n cell, so they are joined by level-n
    edges; the projected path is simple and never longer.
    """
    if n > path.level:
        raise InvalidProjection("target level must not exceed the path level")
    source = fractal.graph(path.level, budget=budget)
    target = fractal.graph(n, budget=budget)
    coords = source.vertices[np.asarray(path.vertex_ids, dtype=np.int64)]
    ids = target.find_vertices(coords)
    if ids[0] < 0 or ids[-1] < 0:
        raise InvalidProjection(f"path endpoints are not level-{n} vertices")
    kept = [int(i) for i in ids if i >= 0]
    adj = target.adjacency()
    length = 0.0
    for a, b in zip(kept[:-1], kept[1:]):
        w = adj[a, b]
        if w == 0.0 and a != b:
            raise InvalidProjection(
                f"projected vertices {a},{b} share no level-{n} edge"
            )
        length += float(w)
    return GraphPath(level=n, vertex_ids=kept, length=length)


def lip_seminorm(graph, f, fractal=None):
    """Largest jump-to-length ratio over the level's edges.

    Equals the Lipschitz constant of f with respect to the level metric.
    """
    vals = values_on(f, fractal, graph)
    jumps = np.abs(vals[graph.edge_u] - vals[graph.edge_v])
    return float((jumps / graph.edge_lengths).max())


@dataclass
class EssLipTable:
    """Truncated tail suprema sup over edges of levels n..n_max.

    An upper truncation of an infimum over the infinite tail: the rows
    are diagnostic approximants, not a claimed value of the essential
    seminorm.
    """

    n_max: int
    level_sups: np.ndarray  # per-level edge supremum, levels 0..n_max
    rows: list  # (n, max of level_sups[n..n_max])
    minimum: float


def ess_lip_seminorm(fractal, f, n_min_range, n_max, budget=None):
    """Table of tail suprema max(s_n..s_n_max) for n in n_min_range, where
    s_m is the jump-to-length supremum over level-m edges."""
    sups = np.empty(n_max + 1)
    for m in range(n_max + 1):
        graph = fractal.graph(m, budget=budget)
        sups[m] = lip_seminorm(graph, f, fractal=fractal)
    rows = []
    for n in n_min_range:
        if not 0 <= n <= n_max:
            raise ValueError(f"n = {n} outside 0..{n_max}")
        rows.append((int(n), float(sups[n:].max())))
    return EssLipTable(
        n_max=n_max,
        level_sups=sups,
        rows=rows,
        minimum=min(v for _, v in rows),
    )


def edge_subdivision_check(fractal, budget=None):
    """Do the level-1 edges cover every E_0 edge end-to-end?

    By self-similarity the level 0 -> 1 comparison settles all levels.
    Returns (flag, witness); the witness names the first uncovered E_0
    edge and the gap found on it, or None when covered.
    """
    g1 = fractal.graph(1, budget=budget)
    tol = max(2.0 * fractal.dedup_tol, 1e-12 * fractal.diameter)
    # deduplicate parallel level-1 edges by endpoint ids
    seen = set()
    segs = []
    for u, v in zip(g1.edge_u, g1.edge_v):
        key = (int(u), int(v)) if u < v else (int(v), int(u))
        if key not in seen:
            seen.add(key)
            segs.append(key)
    segs = np.array(segs)
    a = g1.vertices[segs[:, 0]]
    b = g1.vertices[segs[:, 1]]
    for e, (i, j) in enumerate(fractal.e0_pairs):
        p, q = fractal.v0[i], fractal.v0[j]
        length = fractal.e0_lengths[e]
        direction = (q - p) / length
        ta = (a - p) @ direction
        tb = (b - p) @ direction
        off_a = np.linalg.norm(a - p - ta[:, None] * direction, axis=1)
        off_b = np.linalg.norm(b - p - tb[:, None] * direction, axis=1)
        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        on = (
            (off_a <= tol)
            & (off_b <= tol)
            & (lo >= -tol)
            & (hi <= length + tol)
        )
        cover_end = 0.0
        gap = None
        for s, t in sorted(zip(lo[on], hi[on])):
            if s > cover_end + tol:
                gap = (cover_end, s)
                break
            cover_end = max(cover_end, t)
        if gap is None and cover_end < length - tol:
            gap = (cover_end, float(length))
        if gap is not None:
            witness = {
                "edge": (int(i), int(j)),
                "edge_index": int(e),
                "gap": (float(gap[0]), float(gap[1])),
            }
            return False, witness
    return True, None
