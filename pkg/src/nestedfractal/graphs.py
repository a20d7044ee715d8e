"""Level-n vertex graphs of an IFS: deduplicated vertices, cells, edges.

The level-n graph has vertex set V_n = union of w_sigma(V_0) over words
sigma of length n, and one edge of length ratio^n * l(e) per (word, E_0
edge) pair. Parallel edges arising from distinct words are kept distinct;
metric queries collapse them to the minimum length.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import BudgetExceeded, InvalidFractal

DEFAULT_BUDGET = 10_000_000


def _compose_level(fractal, n):
    """Affine data (A_sigma, b_sigma) for all k^n words in lexicographic order."""
    nn = fractal.ambient_dim
    a1 = np.stack([m.matrix for m in fractal.maps])  # (k, N, N)
    b1 = np.stack([m.translation for m in fractal.maps])  # (k, N)
    a = np.eye(nn)[None]
    b = np.zeros((1, nn))
    words = np.zeros((1, 0), dtype=np.int16)
    k = fractal.k
    for level in range(n):
        a_next = np.einsum("sij,kjl->skil", a, a1).reshape(-1, nn, nn)
        b_next = (np.einsum("sij,kj->ski", a, b1) + b[:, None, :]).reshape(-1, nn)
        w_next = np.empty((len(words), k, level + 1), dtype=np.int16)
        w_next[:, :, :level] = words[:, None, :]
        w_next[:, :, level] = np.arange(1, k + 1)[None, :]
        a, b, words = a_next, b_next, w_next.reshape(-1, level + 1)
    return a, b, words


def _dedup(points, tol):
    """Identify coinciding points.

    Spatial hash on coordinates rounded to multiples of tol, then a
    confirmation pass merging buckets whose representatives are within
    2*tol (rounding alone can split a coinciding pair across a bucket
    boundary). Returns (ids per point, vertex coordinates, bucket dict).
    """
    keys = np.round(points / tol).astype(np.int64)
    uniq, first, inverse = np.unique(
        keys, axis=0, return_index=True, return_inverse=True
    )
    reps = points[first]
    parent = np.arange(len(uniq))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if len(reps) > 1:
        pairs = cKDTree(reps).query_pairs(2.0 * tol, output_type="ndarray")
        for i, j in pairs:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(uniq))])
    root_per_point = roots[inverse]

    # final ids ordered by first occurrence in the point stream
    uniq_roots, first_pos = np.unique(root_per_point, return_index=True)
    order = np.argsort(first_pos, kind="stable")
    id_of_root = np.empty(len(uniq), dtype=np.int64)
    id_of_root[uniq_roots[order]] = np.arange(len(uniq_roots))
    ids = id_of_root[root_per_point]
    vertices = points[np.sort(first_pos)]
    buckets = {
        uniq[b].tobytes(): int(id_of_root[roots[b]]) for b in range(len(uniq))
    }
    return ids, vertices, buckets


@dataclass
class GraphApprox:
    """Vertex graph of one approximation level.

    cell_vids[c, i] is the vertex id of the image of V_0 point i under the
    c-th word (lexicographic order over the alphabet 1..k); edges are the
    (cell, E_0 edge) pairs in cell-major order.
    """

    level: int
    ratio: float
    dedup_tol: float
    vertices: np.ndarray  # (Mv, N)
    cell_words: np.ndarray  # (k^n, n) letters in 1..k
    cell_vids: np.ndarray  # (k^n, |V0|)
    e0_pairs: np.ndarray  # (m, 2)
    e0_lengths: np.ndarray  # (m,)
    _buckets: dict = field(repr=False)
    _adjacency: object = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cell_vids)

    @property
    def edge_u(self):
        return self.cell_vids[:, self.e0_pairs[:, 0]].ravel()

    @property
    def edge_v(self):
        return self.cell_vids[:, self.e0_pairs[:, 1]].ravel()

    @property
    def edge_lengths(self):
        scale = self.ratio**self.level
        return np.tile(scale * self.e0_lengths, self.n_cells)

    @property
    def edge_cell(self):
        return np.repeat(np.arange(self.n_cells), len(self.e0_pairs))

    @property
    def edge_e0(self):
        return np.tile(np.arange(len(self.e0_pairs)), self.n_cells)

    def word_of_cell(self, c):
        return tuple(int(x) for x in self.cell_words[c])

    def cell_of_word(self, word, k):
        """Cell index of a word (its lexicographic rank over 1..k)."""
        if len(word) != self.level:
            raise ValueError(f"word length {len(word)} != level {self.level}")
        return word_rank(word, k)

    def adjacency(self):
        """Symmetric CSR matrix of minimum edge length per vertex pair."""
        if self._adjacency is None:
            u = np.concatenate([self.edge_u, self.edge_v])
            v = np.concatenate([self.edge_v, self.edge_u])
            w = np.concatenate([self.edge_lengths, self.edge_lengths])
            order = np.lexsort((w, v, u))
            u, v, w = u[order], v[order], w[order]
            keep = np.ones(len(u), dtype=bool)
            keep[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])
            mat = sparse.csr_matrix(
                (w[keep], (u[keep], v[keep])),
                shape=(self.n_vertices, self.n_vertices),
            )
            self._adjacency = mat
        return self._adjacency

    def find_vertices(self, points, missing=-1):
        """Vertex ids of the given points, `missing` where absent.

        Hash lookup on the rounded coordinates with a neighbor-bucket
        probe and exact-distance confirmation at 2 * dedup_tol.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        keys = np.round(points / self.dedup_tol).astype(np.int64)
        nn = points.shape[1]
        offsets = [np.array(o, dtype=np.int64) for o in product((-1, 0, 1), repeat=nn)]
        out = np.full(len(points), missing, dtype=np.int64)
        for i, key in enumerate(keys):
            vid = self._buckets.get(key.tobytes())
            if vid is None:
                for off in offsets:
                    vid = self._buckets.get((key + off).tobytes())
                    if vid is not None and (
                        np.linalg.norm(points[i] - self.vertices[vid])
                        <= 2.0 * self.dedup_tol
                    ):
                        break
                    vid = None
            if vid is not None:
                out[i] = vid
        return out

    def find_vertex(self, point):
        vid = self.find_vertices([point])[0]
        if vid < 0:
            return None
        return int(vid)


def required_budget(fractal, n):
    """Oriented edge count of the level-n graph (exact integer)."""
    return 2 * fractal.n_edges * fractal.k**n


def build_graph(fractal, n, budget=None):
    """Build the level-n graph with vertex deduplication.

    Raises BudgetExceeded when 2 * |E_0| * k^n oriented edges exceed the
    budget (default 10^7), and InvalidFractal(condition=3) if the level
    graph is disconnected.
    """
    if n < 0:
        raise ValueError("level must be non-negative")
    budget = DEFAULT_BUDGET if budget is None else int(budget)
    need = required_budget(fractal, n)
    if need > budget:
        raise BudgetExceeded(
            f"level {n} needs {need} oriented edges (budget {budget})",
            required=need,
            budget=budget,
        )
    a, b, words = _compose_level(fractal, n)
    points = (
        np.einsum("sij,vj->svi", a, fractal.v0) + b[:, None, :]
    )  # (k^n, |V0|, N)
    m0 = len(fractal.v0)
    flat = points.reshape(-1, fractal.ambient_dim)
    ids, vertices, buckets = _dedup(flat, fractal.dedup_tol)
    graph = GraphApprox(
        level=n,
        ratio=fractal.ratio,
        dedup_tol=fractal.dedup_tol,
        vertices=vertices,
        cell_words=words,
        cell_vids=ids.reshape(-1, m0),
        e0_pairs=fractal.e0_pairs,
        e0_lengths=fractal.e0_lengths,
        _buckets=buckets,
    )
    ncomp, _ = sparse.csgraph.connected_components(graph.adjacency(), directed=False)
    if ncomp != 1:
        raise InvalidFractal(
            f"level-{n} graph splits into {ncomp} components", condition=3
        )
    return graph


def word_rank(word, k):
    """Lexicographic rank of a word over 1..k among words of its length."""
    r = 0
    for letter in word:
        r = r * k + (int(letter) - 1)
    return r


@dataclass
class NestingReport:
    """Diagnostic result of the cell-coincidence check at one level."""

    level: int
    duplicate_cells: list  # [(word_a, word_b)] with identical vertex sets
    near_pairs: list  # [(vid_a, vid_b, distance)] suspicious almost-merges
    ok: bool


def check_nesting(fractal, n, budget=None):
    """Verify distinct level-n cells have distinct vertex sets.

    Also flags pairs of distinct deduplicated vertices closer than half
    the minimal level-n edge length, which would indicate points that
    should have coincided exactly. Diagnostic only; returns a report.
    """
    graph = fractal.graph(n) if budget is None else build_graph(fractal, n, budget)
    seen = {}
    duplicates = []
    for c in range(graph.n_cells):
        key = tuple(sorted(int(x) for x in graph.cell_vids[c]))
        if key in seen:
            duplicates.append((graph.word_of_cell(seen[key]), graph.word_of_cell(c)))
        else:
            seen[key] = c
    near = []
    min_len = fractal.ratio**n * float(graph.e0_lengths.min())
    radius = 0.5 * min_len
    if graph.n_vertices > 1 and radius > 2 * graph.dedup_tol:
        pairs = cKDTree(graph.vertices).query_pairs(radius, output_type="ndarray")
        for i, j in pairs:
            d = float(np.linalg.norm(graph.vertices[i] - graph.vertices[j]))
            near.append((int(i), int(j), d))
    return NestingReport(
        level=n,
        duplicate_cells=duplicates,
        near_pairs=near,
        ok=not duplicates and not near,
    )
