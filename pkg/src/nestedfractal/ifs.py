"""Equal-ratio iterated function systems and their boundary vertex data.

A fractal is described by k contracting similarities of R^N sharing one
contraction ratio. The boundary V_0 is the set of essential fixed points,
E_0 the complete edge set on V_0 with Euclidean lengths. Level-n vertex
graphs are built in :mod:`nestedfractal.graphs`.
"""

import hashlib
import json

import numpy as np

from .errors import InvalidFractal, ParseError

ORTHO_TOL = 1e-12


class Similitude:
    """Contraction x -> ratio * rotation @ x + translation.

    rotation must be orthogonal (isometry part), 0 < ratio < 1.
    """

    __slots__ = ("ratio", "rotation", "translation", "dim")

    def __init__(self, ratio, rotation, translation):
        rotation = np.array(rotation, dtype=float)
        translation = np.array(translation, dtype=float)
        if rotation.ndim != 2 or rotation.shape[0] != rotation.shape[1]:
            raise InvalidFractal("rotation must be a square matrix")
        if translation.shape != (rotation.shape[0],):
            raise InvalidFractal("translation length must match rotation size")
        err = np.abs(rotation.T @ rotation - np.eye(rotation.shape[0])).max()
        if err > ORTHO_TOL:
            raise InvalidFractal(f"rotation is not orthogonal (defect {err:.2e})")
        if not 0.0 < ratio < 1.0:
            raise InvalidFractal(f"ratio must lie in (0,1), got {ratio}")
        self.ratio = float(ratio)
        self.rotation = rotation
        self.translation = translation
        self.dim = rotation.shape[0]

    @property
    def matrix(self):
        """Linear part ratio * rotation."""
        return self.ratio * self.rotation

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return points @ self.matrix.T + self.translation

    def fixed_point(self):
        """Unique fixed point, by direct solve of (I - ratio*Q) p = t."""
        a = np.eye(self.dim) - self.matrix
        return np.linalg.solve(a, self.translation)

    def __repr__(self):
        return f"Similitude(ratio={self.ratio}, dim={self.dim})"


def fixed_point(sim):
    """Fixed point of a similitude (module-level convenience)."""
    return sim.fixed_point()


def essential_fixed_points(maps, tol=None):
    """Indices of the essential fixed points among the maps' fixed points.

    p_i is essential when some image w_j(p_i) coincides (within tol) with
    an image w_j'(p_i') of a different fixed point. Brute force over all
    (i, i', j, j') quadruples; k is small so this is cheap.
    """
    k = len(maps)
    pts = np.array([m.fixed_point() for m in maps])
    if tol is None:
        diam = _diameter(pts)
        tol = 1e-9 * diam if diam > 0 else 1e-9
    # images[j, i] = w_j(p_i)
    images = np.stack([m(pts) for m in maps])  # (k, k, N)
    essential = np.zeros(k, dtype=bool)
    for i in range(k):
        for ip in range(k):
            if ip == i:
                continue
            d = images[:, i, None, :] - images[None, :, ip, :]  # (j, j', N)
            if np.sqrt((d * d).sum(axis=-1)).min() <= tol:
                essential[i] = True
                break
    return [i for i in range(k) if essential[i]]


def _diameter(points):
    d = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((d * d).sum(axis=-1)).max())


class NestedFractal:
    """An equal-ratio IFS together with its boundary graph (V_0, E_0).

    Construction computes fixed points, selects the essential ones as V_0
    (unless v0 is given explicitly, a hook used for diagnostics on
    degenerate map families), forms the complete edge set E_0 with
    Euclidean lengths, and validates the common-ratio and level-1
    connectivity conditions.
    """

    def __init__(self, maps, v0=None, dedup_tol=None, name=None, validate=True):
        if len(maps) < 2:
            raise InvalidFractal("need at least two maps")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise InvalidFractal("maps act on different ambient dimensions")
        ratios = [m.ratio for m in maps]
        if max(ratios) - min(ratios) > 1e-15:
            raise InvalidFractal(
                "maps must share a single contraction ratio "
                f"(got {sorted(set(ratios))})",
                condition=1,
            )
        self.maps = list(maps)
        self.k = len(maps)
        self.ratio = ratios[0]
        self.ambient_dim = maps[0].dim
        self.name = name
        self.fixed_points = np.array([m.fixed_point() for m in maps])

        if v0 is None:
            idx = essential_fixed_points(maps)
            if len(idx) < 2:
                raise InvalidFractal(
                    f"only {len(idx)} essential fixed point(s); at least two required"
                )
            self.v0 = self.fixed_points[idx]
            self.v0_map_index = list(idx)
        else:
            self.v0 = np.array(v0, dtype=float)
            self.v0_map_index = None
            if self.v0.ndim != 2 or self.v0.shape[1] != self.ambient_dim:
                raise InvalidFractal("explicit v0 must be a list of N-vectors")
            if len(self.v0) < 2:
                raise InvalidFractal("v0 must contain at least two points")

        m0 = len(self.v0)
        self.e0_pairs = np.array(
            [(i, j) for i in range(m0) for j in range(i + 1, m0)], dtype=np.int64
        )
        diff = self.v0[self.e0_pairs[:, 0]] - self.v0[self.e0_pairs[:, 1]]
        self.e0_lengths = np.sqrt((diff * diff).sum(axis=1))
        if (self.e0_lengths <= 0).any():
            raise InvalidFractal("coinciding points in v0 give zero-length edges")

        self.diameter = _diameter(self.v0)
        self.dedup_tol = (
            float(dedup_tol) if dedup_tol is not None else 1e-9 * self.diameter
        )
        self._graphs = {}

        if validate and self.v0_map_index is not None:
            # each boundary point must be the fixed point of exactly one map
            for a, i in enumerate(self.v0_map_index):
                owners = [
                    j
                    for j in range(self.k)
                    if np.linalg.norm(self.fixed_points[j] - self.v0[a])
                    <= self.dedup_tol
                ]
                if owners != [i]:
                    raise InvalidFractal(
                        f"boundary point {a} is fixed by maps {owners}, expected one"
                    )
        if validate:
            g1 = self.graph(1)
            del g1  # graph() raises InvalidFractal(condition=3) when disconnected

    # -- derived counts ---------------------------------------------------

    @property
    def n_edges(self):
        """Unordered E_0 edge count."""
        return len(self.e0_pairs)

    @property
    def n_oriented_edges(self):
        return 2 * len(self.e0_pairs)

    def edge_index(self, i, j):
        """Index into e0_pairs of the unordered edge {i, j} of V_0."""
        if i == j:
            raise ValueError("no loops in E_0")
        a, b = (i, j) if i < j else (j, i)
        m0 = len(self.v0)
        # pairs are enumerated row-major over i < j
        return a * (2 * m0 - a - 1) // 2 + (b - a - 1)

    # -- words and cells ---------------------------------------------------

    def check_word(self, word):
        word = tuple(int(x) for x in word)
        for letter in word:
            if not 1 <= letter <= self.k:
                raise ValueError(f"word letter {letter} outside 1..{self.k}")
        return word

    def apply_word(self, word, point):
        """Apply the composition w_word(1) o ... o w_word(n) to a point."""
        word = self.check_word(word)
        p = np.asarray(point, dtype=float)
        for letter in reversed(word):
            p = self.maps[letter - 1](p)
        return p

    def graph(self, n, budget=None):
        """Level-n vertex graph (cached). See graphs.build_graph."""
        key = n
        if key not in self._graphs:
            from . import graphs

            self._graphs[key] = graphs.build_graph(self, n, budget=budget)
        return self._graphs[key]

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        d = {
            "ambient_dim": self.ambient_dim,
            "ratio": self.ratio,
            "maps": [
                {
                    "rotation": m.rotation.tolist(),
                    "translation": m.translation.tolist(),
                }
                for m in self.maps
            ],
        }
        d["dedup_tol"] = self.dedup_tol
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def fingerprint(self):
        """Hash of the map data, canonicalized by rounding at 1e-15."""
        h = hashlib.sha256()
        for m in self.maps:
            for v in [np.array([m.ratio]), m.rotation.ravel(), m.translation]:
                h.update(np.round(np.asarray(v) * 1e15).astype(np.int64).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        label = self.name or "custom"
        return (
            f"NestedFractal({label}: k={self.k}, ratio={self.ratio}, "
            f"|V0|={len(self.v0)}, N={self.ambient_dim})"
        )


def fractal_from_dict(data, name=None):
    """Build a fractal from the JSON definition layout.

    Layout: {"ambient_dim": N, "ratio": r,
             "maps": [{"rotation": [[..]], "translation": [..]}, ...],
             "dedup_tol": optional}
    """
    try:
        n = int(data["ambient_dim"])
        ratio = float(data["ratio"])
        maps = [
            Similitude(ratio, spec["rotation"], spec["translation"])
            for spec in data["maps"]
        ]
    except InvalidFractal:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad fractal definition: {exc}") from exc
    for m in maps:
        if m.dim != n:
            raise ParseError("map dimension disagrees with ambient_dim")
    return NestedFractal(maps, dedup_tol=data.get("dedup_tol"), name=name)


def fractal_from_json(text, name=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return fractal_from_dict(data, name=name)
