"""Vertex functions on approximation graphs and ways to supply them.

Several operations need values of a function on V_n for a range of n
(energy limits, residues, essential Lipschitz tables). A provider is any
object with values_on(fractal, graph) -> array over graph.vertices; a
bare callable acting on the (M, N) coordinate array also works.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IncompleteFunction


@dataclass
class VertexFunction:
    """Real values attached to the vertices of one approximation level."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def values_on(f, fractal, graph):
    """Resolve f into a complete value array over graph.vertices.

    Accepts a plain array (aligned with the graph's vertex ids), a
    VertexFunction of matching level, a provider object, or a callable
    on the coordinate array. Raises IncompleteFunction on missing data.
    """
    if hasattr(f, "values_on"):
        vals = np.asarray(f.values_on(fractal, graph), dtype=float)
    elif isinstance(f, VertexFunction):
        if f.level != graph.level:
            raise IncompleteFunction(
                f"function sampled at level {f.level}, graph is level {graph.level}"
            )
        vals = f.values
    elif callable(f):
        vals = np.asarray(f(graph.vertices), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    if vals.shape != (graph.n_vertices,):
        raise IncompleteFunction(
            f"expected {graph.n_vertices} values, got shape {vals.shape}"
        )
    if np.isnan(vals).any():
        raise IncompleteFunction("function has NaN entries")
    return vals


class ConstantFunction:
    def __init__(self, value):
        self.value = float(value)

    def values_on(self, fractal, graph):
        return np.full(graph.n_vertices, self.value)


class CoordinateFunction:
    """Ambient coordinate x_axis restricted to the vertices."""

    def __init__(self, axis=0):
        self.axis = int(axis)

    def values_on(self, fractal, graph):
        return graph.vertices[:, self.axis].copy()


class FormulaFunction:
    """Wraps a vectorized formula on the (M, N) coordinate array."""

    def __init__(self, fn):
        self.fn = fn

    def values_on(self, fractal, graph):
        return np.asarray(self.fn(graph.vertices), dtype=float)


class CellIndicator:
    """Indicator of the closed cell addressed by a word.

    A vertex gets value 1 when it belongs to some cell whose word extends
    the given one, so vertices on the cell boundary are inside.
    """

    def __init__(self, word):
        self.word = tuple(int(x) for x in word)

    def values_on(self, fractal, graph):
        depth = len(self.word)
        if graph.level < depth:
            raise IncompleteFunction(
                f"indicator of a level-{depth} cell needs sampling level >= {depth}"
            )
        out = np.zeros(graph.n_vertices)
        if depth == 0:
            out[:] = 1.0
            return out
        prefix = np.array(self.word, dtype=graph.cell_words.dtype)
        mask = (graph.cell_words[:, :depth] == prefix[None, :]).all(axis=1)
        out[np.unique(graph.cell_vids[mask])] = 1.0
        return out


class TableFunction:
    """Explicit values given on V_L; usable on any level n <= L.

    Coarser levels are served by restriction, using the vertex nesting
    V_n within V_L.
    """

    def __init__(self, level, values):
        self.level = int(level)
        self.values = np.asarray(values, dtype=float)

    def values_on(self, fractal, graph):
        if graph.level == self.level:
            if len(self.values) != graph.n_vertices:
                raise IncompleteFunction(
                    f"table has {len(self.values)} values, graph has "
                    f"{graph.n_vertices} vertices"
                )
            return self.values.copy()
        if graph.level > self.level:
            raise IncompleteFunction(
                f"table only covers levels <= {self.level}, asked for {graph.level}"
            )
        fine = fractal.graph(self.level)
        ids = fine.find_vertices(graph.vertices)
        if (ids < 0).any():
            raise IncompleteFunction("coarse vertex missing from the table's level")
        return self.values[ids]
