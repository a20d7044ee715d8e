"""Zeta function of the edge-length system, dimension data, and the
integral recovering the normalized self-similar volume measure.

All edge sums run over oriented edges (two per unordered E_0 pair): each
level-n cell contributes one inverse-length eigenvalue per oriented edge,
so the closed form of the zeta function is

    Z(s) = sum_e l(e)^s / (1 - k * ratio^s),

with a simple pole at d = log k / log(1/ratio) and, more generally, at
d * (1 + 2*pi*i*n / log k).
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentSeries, PoleProximity
from .functions import values_on

POLE_TOL = 1e-12


def metric_dimension(fractal):
    """Similarity dimension log k / log(1/ratio)."""
    return math.log(fractal.k) / math.log(1.0 / fractal.ratio)


def _oriented_length_power(fractal, s):
    """sum over oriented E_0 edges of l(e)^s (s may be complex)."""
    lengths = fractal.e0_lengths
    if isinstance(s, complex):
        return 2.0 * sum(cmath.exp(s * math.log(l)) for l in lengths)
    return 2.0 * float(np.sum(lengths**s))


def zeta(fractal, s):
    """Meromorphic closed form of the zeta function at complex s."""
    s = complex(s)
    denom = 1.0 - fractal.k * cmath.exp(s * math.log(fractal.ratio))
    if abs(denom) < POLE_TOL:
        raise PoleProximity(
            f"s={s} is within {POLE_TOL} of a pole; use the residue instead"
        )
    return _oriented_length_power(fractal, s) / denom


def zeta_truncated(fractal, s, n_terms):
    """Partial sum over levels 0..n_terms with a geometric tail bound.

    Valid only right of the abscissa of convergence (Re s > d). Returns
    (value, tail_bound); the closed form lies within tail_bound of value.
    """
    s = complex(s)
    d = metric_dimension(fractal)
    if s.real <= d:
        raise DivergentSeries(f"series diverges for Re s = {s.real} <= d = {d}")
    base = _oriented_length_power(fractal, s)
    q = fractal.k * cmath.exp(s * math.log(fractal.ratio))
    total = base * sum(q**n for n in range(n_terms + 1))
    q_abs = fractal.k * fractal.ratio**s.real
    tail = abs(base) * q_abs ** (n_terms + 1) / (1.0 - q_abs)
    return total, tail


@dataclass
class DimensionSpectrum:
    """Poles of the zeta extension on the line Re s = d, with residues."""

    d: float
    orders: np.ndarray  # integer index n of each pole
    poles: np.ndarray  # d * (1 + 2*pi*i*n / log k)
    residues: np.ndarray


def dimension_spectrum(fractal, n_range):
    """Poles d*(1 + 2*pi*i*n/log k) for n in n_range and their residues.

    The residue at each pole is sum_e l(e)^s / log(1/ratio) evaluated
    there (the denominator 1 - k*ratio^s has derivative log(1/ratio) at
    any of its zeros).
    """
    d = metric_dimension(fractal)
    orders = np.array(sorted(int(n) for n in n_range))
    poles = np.array(
        [d * (1.0 + 2.0j * math.pi * n / math.log(fractal.k)) for n in orders]
    )
    log_inv = math.log(1.0 / fractal.ratio)
    residues = np.array(
        [_oriented_length_power(fractal, complex(p)) / log_inv for p in poles]
    )
    return DimensionSpectrum(d=d, orders=orders, poles=poles, residues=residues)


def cell_measure(fractal, word):
    """Normalized self-similar measure k^(-|word|) of the cell of a word."""
    word = fractal.check_word(word)
    return float(fractal.k) ** (-len(word))


def volume_constant(fractal):
    """The integral of 1: sum over oriented edges of l(e)^d, over log k."""
    d = metric_dimension(fractal)
    return _oriented_length_power(fractal, d) / math.log(fractal.k)


def nc_integral_cell(fractal, word):
    """Integral of the indicator of a cell: volume constant times measure."""
    return volume_constant(fractal) * cell_measure(fractal, word)


def nc_integral(fractal, f, n, budget=None):
    """Integral of f by cell-anchor quadrature at level n.

    Each cell contributes f at its anchor (the image of the first V_0
    point) times the cell's integral; the error bound is the volume
    constant times the largest value spread over any cell's vertices.
    Returns (value, error_bound).
    """
    graph = fractal.graph(n, budget=budget)
    vals = values_on(f, fractal, graph)
    const = volume_constant(fractal)
    anchors = vals[graph.cell_vids[:, 0]]
    value = const * float(fractal.k) ** (-n) * float(anchors.sum())
    cellvals = vals[graph.cell_vids]
    osc = float((cellvals.max(axis=1) - cellvals.min(axis=1)).max())
    return value, const * osc
