"""Quadratic forms on the boundary, renormalization, self-similar energy.

A quadratic form assigns a positive conductance to every unordered E_0
edge; its energy of boundary values f is sum_e c_e (f(e+) - f(e-))^2
(each unordered edge counted once; sums over ordered pairs in the
literature are twice these numbers).

The one-step renormalization (trace map) minimizes the level-1 energy
over interior values, realized as the Schur complement of the weighted
graph Laplacian onto the boundary block. Its normalized fixed points are
the eigenforms; the normalization factor is the energy scaling rho.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    FractalError,
    InvalidConductance,
    DegenerateRhombus,
    NonConvergence,
    NotAnEigenform,
    SingularNetwork,
)
from .functions import values_on
from .numerics import neville_to_zero

EIGENFORM_RESIDUAL_TOL = 1e-10


@dataclass
class QuadraticForm:
    """Positive conductances on the unordered E_0 edges (pairs of V_0 ids)."""

    pairs: np.ndarray  # (m, 2) vertex index pairs, i < j
    conductances: np.ndarray  # (m,)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64)
        self.conductances = np.asarray(self.conductances, dtype=float)
        if self.conductances.shape != (len(self.pairs),):
            raise InvalidConductance("one conductance per edge required")
        if not (self.conductances > 0).all():
            raise InvalidConductance("conductances must be strictly positive")

    def energy(self, boundary_values):
        """Energy of values given on V_0 (unordered-edge convention)."""
        v = np.asarray(boundary_values, dtype=float)
        d = v[self.pairs[:, 0]] - v[self.pairs[:, 1]]
        return float(np.dot(self.conductances, d * d))

    def scaled(self, factor):
        return QuadraticForm(self.pairs, factor * self.conductances)

    @property
    def max_conductance(self):
        return float(self.conductances.max())


def unit_form(fractal):
    return QuadraticForm(fractal.e0_pairs, np.ones(fractal.n_edges))


def form_from_conductances(fractal, conductances):
    return QuadraticForm(fractal.e0_pairs, np.asarray(conductances, dtype=float))


def length_weighted_form(fractal, exponent):
    """Conductances l(e)^exponent on E_0; exponent delta-2 gives the form
    whose renormalized limit the residue evaluator reproduces."""
    return QuadraticForm(fractal.e0_pairs, fractal.e0_lengths**exponent)


def form_eval(form, boundary_values):
    return form.energy(boundary_values)


# -- level sums ------------------------------------------------------------


def _cell_differences(form, vals, graph):
    """Per-cell, per-edge value jumps; shape (cells, edges)."""
    cv = vals[graph.cell_vids]
    return cv[:, form.pairs[:, 0]] - cv[:, form.pairs[:, 1]]


def level_energy(fractal, form, f, n, budget=None):
    """Sum of the form over all k^n level-n cells of the values of f."""
    graph = fractal.graph(n, budget=budget)
    vals = values_on(f, fractal, graph)
    d = _cell_differences(form, vals, graph)
    return float(((d * d) @ form.conductances).sum())


def _per_edge_square_sums(form, vals, graph):
    """sum over cells of jump^2, separately per E_0 edge; shape (m,)."""
    d = _cell_differences(form, vals, graph)
    return (d * d).sum(axis=0)


# -- trace map and eigenforms ------------------------------------------------


def _level1_blocks(fractal, form):
    """Level-1 Laplacian split into boundary (V_0-ordered) and interior."""
    g1 = fractal.graph(1)
    n = g1.n_vertices
    lap = np.zeros((n, n))
    u = g1.cell_vids[:, form.pairs[:, 0]].ravel()
    v = g1.cell_vids[:, form.pairs[:, 1]].ravel()
    c = np.tile(form.conductances, g1.n_cells)
    np.add.at(lap, (u, v), -c)
    np.add.at(lap, (v, u), -c)
    np.add.at(lap, (u, u), c)
    np.add.at(lap, (v, v), c)
    bids = g1.find_vertices(fractal.v0)
    if (bids < 0).any():
        raise FractalError("boundary points missing from the level-1 graph")
    iids = np.setdiff1d(np.arange(n), bids)
    return g1, lap, bids, iids


def trace_map(fractal, form):
    """One-step minimal extension of the form, as a form on E_0 again.

    Schur complement of the level-1 Laplacian onto the boundary block;
    equals the infimum of the level-1 sum over all interior extensions.
    """
    g1, lap, bids, iids = _level1_blocks(fractal, form)
    if len(iids) == 0:
        raise SingularNetwork("level-1 graph has no interior vertices")
    l_bb = lap[np.ix_(bids, bids)]
    l_bi = lap[np.ix_(bids, iids)]
    l_ii = lap[np.ix_(iids, iids)]
    try:
        cho = linalg.cho_factor(l_ii)
        x = linalg.cho_solve(cho, l_bi.T)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularNetwork(f"interior block not positive definite: {exc}") from exc
    schur = l_bb - l_bi @ x
    c_new = -schur[form.pairs[:, 0], form.pairs[:, 1]]
    return QuadraticForm(form.pairs, c_new)


@dataclass
class EigenformResult:
    """Normalized eigenform (max conductance 1), its eigenvalue, and the
    fixed-point residual of the final iterate."""

    form: QuadraticForm
    rho: float
    iterations: int
    residual: float


def eigenform(fractal, init=None, tol=1e-12, max_iter=10_000):
    """Iterate normalized trace maps to a fixed form.

    Each step divides by the maximum conductance; that maximum is the
    eigenvalue estimate. Fixed points need not be unique (the Vicsek
    square has a one-parameter family); the iteration settles on one of
    them and all share the same rho.
    """
    form = unit_form(fractal) if init is None else init
    form = form.scaled(1.0 / form.max_conductance)
    rho = math.nan
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mapped = trace_map(fractal, form)
        rho = mapped.max_conductance
        nxt = mapped.scaled(1.0 / rho)
        delta = np.abs(nxt.conductances - form.conductances).max()
        form = nxt
        if delta < tol:
            converged = True
            break
    residual = float(
        np.abs(trace_map(fractal, form).conductances - rho * form.conductances).max()
    )
    result = EigenformResult(
        form=form, rho=float(rho), iterations=iterations, residual=residual
    )
    if not converged:
        raise NonConvergence(
            f"eigenform iteration did not settle within {max_iter} steps", last=result
        )
    if not 0.0 < rho < 1.0:
        raise FractalError(f"eigenvalue {rho} outside (0,1); inconsistent network")
    return result


def _as_eigenform(fractal, form_or_result, tol=EIGENFORM_RESIDUAL_TOL):
    """Return (form, rho), raising NotAnEigenform beyond the residual tol."""
    if isinstance(form_or_result, EigenformResult):
        if form_or_result.residual > tol:
            raise NotAnEigenform(
                f"residual {form_or_result.residual:.2e} exceeds {tol:.0e}"
            )
        return form_or_result.form, form_or_result.rho
    form = form_or_result
    mapped = trace_map(fractal, form)
    rho = mapped.max_conductance / form.max_conductance
    residual = (
        np.abs(mapped.conductances - rho * form.conductances).max()
        / form.max_conductance
    )
    if residual > tol:
        raise NotAnEigenform(f"residual {residual:.2e} exceeds {tol:.0e}")
    return form, float(rho)


# -- harmonic extension -------------------------------------------------------


def extension_matrix(fractal, form):
    """Interior-from-boundary matrix of the level-1 harmonic problem.

    Rows follow the interior ids of the level-1 graph, columns the V_0
    order; also returns the graph and both id sets.
    """
    g1, lap, bids, iids = _level1_blocks(fractal, form)
    if len(iids) == 0:
        raise SingularNetwork("level-1 graph has no interior vertices")
    cho = linalg.cho_factor(lap[np.ix_(iids, iids)])
    m = -linalg.cho_solve(cho, lap[np.ix_(iids, bids)])
    return g1, bids, iids, m


def _child_matrices(fractal, form):
    """Matrices T_i mapping cell boundary values to child-cell boundary
    values, so one harmonic step can be applied cell by cell."""
    g1, bids, iids, m = extension_matrix(fractal, form)
    full = np.zeros((g1.n_vertices, len(bids)))
    full[bids] = np.eye(len(bids))
    full[iids] = m
    return np.stack([full[g1.cell_vids[c]] for c in range(fractal.k)])


def _harmonic_cell_values(fractal, child, boundary, n):
    """Boundary values of every level-n cell of the harmonic extension."""
    b = np.asarray(boundary, dtype=float)[None, :]
    for _ in range(n):
        b = np.einsum("kab,sb->ska", child, b).reshape(-1, b.shape[1])
    return b


def harmonic_extension(fractal, form_or_result, boundary, n, budget=None):
    """Energy-minimizing extension of boundary values down to level n.

    The supplied form must be an eigenform (fixed-point residual at most
    1e-10); the one-step extension matrix is then applied recursively
    cell by cell. Returns the value array over fractal.graph(n).
    """
    form, _ = _as_eigenform(fractal, form_or_result)
    boundary = np.asarray(boundary, dtype=float)
    if boundary.shape != (len(fractal.v0),):
        raise ValueError(f"need {len(fractal.v0)} boundary values")
    child = _child_matrices(fractal, form)
    cells = _harmonic_cell_values(fractal, child, boundary, n)
    graph = fractal.graph(n, budget=budget)
    out = np.empty(graph.n_vertices)
    out[graph.cell_vids.ravel()] = cells.ravel()
    return out


class HarmonicFunction:
    """Provider serving the harmonic extension of fixed boundary data at
    whatever level is requested."""

    def __init__(self, fractal, form_or_result, boundary):
        self.form, self.rho = _as_eigenform(fractal, form_or_result)
        self.boundary = np.asarray(boundary, dtype=float)
        self._child = _child_matrices(fractal, self.form)

    def values_on(self, fractal, graph):
        cells = _harmonic_cell_values(
            fractal, self._child, self.boundary, graph.level
        )
        out = np.empty(graph.n_vertices)
        out[graph.cell_vids.ravel()] = cells.ravel()
        return out


class PiecewiseHarmonicFunction:
    """Harmonic spline: arbitrary values on V_m, extended harmonically
    inside every level-m cell.

    Always finite-energy; the renormalized level sums are constant from
    level m on, which makes these the natural non-trivial test inputs for
    the energy limit.
    """

    def __init__(self, fractal, form_or_result, level, values):
        self.form, self.rho = _as_eigenform(fractal, form_or_result)
        self.level = int(level)
        self.values = np.asarray(values, dtype=float)
        base = fractal.graph(self.level)
        if self.values.shape != (base.n_vertices,):
            raise ValueError(
                f"need one value per level-{level} vertex "
                f"({base.n_vertices}), got {self.values.shape}"
            )
        self._start = self.values[base.cell_vids]
        self._child = _child_matrices(fractal, self.form)

    def values_on(self, fractal, graph):
        if graph.level < self.level:
            coarse = fractal.graph(self.level)
            ids = coarse.find_vertices(graph.vertices)
            return self.values[ids]
        b = self._start
        for _ in range(graph.level - self.level):
            b = np.einsum("kab,sb->ska", self._child, b).reshape(-1, b.shape[1])
        out = np.empty(graph.n_vertices)
        out[graph.cell_vids.ravel()] = b.ravel()
        return out


# -- self-similar energy -----------------------------------------------------


@dataclass
class EnergyLimit:
    """Renormalized level sums rho^-n S_n and the last value as estimate."""

    levels: np.ndarray
    values: np.ndarray
    estimate: float


def energy_limit(fractal, form, f, rho, n_max, budget=None):
    """Table of rho^-n * (level-n sum of the form) for n = 0..n_max."""
    levels = np.arange(n_max + 1)
    vals = np.array(
        [
            rho ** (-n) * level_energy(fractal, form, f, n, budget=budget)
            for n in levels
        ]
    )
    return EnergyLimit(levels=levels, values=vals, estimate=float(vals[-1]))


def energy_dimension(fractal, rho):
    """2 - log(rho)/log(ratio); non-positive values are flagged."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0,1), got {rho}")
    delta = 2.0 - math.log(rho) / math.log(fractal.ratio)
    if delta <= 0.0:
        warnings.warn(
            f"energy dimension {delta} is not positive (rho <= ratio^2)",
            stacklevel=2,
        )
    return delta


@dataclass
class EnergyResidue:
    """Result of the softened-exponent residue evaluation.

    a_table[n, j] holds the renormalized level-n sum at eps_schedule[j];
    f_values[j] the corresponding weighted series value; extrapolated the
    eps -> 0 limit (None when the level sums show no convergence).
    """

    eps: np.ndarray
    f_values: np.ndarray
    a_table: np.ndarray
    extrapolated: float | None
    tail_oscillation: float
    converged: bool


def energy_residue(fractal, form, f, rho, eps_schedule, n_max, budget=None):
    """Residue of the energy zeta function by the softened-exponent limit.

    For each eps the series over levels n of ratio^(n*eps) times the
    renormalized sum a(n, eps) is summed up to n_max, the tail frozen at
    a(n_max, eps) and summed analytically as a geometric series, and the
    whole multiplied by eps. The eps -> 0 limit is then Richardson
    extrapolated (the frozen form is analytic in eps). With `form` the
    length-weighted form at exponent delta-2 this reproduces the
    self-similar energy divided by log(1/ratio).
    """
    eps = np.asarray(list(eps_schedule), dtype=float)
    if len(eps) == 0 or (eps <= 0).any() or (np.diff(eps) >= 0).any():
        raise ValueError("eps_schedule must be positive and strictly decreasing")
    lam = fractal.ratio
    m = fractal.n_edges
    per_edge = np.empty((n_max + 1, m))
    for n in range(n_max + 1):
        graph = fractal.graph(n, budget=budget)
        vals = values_on(f, fractal, graph)
        per_edge[n] = _per_edge_square_sums(form, vals, graph)
    # a[n, j] = rho^-n sum_e c_e l_e^eps_j * per_edge[n, e]
    weights = form.conductances[:, None] * fractal.e0_lengths[:, None] ** eps[None, :]
    a = (rho ** -np.arange(n_max + 1.0))[:, None] * (per_edge @ weights)

    ns = np.arange(n_max + 1)
    f_values = np.empty(len(eps))
    for j, e in enumerate(eps):
        series = float(np.dot(lam ** (ns * e), a[:, j]))
        tail = a[n_max, j] * lam ** ((n_max + 1) * e) / (1.0 - lam**e)
        f_values[j] = e * (series + tail)

    scale = float(np.abs(a).max()) or 1.0
    inc = np.diff(a[:, -1])
    if len(inc) >= 2:
        converged = abs(inc[-1]) <= max(abs(inc[-2]) * (1 + 1e-9), 1e-12 * scale)
    else:
        converged = True
    tail_osc = float(np.abs(inc[-3:]).max()) if len(inc) else 0.0
    extrapolated = float(neville_to_zero(eps, f_values)) if converged else None
    return EnergyResidue(
        eps=eps,
        f_values=f_values,
        a_table=a,
        extrapolated=extrapolated,
        tail_oscillation=tail_osc,
        converged=converged,
    )


# -- the Vicsek conductance family --------------------------------------------


def vicsek_conductances_from_lengths(a, f, g):
    """Eigenform conductances (A,A,A,A,F,G) matching the boundary
    functional with weights (a,a,a,a,f,g) on sides and diagonals.

    Also returns the normalized diagonal ratio H = (a+g)/(a+f); F*G = A^2
    holds identically.
    """
    if min(a, f, g) <= 0:
        raise InvalidConductance("weights must be positive")
    s = 2.0 * a + f + g
    big_a = (a + f) * (a + g) / s
    big_f = (a + f) ** 2 / s
    big_g = (a + g) ** 2 / s
    h = (a + g) / (a + f)
    return big_a, big_f, big_g, h


def vicsek_H_from_angle(theta):
    """Diagonal conductance ratio of the family member produced by the
    rhombus with half-angle theta.

    Computed as (a+g)/(a+f) with side weight a = 1 and diagonal weights
    f = 1/(2 cos theta), g = 1/(2 sin theta); satisfies H(pi/4) = 1 and
    H(theta) * H(pi/2 - theta) = 1.
    """
    theta = float(theta)
    if not 0.0 < theta < math.pi / 2.0:
        raise DegenerateRhombus(f"half-angle {theta} outside (0, pi/2)")
    return (2.0 + 1.0 / math.sin(theta)) / (2.0 + 1.0 / math.cos(theta))


_VICSEK_SIDES = [(0, 1), (1, 2), (2, 3), (0, 3)]
_VICSEK_DIAGONALS = [(0, 2), (1, 3)]


def vicsek_form(fractal, h, scale=1.0):
    """Family form (1,1,1,1,H,1/H) on a 4-vertex cycle boundary: sides get
    `scale`, the (0,2) diagonal scale*H, the (1,3) diagonal scale/H."""
    if len(fractal.v0) != 4:
        raise ValueError("family forms need a 4-point boundary in cyclic order")
    c = np.empty(fractal.n_edges)
    for i, j in _VICSEK_SIDES:
        c[fractal.edge_index(i, j)] = scale
    c[fractal.edge_index(0, 2)] = scale * h
    c[fractal.edge_index(1, 3)] = scale / h
    return QuadraticForm(fractal.e0_pairs, c)


def vicsek_family_coordinates(fractal, form):
    """Express a form as (H, scale, deviation) against the family shape.

    deviation is the largest relative defect among: spread of the four
    side conductances, and the identity c_d1 * c_d2 = side^2.
    """
    if len(fractal.v0) != 4:
        raise ValueError("family coordinates need a 4-point boundary")
    c = form.conductances
    sides = np.array([c[fractal.edge_index(i, j)] for i, j in _VICSEK_SIDES])
    scale = float(sides.mean())
    d1 = float(c[fractal.edge_index(0, 2)])
    d2 = float(c[fractal.edge_index(1, 3)])
    h = d1 / scale
    dev_sides = float((sides.max() - sides.min()) / scale)
    dev_diag = abs(d1 * d2 - scale**2) / scale**2
    return h, scale, max(dev_sides, dev_diag)
