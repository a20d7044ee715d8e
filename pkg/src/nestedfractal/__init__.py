"""Spectral data of nested self-similar fractals.

A small numpy/scipy library recovering the structural data of an
equal-ratio self-similar fractal from its edge-length system: similarity
dimension and normalized volume measure (via a zeta function and its
residues), the self-similar Dirichlet energy (via trace-map
renormalization and via a residue at the energy dimension), and the
geodesic distance (via shortest paths on the approximation graphs).
"""

from .errors import (
    BudgetExceeded,
    DegenerateRhombus,
    DivergentSeries,
    FractalError,
    IncompleteFunction,
    InvalidConductance,
    InvalidFractal,
    InvalidProjection,
    NonConvergence,
    NotAnEigenform,
    NotAVertex,
    ParseError,
    PoleProximity,
    SingularNetwork,
    Unreachable,
)
from .ifs import (
    NestedFractal,
    Similitude,
    essential_fixed_points,
    fixed_point,
    fractal_from_dict,
    fractal_from_json,
)
from .graphs import GraphApprox, build_graph, check_nesting, required_budget
from .presets import gasket, gasket3, load_preset, rhombic_vicsek, vicsek
from .functions import (
    CellIndicator,
    ConstantFunction,
    CoordinateFunction,
    FormulaFunction,
    TableFunction,
    VertexFunction,
)
from .spectral import (
    DimensionSpectrum,
    cell_measure,
    dimension_spectrum,
    metric_dimension,
    nc_integral,
    nc_integral_cell,
    volume_constant,
    zeta,
    zeta_truncated,
)
from .energy import (
    EigenformResult,
    EnergyLimit,
    EnergyResidue,
    HarmonicFunction,
    PiecewiseHarmonicFunction,
    QuadraticForm,
    eigenform,
    energy_dimension,
    energy_limit,
    energy_residue,
    form_from_conductances,
    form_eval,
    harmonic_extension,
    length_weighted_form,
    level_energy,
    trace_map,
    unit_form,
    vicsek_H_from_angle,
    vicsek_conductances_from_lengths,
    vicsek_family_coordinates,
    vicsek_form,
)
from .metric import (
    DistanceSequence,
    EssLipTable,
    GraphPath,
    distance_multilevel,
    distance_sequence,
    edge_subdivision_check,
    ess_lip_seminorm,
    graph_distances,
    lip_seminorm,
    project_path,
    shortest_path_distance,
)

__version__ = "0.1.0"
