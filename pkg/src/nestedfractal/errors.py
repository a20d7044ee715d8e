"""Exception types shared across the package."""


class FractalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidFractal(FractalError):
    """The map data does not define a valid nested-type IFS.

    ``condition`` carries the number of the violated structural condition
    (1 = common contraction ratio, 3 = level-1 connectivity, 4 = nesting)
    when one applies, else None (e.g. fewer than two essential fixed points).
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ParseError(FractalError):
    """A fractal definition file or string could not be parsed."""


class BudgetExceeded(FractalError):
    """A requested construction would exceed the oriented-edge budget."""

    def __init__(self, message, required, budget):
        super().__init__(message)
        self.required = required
        self.budget = budget


class PoleProximity(FractalError):
    """Zeta evaluation requested too close to a pole of the extension."""


class DivergentSeries(FractalError):
    """Truncated series requested outside its abscissa of convergence."""


class IncompleteFunction(FractalError):
    """A vertex function is missing values on the required vertex set."""


class SingularNetwork(FractalError):
    """Interior block of a conductance network could not be inverted."""


class NotAnEigenform(FractalError):
    """A quadratic form expected to be an eigenform fails the residual check."""


class NonConvergence(FractalError):
    """Iteration hit the step limit; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class InvalidConductance(FractalError):
    """Conductance values must be strictly positive."""


class DegenerateRhombus(FractalError):
    """Rhombus half-angle at or beyond {0, pi/2} degenerates the fractal."""


class Unreachable(FractalError):
    """No path between the requested vertices (disconnected graph data)."""


class InvalidProjection(FractalError):
    """Path projection requested onto a level not containing the endpoints."""


class NotAVertex(FractalError):
    """The given point is not a vertex of any generated approximation level."""
