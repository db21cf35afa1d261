"""Exception hierarchy shared across the package.

Two top-level families: :class:`InvalidInputError` for violated
preconditions (bad shapes, bad parameter values, mismatched grids) and
:class:`NumericalError` for failures arising during computation
(non-convergence, degenerate data, ill-conditioned systems).  The CLI maps
the first family to exit code 1 and the second to exit code 3.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical procedure failed on otherwise well-formed input."""


class NotPSDError(NumericalError):
    """A matrix required to be positive semidefinite is not."""


class DegenerateColumnError(NumericalError):
    """A data column has zero variance where variation is required."""


class DegenerateComponentError(NumericalError):
    """Component extraction exhausted the data before the requested count."""


class IllConditionedError(NumericalError):
    """A linear system in the back-projection is numerically singular."""


class NoFeasibleModelError(NumericalError):
    """Every cell of a model-selection grid failed to fit."""


class UndefinedMetricError(InvalidInputError):
    """A metric is undefined for the given inputs (e.g. zero reference norm)."""
