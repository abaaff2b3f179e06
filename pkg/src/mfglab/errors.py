"""Exception taxonomy shared across the solvers and the CLI."""


class MfgLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MfgLabError):
    """Invalid problem setup: bad dimension, grid size, exponents, config file."""


class NumericsError(MfgLabError):
    """NaN/Inf detected inside a solver."""


class SolverDivergedError(MfgLabError):
    """Iteration hit its cap without meeting the tolerance."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class UnderResolvedError(MfgLabError):
    """Blow-up scale fell below what the grid can represent."""


class DegenerateDriftError(MfgLabError):
    """Invariant-measure kernel is not one-dimensional."""


class SchemeError(MfgLabError):
    """A structural property of the discretization was violated."""


class DegeneratePairError(MfgLabError):
    """Density-flux pair cannot enter the ratio (zero or infinite ingredient)."""


class FormatError(MfgLabError):
    """Solution container header does not match expectations."""


class DomainMisuseError(MfgLabError):
    """An operation was applied outside its stated domain of validity."""


class FitError(MfgLabError):
    """Not enough (or unusable) data points for an asymptotic fit."""


class UnsupportedError(MfgLabError):
    """Requested a feature outside the supported parameter range."""
