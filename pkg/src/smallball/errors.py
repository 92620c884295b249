"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError/RuntimeError so
callers (and the CLI exit-code mapping) can distinguish bad inputs from
violated numerical contracts.
"""


class SmallBallError(Exception):
    """Base error for this package."""


class ParameterError(SmallBallError, ValueError):
    """Invalid parameter values: out-of-range, inconsistent, non-divisible."""


class MomentError(ParameterError):
    """A required moment of the law is infinite or insufficient."""


class DataError(SmallBallError, ValueError):
    """Invalid data inputs: shape mismatch, missing targets, empty net."""


class DegenerateInputError(DataError):
    """Input collapses the quantity being computed (e.g. all-zero sample)."""


class RankDeficiencyError(DataError):
    """Fewer rows than columns: the quadratic-form infimum is trivially 0."""


class BracketError(SmallBallError):
    """Root/threshold bracketing failed: no solution inside the bracket."""


class ContractError(SmallBallError):
    """A monotonicity or shape contract assumed by a solver was violated."""


class ConvergenceError(SmallBallError, RuntimeError):
    """Iterative solver exhausted its budget; carries the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(SmallBallError, ValueError):
    """Experiment config failed schema validation; names the field path."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
