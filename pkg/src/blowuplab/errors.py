"""Shared exception types."""


class BlowupLabError(Exception):
    """Base class for package errors."""


class EvaluationDomainError(BlowupLabError, ValueError):
    """An expression was evaluated outside its mathematical domain."""


class RangeError(BlowupLabError, ValueError):
    """Argument outside the validity range of an operation."""


class DivergenceError(BlowupLabError, ArithmeticError):
    """A required integral or iteration does not converge."""


class ConvergenceError(BlowupLabError, ArithmeticError):
    """A numerical solve failed to meet its residual tolerance."""


class ConfigError(BlowupLabError, ValueError):
    """Experiment configuration is malformed."""
