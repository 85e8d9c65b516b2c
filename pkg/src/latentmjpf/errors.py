"""Exception types shared across the package.

Bad caller input raises plain ValueError everywhere; the classes below mark
failures of the numerics themselves.
"""


class NumericError(ArithmeticError):
    """A computation left its numeric domain (non-PSD matrix, overflow, ...)."""


class TrainingError(RuntimeError):
    """Gradient training diverged; the message names the failing epoch."""
