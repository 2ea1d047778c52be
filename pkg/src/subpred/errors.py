"""Exception types shared across the library."""


class RankDeficientError(ValueError):
    """A matrix fails a full-rank requirement under the shared rank rule."""


class HypothesisViolationError(ValueError):
    """A certified bound was requested outside its validity region."""


class ConvergenceError(RuntimeError):
    """An iterative or randomized procedure failed to produce a result."""
