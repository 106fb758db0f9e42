"""Exception types shared across the package."""


class PriceRangeError(ValueError):
    """A price fell outside the admissible range for its market."""


class ConvergenceError(ArithmeticError):
    """An iterative solver exhausted its iteration budget."""


class AgentDivergedError(RuntimeError):
    """A learner produced a non-finite loss; carries the offending step."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class WindowError(ValueError):
    """A trace was too short for the fixed-size analysis window."""
