# fracgame/core/errors.py
from __future__ import annotations


class FracGameError(Exception):
    """Base for every error raised by fracgame."""


class DomainError(FracGameError, ValueError):
    """Argument outside the domain of an operation."""


class AlignmentError(DomainError):
    """A time argument that is not a grid node (or grids that do not line up)."""


class DivergenceError(FracGameError):
    """Overflow guard tripped or a kernel exponent makes an integral diverge."""


class AccuracyError(FracGameError):
    """A series or quadrature failed to reach its requested accuracy."""


class ConditioningError(FracGameError):
    """Least-squares design of the finite-difference tails is singular."""


class BudgetError(FracGameError):
    def __init__(self, required: int, budget: int, what: str = "tree"):
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(f"{what}: requires {self.required} leaves, budget is {self.budget}")


class ConfigError(FracGameError, ValueError):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        where = source or "config"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


# exit codes used by fracgame.app
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_NUMERIC = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(exc, (BudgetError, ConditioningError)):
        # refusals driven by scenario parameters
        return EXIT_CONFIG
    if isinstance(exc, (DomainError, AccuracyError)):
        # a numerical routine refused its arguments or missed its accuracy mid-run
        return EXIT_NUMERIC
    return EXIT_CHECK_FAILED
