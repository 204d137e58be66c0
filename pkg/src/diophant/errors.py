"""Exception types shared across the package."""


class DiophantError(Exception):
    pass


class BudgetExceeded(DiophantError):
    """A size cap (digits, preimages, refinement) would be exceeded.

    ``attempted`` carries the size that was asked for so callers can report it.
    """

    def __init__(self, what, attempted, limit):
        self.what = what
        self.attempted = attempted
        self.limit = limit
        super().__init__(f"{what} budget exceeded: attempted {attempted}, limit {limit}")


class DomainError(DiophantError, ValueError):
    pass


class TieError(DiophantError):
    """Two quantities could not be separated after maximal refinement."""

    def __init__(self, message, items=()):
        self.items = tuple(items)
        super().__init__(message)


class FormulaInapplicable(DiophantError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
