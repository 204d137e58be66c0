"""Continued fractions, planar lattice minima and certified Diophantine exponents."""

from .cf import CFNumber, parse_rule
from .errors import BudgetExceeded, DiophantError, DomainError, FormulaInapplicable, TieError
from .exact import RatInterval

__version__ = "0.1.0"

__all__ = [
    "CFNumber",
    "parse_rule",
    "RatInterval",
    "DiophantError",
    "BudgetExceeded",
    "DomainError",
    "TieError",
    "FormulaInapplicable",
]
