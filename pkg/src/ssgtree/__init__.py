"""Computational engine for self-similar groups acting on rooted trees."""

from .budgets import Budgets, DEFAULT
from .core import (Automaton, Element, apply, invert, level_perm, multiply,
                   section)
from .errors import (BudgetExceeded, CacheError, LetterOutOfRange,
                     MismatchedAutomata, ParseError, SsgError)

__version__ = "0.1.0"

__all__ = [
    "Automaton", "Element", "Budgets", "DEFAULT",
    "multiply", "invert", "apply", "section", "level_perm",
    "SsgError", "BudgetExceeded", "MismatchedAutomata", "LetterOutOfRange",
    "ParseError", "CacheError",
]
