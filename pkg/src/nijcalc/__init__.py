"""nijcalc: exact and numeric verification toolkit for Nijenhuis operator
fields, their spectral invariants, canonical forms, and compatible structures.
"""

from .scalarfield import Fraction, Jet, JetRule, Poly, RatFn, parse_poly, parse_univariate

__all__ = [
    "Fraction",
    "Jet",
    "JetRule",
    "Poly",
    "RatFn",
    "parse_poly",
    "parse_univariate",
]

__version__ = "0.1.0"
