"""Superfast sketching, CUR and HSS approximation of matrices."""
from . import access, cur, errors, hss, leverage, linalg, lra, lsr, multipliers, testgen  # noqa: F401
from .errors import (EmptySample, GeneratorRankFailure, PremultRankFailure, RangeFailure,  # noqa: F401
                     SelectionFailure, SketchRankFailure)

__version__ = "0.1.0"
