"""Large all-zero and constant submatrices, disjointness-graph extraction, and their oracles."""

from .errors import (BadInput, BudgetExceeded, Exhausted, NumericalFailure, PreconditionFailed,
                     VerificationFailure, ZeroRectError)
from .famcore import BitSet, DisjointnessGraph, Distribution, SetFamily
from .matcore import DenseMatrix, SubmatrixSelection

__version__ = "0.1.0"

__all__ = [
    "BadInput", "BitSet", "BudgetExceeded", "DenseMatrix", "DisjointnessGraph", "Distribution",
    "Exhausted", "NumericalFailure", "PreconditionFailed", "SetFamily", "SubmatrixSelection",
    "VerificationFailure", "ZeroRectError",
]
