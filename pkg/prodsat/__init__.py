"""
prodsat - QSAT product-state toolkit

Weighted SDR analysis, multi-homogeneous Bézout numbers, qudit-to-qubit
reductions, polynomial embeddings and product-state solvers.
"""

__version__ = "0.1.0"

from .exceptions import ProdsatError
from .hypergraph import HallViolation, WeightedHypergraph, Wsdr, find_wsdr
from .models import Constraint, ProductState, QsatInstance, energy
from .solver import SolveReport, solve_instance, verify

__all__ = [
    "ProdsatError",
    "HallViolation",
    "WeightedHypergraph",
    "Wsdr",
    "find_wsdr",
    "Constraint",
    "ProductState",
    "QsatInstance",
    "energy",
    "SolveReport",
    "solve_instance",
    "verify",
]
