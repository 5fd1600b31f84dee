"""Finite-size central charge of perturbed two-dimensional Ising models on tori and strips."""
from __future__ import annotations

from .errors import CancellationError, ConsistencyError, ConvergenceError, NumericalFailure, SingularPivotError
from .lattice import InteractionSpec, TorusLattice
from .lognum import LogNumber

__version__ = "0.1.0"

__all__ = [
    "CancellationError", "ConsistencyError", "ConvergenceError", "InteractionSpec", "LogNumber",
    "NumericalFailure", "SingularPivotError", "TorusLattice",
]
