"""Numerical laboratory for states satisfying Deutsch's D-CTC condition.

Quantum side: density-matrix fixed points of the Deutsch map
(:mod:`dctc.quantum`). Classical side: atomic probability measures
(:mod:`dctc.measures`), operations on them (:mod:`dctc.operations`), the
averaged product construction (:mod:`dctc.solver`) and the two-body example
(:mod:`dctc.dynamics`).
"""

__version__ = "0.1.0"

from . import dynamics, measures, operations, quantum, solver  # noqa: F401
from .errors import (  # noqa: F401
    DimensionError,
    ExcludedConfigurationError,
    NotConvergedWarning,
    ResourceLimitError,
)
