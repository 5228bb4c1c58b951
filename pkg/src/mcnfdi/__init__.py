"""Link-failure detection for SISO plants closed over scheduled multi-hop
wireless relay graphs."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    EnumerationBudgetError,
    InconsistencyError,
    MCNError,
    ModelError,
    NumericalError,
)
