"""
Exception hierarchy shared by the analysis modules and the CLI
"""

from typing import Any, Dict, Optional


class LcExtensionError(Exception):
    """Base class for all errors raised by lcextension"""

    exit_code = 1


class PreconditionError(LcExtensionError, ValueError):
    """An input violates the precondition of an operation"""

    exit_code = 2


class DomainError(PreconditionError):
    """A weight function was evaluated outside its domain"""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class QuadratureError(LcExtensionError):
    """
    Quadrature did not converge within the node budget

    Attributes:
        previous: Value at the second-to-last refinement
        last: Value at the last refinement
    """

    exit_code = 3

    def __init__(self, message: str, previous: float, last: float):
        super().__init__(f"{message} (previous={previous!r}, last={last!r})")
        self.previous = previous
        self.last = last


class InconclusiveError(LcExtensionError):
    """The lc-measure classification is neither convergent nor cleanly divergent"""

    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InequalityViolation(LcExtensionError):
    """A checked inequality failed; ``witness`` locates the failure"""

    exit_code = 4

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness
