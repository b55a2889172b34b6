# File: app/core/errors.py
"""
Exception hierarchy for the laboratory.

Solvers do not raise on non-convergence; they return the best state with
converged=False. Exceptions are reserved for invalid input and for numerical
situations that make a result meaningless (singular Gram matrix, failed
eigensolver, box too small).
"""

from typing import Optional


class NLSLabError(Exception):
    """Base class for all errors raised by the package."""


class GridError(NLSLabError, ValueError):
    """Invalid grid parameters or mismatched grids."""


class ParameterError(NLSLabError, ValueError):
    """Model parameters outside the admissible range (1 < p < 1 + 2/d, mass > 0)."""


class ConfigError(NLSLabError):
    """A config file failed validation."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = ""
        if field is not None:
            location += f"field '{field}'"
        if line is not None:
            location += f" (line {line})" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class ConvergenceError(NLSLabError):
    """An iteration that must converge did not (e.g. a root bracket search)."""


class EigenSolverError(NLSLabError):
    """The iterative eigensolver and its fallback both failed to converge."""


class SingularGramError(NLSLabError):
    """Gram matrix eigenvalue below the floor; the frame cannot be orthonormalised."""

    def __init__(self, min_eigenvalue: float, floor: float):
        self.min_eigenvalue = min_eigenvalue
        self.floor = floor
        super().__init__(
            f"Gram matrix is numerically singular: smallest eigenvalue {min_eigenvalue:.3e} < {floor:.1e}"
        )


class BoxTooSmallError(NLSLabError):
    """The periodic box cannot hold the requested configuration."""


class LedgerError(NLSLabError):
    """A value was refused by the binding ledger."""


class LedgerIncompleteError(LedgerError):
    """The ledger lacks masses required by a binding check."""

    def __init__(self, missing: list):
        self.missing = sorted(missing)
        super().__init__(f"ledger has no entries for masses {self.missing}")
