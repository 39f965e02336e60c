#!/usr/bin/env python3
"""
Exception hierarchy for polyconc.

Every error carries a stable machine tag and an exit code. The CLI turns
them into ``{"error": ..., "tag": ..., "exit_code": ...}`` objects; library
code only raises.
"""

from typing import Any, Dict

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class PolyconcError(Exception):
    """Base class for all polyconc failures."""

    tag = "polyconc-error"
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, tag: str = "") -> None:
        super().__init__(message)
        if tag:
            self.tag = tag

    def to_dict(self) -> Dict[str, Any]:
        """
        Render the error as the machine-readable object emitted by the CLI.

        Returns:
            Dictionary with ``error``, ``tag`` and ``exit_code`` keys.
        """
        return {"error": str(self), "tag": self.tag, "exit_code": self.exit_code}


class ValidationFailure(PolyconcError):
    """An instance or configuration that does not describe a valid object."""

    tag = "invalid-instance"


class DimensionMismatchError(PolyconcError):
    tag = "dimension-mismatch"


class PreconditionError(PolyconcError):
    """A module precondition does not hold for the given instance."""

    tag = "precondition"


class ZeroPolynomialError(PolyconcError):
    tag = "zero-polynomial"


class DegenerateDistributionError(PolyconcError):
    tag = "degenerate-distribution"


class DivergentWeightError(PolyconcError):
    """Infinite mass or moment (growing exponential on an unbounded domain)."""

    tag = "divergent-weight"
    exit_code = EXIT_NUMERIC


class NumericFailure(PolyconcError):
    tag = "numeric-failure"
    exit_code = EXIT_NUMERIC
