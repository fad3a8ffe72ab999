"""Structured errors raised by the ribbon-poisson core modules"""

from typing import Any, Optional


class RibbonPoissonError(Exception):
    """Base class for every precondition or numeric failure in the package"""

    kind = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        """Serializable form used by the CLI error reports"""
        payload = {"error": self.kind, "message": self.message}
        for key, value in sorted(self.details.items()):
            payload[key] = value if isinstance(value, (int, float, str, bool, type(None), list)) else str(value)
        return payload


class InvalidDimensionError(RibbonPoissonError):
    kind = "invalid-dimension"


class NumericError(RibbonPoissonError):
    kind = "numeric"


class GraphValidationError(RibbonPoissonError):
    """Raised when an operation needs a valid graph and gets an invalid one"""

    kind = "graph-validation"

    def __init__(self, report: Any):
        super().__init__(f"invalid graph: {report.violation} at end {report.end!r}",
                         violation=report.violation, end=report.end)
        self.report = report


class MoveError(RibbonPoissonError):
    kind = "move"


class GluePreconditionError(MoveError):
    kind = "glue-precondition"


class ConnectionMismatchError(RibbonPoissonError):
    kind = "connection-mismatch"


class PathError(RibbonPoissonError):
    kind = "path"


class ObservableError(RibbonPoissonError):
    kind = "observable"


class LeafPreconditionError(RibbonPoissonError):
    """Leaf data violates a precondition; `pair` names the offending indices"""

    kind = "leaf-precondition"

    def __init__(self, message: str, pair: Optional[tuple] = None, **details: Any):
        if pair is not None:
            details["pair"] = list(pair)
        super().__init__(message, **details)
        self.pair = pair


class BranchError(RibbonPoissonError):
    kind = "branch"


class CiliumInFaceError(RibbonPoissonError):
    kind = "cilium-in-face"
