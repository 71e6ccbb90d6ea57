"""Exception types raised by treecap."""

from __future__ import annotations


class TreecapError(Exception):
    """Base class for all treecap errors."""


class InvalidSizeError(TreecapError, ValueError):
    """Network size outside the supported range."""


class DegeneratePlacementError(TreecapError, ValueError):
    """Placement cannot support the requested construction.

    Raised for empty level-L cells when building the tree and for coincident
    points when evaluating node cut bounds.
    """

    def __init__(self, message: str, cell: tuple[int, int] | None = None):
        super().__init__(message)
        self.cell = cell


class InvarianceError(TreecapError, RuntimeError):
    """Cooperation-layer holdings violate the even-distribution invariant."""

    def __init__(self, message: str, node: object = None):
        super().__init__(message)
        self.node = node


class RelayFailureError(TreecapError, RuntimeError):
    """No dense squarelet is available as relay for some pair."""

    def __init__(self, message: str, level: int, histogram: dict[int, int]):
        super().__init__(message)
        self.level = level
        self.histogram = histogram
