"""Exceptions raised by quasitree.

Input problems subclass ValueError so callers can treat them like any other
invalid-argument error. Verification failures are never raised; they are
report entries.
"""


class QuasitreeError(Exception):
    """Base class for all quasitree errors."""


class NoAxisError(QuasitreeError, ValueError):
    """Raised when an isometry is elliptic or parabolic and has no axis."""


class AsymptoticProjectionError(QuasitreeError, ValueError):
    """Raised when a projection is unbounded because endpoints coincide."""


class DegenerateConfigurationError(QuasitreeError, ValueError):
    """Raised for empty, non-discrete or otherwise unusable instances."""


class WindowError(QuasitreeError, ValueError):
    """Raised when an anchor falls outside a vertex space's truncation window."""


class OrderInconsistencyError(QuasitreeError, ValueError):
    """
    Raised when the large-projection comparator is not a strict total order.

    :param message: Human readable description
    :param triple: The offending vertices (two for a tie, three for a cycle)
    """

    def __init__(self, message: str, triple: tuple[str, ...] = ()):
        super().__init__(message)
        self.triple = triple


class BarrierNotFoundError(QuasitreeError, ValueError):
    """Raised when guard chaining fails, which means K is too small."""


class DisconnectedComplexError(QuasitreeError, RuntimeError):
    """
    Raised when a projection complex built from modified distances is disconnected.

    :param message: Human readable description
    :param components: The connected components found, as sorted vertex lists
    """

    def __init__(self, message: str, components: list[list[str]]):
        super().__init__(message)
        self.components = components
