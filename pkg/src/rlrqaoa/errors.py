from __future__ import annotations


class RqaoaError(Exception):
    """Base class for all package errors."""


class InvalidAssignment(RqaoaError, ValueError):
    pass


class InvalidAction(RqaoaError, ValueError):
    pass


class CorruptMap(RqaoaError, ValueError):
    pass


class InvalidVertex(RqaoaError, ValueError):
    pass


class InvalidEdge(RqaoaError, ValueError):
    pass


class UnsupportedFields(RqaoaError, ValueError):
    pass


class SizeLimit(RqaoaError, ValueError):
    pass


class NoAction(RqaoaError, ValueError):
    pass


class InvalidBudget(RqaoaError, ValueError):
    pass


class ParameterCoverage(RqaoaError, ValueError):
    pass


class InvalidBatch(RqaoaError, ValueError):
    pass


class Infeasible(RqaoaError, ValueError):
    pass


class NotAvailable(RqaoaError, LookupError):
    pass


class MalformedInstance(RqaoaError, ValueError):
    pass
