"""Exception hierarchy shared across the engine."""
from __future__ import annotations


class StreetSimError(Exception):
    """Base class for every engine error."""


# geometry
class InvalidGeometry(StreetSimError, ValueError):
    pass


class CoincidentPoints(InvalidGeometry):
    pass


# world
class WorldError(StreetSimError):
    pass


class SchemaError(WorldError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path or '<root>'}: {message}")


class DanglingReference(WorldError):
    pass


class AsymmetricEdge(WorldError):
    pass


class InconsistentGeometry(WorldError):
    pass


class InfeasibleParams(StreetSimError, ValueError):
    pass


class NoStreetView(StreetSimError):
    pass


class UnknownPlace(StreetSimError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownNode(StreetSimError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


# mobility
class NoEdgeInDirection(StreetSimError):
    pass


class Unreachable(StreetSimError):
    pass


class UnknownMode(StreetSimError, ValueError):
    pass


class Stuck(StreetSimError):
    def __init__(self, node_id: str, message: str = ""):
        self.node_id = node_id
        super().__init__(message or f"no progress possible at node {node_id}")


class EmptyRegion(StreetSimError):
    pass


class BudgetExhausted(StreetSimError):
    pass


# perception / providers
class ProviderError(StreetSimError):
    pass


class LostTarget(StreetSimError):
    pass


# the three below reject a provider's answer, so they are provider errors too
class InvalidAction(ProviderError):
    pass


class IndexOutOfRange(ProviderError):
    pass


class UnparseableAnswer(ProviderError):
    pass
