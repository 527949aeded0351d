from __future__ import annotations

from typing import Optional


class AsplLabError(Exception):
    # Root of every error raised by the library.
    pass


# Graph / strategy runtime errors

class GraphError(AsplLabError, ValueError):

    # `line` is set (1-based) when the error was raised while loading a file.

    def __init__(self, message: str, *, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class NodeOutOfRange(GraphError):
    pass


class DisconnectedGraph(GraphError):
    pass


class TooSmall(GraphError):
    pass


class IsolatedNode(GraphError):
    pass


class CompleteGraph(GraphError):
    pass


class StaleMeasures(GraphError):
    pass


class BudgetExceedsCapacity(GraphError):
    pass


# Parameter errors

class ParamsError(AsplLabError, ValueError):
    pass


class BadParams(ParamsError):
    pass


# Data / input errors

class DataError(AsplLabError, ValueError):
    pass


class ParseError(DataError):

    def __init__(self, message: str, *, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyNetwork(DataError):
    pass


class EmptyInput(DataError):
    pass


class InsufficientData(DataError):
    pass


class ExperimentError(AsplLabError):

    # Failure of one (model, strategy, instance) cell; the cause is chained.

    def __init__(self, message: str, *, model: str = "?", strategy: str = "?", instance: int = -1) -> None:
        super().__init__(f"[{model}/{strategy}/#{instance}] {message}")
        self.model = model
        self.strategy = strategy
        self.instance = instance
