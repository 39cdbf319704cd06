"""Exception hierarchy. Each family carries the CLI exit code it maps to."""

from __future__ import annotations

from typing import Optional, Sequence


class AILearnError(Exception):
    exit_code = 1

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigError(AILearnError, ValueError):
    """Invalid parameter, argument or configuration value."""

    exit_code = 2


class DataError(AILearnError, ValueError):
    """Anything wrong with the data itself."""

    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, line: int, path: Optional[str] = None):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


class EmptyInputError(DataError):
    pass


class ShapeError(DataError):
    pass


class ProtocolError(DataError):
    """The KF/NF protocol cannot be applied to the given data."""


class TaggingError(DataError):
    """Spoof instances without the material tag the protocol needs."""


class StratificationError(DataError):
    pass


class SingleClassError(DataError):
    """A binary SVM was requested on data holding one label only."""


class DegeneratePhaseError(AILearnError):
    """Every base classifier of a phase fell below the prune threshold."""

    exit_code = 4

    def __init__(self, message: str, weights: Sequence[float], stage: Optional[str] = None):
        super().__init__(message, stage)
        self.weights = tuple(weights)


class StateError(AILearnError):
    pass
