"""
Fault types raised by the simulator layers.
"""
from typing import Optional


class SimulationError(Exception):
    """Base class; `field` names the offending input when known."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ConfigError(SimulationError):
    """Scenario text could not be parsed or violates a config invariant."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        super().__init__(message, field)
        self.line = line
        self.column = column


class ModelFault(SimulationError):
    """A layer operation received input outside its contract."""


class RunAbort(SimulationError):
    """The engine hit non-finite state and stopped."""

    def __init__(self, message: str, field: str, tick: int, t: float):
        super().__init__(message, field)
        self.tick = tick
        self.t = t
