"""Exception types shared across the package."""


class LocoplanError(Exception):
    """Base class for all package errors."""


class InvalidArgument(LocoplanError, ValueError):
    """A caller violated an operation precondition (bad dimension, bad value)."""


class NotFound(LocoplanError, KeyError):
    """A referenced id (frame, surface, obstacle) does not exist."""


class ScenarioError(LocoplanError, ValueError):
    """Scenario/robot file failed to parse or validate.

    `path` is the dotted field path of the offending entry, e.g. "task.q_init[3]".
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SingularSystem(LocoplanError):
    """The damped normal equations could not be factorized (raise lambda and retry)."""
