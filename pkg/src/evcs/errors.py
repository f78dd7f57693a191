"""Exception types shared across the package.

The CLI maps each class to a stable exit code; see ``evcs.cli.EXIT_CODES``.
"""


class EvcsError(Exception):
    """Base class for package-specific failures."""


class ScenarioParseError(EvcsError):
    """A scenario or search file could not be parsed."""


class ValidationError(EvcsError):
    """A parameter lies outside its physical or configured range."""


class DegenerateScenarioError(EvcsError):
    """The heralding probability vanishes, so conditional metrics are undefined."""


class TruncationMassError(EvcsError):
    """The photon-number caps capture too little probability mass."""

    def __init__(self, message: str, captured: float):
        super().__init__(f"{message} (captured mass {captured:.6g})")
        self.captured = captured


class NoSolutionError(EvcsError):
    """The heralding condition cannot be satisfied on t2 in (0, 1]."""


class ConditionError(EvcsError):
    """A required operating condition is violated beyond tolerance."""


class PropagationLeakageError(EvcsError):
    """The reference propagation lost too much norm to a retention cap."""


class EmptyResultError(EvcsError):
    """A parameter search returned no rows satisfying the constraints."""
