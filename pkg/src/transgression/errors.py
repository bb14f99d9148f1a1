"""Exception types shared across the package."""


class TransgressionError(Exception):
    pass


class InvalidInverse(TransgressionError, ZeroDivisionError):
    pass


class NotInvertible(TransgressionError, ZeroDivisionError):
    pass


class BranchError(TransgressionError, ValueError):
    pass


class ShapeError(TransgressionError, ValueError):
    pass


class NotNilpotent(TransgressionError, ValueError):
    pass


class NotInRing(TransgressionError, ValueError):
    pass


class FlatnessViolation(TransgressionError, ValueError):
    pass


class DegenerateScenario(TransgressionError, ValueError):
    pass


class ScenarioError(TransgressionError, ValueError):
    """Scenario file does not match the schema.  ``pointer`` is a JSON pointer."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
