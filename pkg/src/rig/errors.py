"""Exception hierarchy shared by all modules."""


class RigError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(RigError):
    """A serialized object does not match its file format.

    Attributes:
        path: dotted path to the offending field, e.g. "moore.delta.q0.a1".
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class GameError(RigError):
    """A game object is structurally unusable (unknown move, partial table)."""


class MorphismError(RigError):
    """A morphism violates a precondition of the requested operation."""


class SolverError(RigError):
    """The solver refuses an input (failed validation, unsupported objective)."""


class StrategyError(RigError):
    """A strategy operation cannot produce a result (e.g. losing instance)."""


class RefinementError(RigError):
    """A parametric tree game or parameter assignment is malformed."""


class CapExceeded(RigError):
    """A configured resource cap (universe size, enumeration budget) was hit."""
