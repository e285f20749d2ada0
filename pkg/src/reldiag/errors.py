"""Exception hierarchy shared by every reldiag module."""
from __future__ import annotations


class ReldiagError(Exception):
    """Base class for all domain errors raised by reldiag."""


class SchemaError(ReldiagError):
    """Unknown relation or attribute, or a malformed schema/database."""


class TypeFault(ReldiagError):
    """Comparison between values of different tags (int vs. string)."""


class CapacityError(ReldiagError):
    """A configured enumeration or expansion bound would be exceeded."""


class SourceError(ReldiagError):
    """Syntax error with a precise location in the input text."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        where = f"{line}:{column}"
        if token:
            super().__init__(f"{where}: {message} (at {token!r})")
        else:
            super().__init__(f"{where}: {message}")


class ScopeError(SourceError):
    """A TRC variable is referenced outside the scope that quantifies it."""

    def __init__(self, variable: str, line: int = 0, column: int = 0):
        self.variable = variable
        super().__init__(f"variable {variable!r} is not in scope", line, column, variable)


class DatalogError(ReldiagError):
    """Base class for Datalog well-formedness faults."""


class RecursionFault(DatalogError):
    pass


class DuplicateHeadFault(DatalogError):
    pass


class SafetyFault(DatalogError):
    def __init__(self, message: str, variable: str | None = None):
        self.variable = variable
        super().__init__(message)


class RaError(ReldiagError):
    """Attribute resolution and fragment faults for relational algebra."""


class UnionInFragmentError(RaError):
    pass


class AnchoringError(ReldiagError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"unanchored predicates: {lines}")


class SafetyError(ReldiagError):
    """An output attribute is not bound to a root-scope table attribute."""


class TranslationError(ReldiagError):
    """Input lies outside what a translation can express."""


class ValidityError(ReldiagError):
    def __init__(self, violations):
        self.violations = list(violations)
        conds = sorted({v.condition for v in self.violations})
        super().__init__(f"invalid diagram, violated conditions {conds}: "
                         + "; ".join(v.message for v in self.violations))


class DiagramSchemaError(ReldiagError):
    """A diagram JSON document does not match the documented schema."""

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")
