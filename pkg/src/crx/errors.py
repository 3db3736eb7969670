"""Exception hierarchy shared by every part of the weaver.

Everything raised on purpose derives from :class:`CRXError`; the CLI maps
those to exit code 1 and anything else is a bug.
"""

from __future__ import annotations


class CRXError(Exception):
    """Base class for domain errors."""


# -- source level -----------------------------------------------------------

class ParseError(CRXError):
    def __init__(self, message: str, line: int = 0, col: int = 0, path: str | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{col}: {message}")


class SyntaxErrors(CRXError):
    """Several files failed to parse; carries every individual error."""

    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class MissingInputError(CRXError):
    pass


# -- program well-formedness ----------------------------------------------

class ProgramError(CRXError):
    pass


class DuplicateClassError(ProgramError):
    pass


class DuplicateMemberError(ProgramError):
    pass


class UnknownClassError(ProgramError):
    pass


class InheritanceCycleError(ProgramError):
    pass


class ProceedOutsideAround(ProgramError):
    pass


# -- evaluation -------------------------------------------------------------

class EvalError(CRXError):
    pass


class NoSuchMethodError(EvalError):
    pass


class NoSuchFieldError(EvalError):
    pass


class NullTargetError(EvalError):
    pass


class RuntimeTypeError(EvalError):
    pass


class UnboundVariableError(EvalError):
    pass


class StepBudgetExceeded(CRXError):
    pass


# -- weaving ------------------------------------------------------------------

class MechanismError(CRXError):
    pass


class ProvenanceMismatch(CRXError):
    def __init__(self, element_id: int, expected, actual):
        self.element_id = element_id
        self.expected = expected
        self.actual = actual
        super().__init__(f"element {element_id}: expected {expected!r}, got {actual!r}")


# compositor
class HyperspaceSpecError(MechanismError):
    pass


class UnmappedClassError(MechanismError):
    pass


class EmptySliceError(MechanismError):
    pass


class KindConflictError(MechanismError):
    pass


class FieldTypeConflictError(MechanismError):
    pass


class SuperclassConflictError(MechanismError):
    pass


class UnresolvedUnitError(MechanismError):
    pass


# open classes
class UnknownTargetError(MechanismError):
    pass


class MemberCollisionError(MechanismError):
    pass


class AmbiguousParentError(MechanismError):
    pass


class UnknownAdviceError(MechanismError):
    pass
