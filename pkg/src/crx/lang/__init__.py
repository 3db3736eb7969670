"""MinJ: the small class-based base language every mechanism weaves over."""

from crx.lang.interp import (
    Computation,
    Interpreter,
    JoinPointDescription,
    Obj,
    TraceEvent,
    evaluate,
    render,
    validate_program,
)
from crx.lang.parser import parse_entry, parse_expr, parse_file, parse_program
from crx.lang.printer import pretty_class, pretty_expr, pretty_program
from crx.lang.syntax import ClassDecl, FieldDecl, MethodDecl, SourceFile

__all__ = [
    "ClassDecl",
    "Computation",
    "FieldDecl",
    "Interpreter",
    "JoinPointDescription",
    "MethodDecl",
    "Obj",
    "SourceFile",
    "TraceEvent",
    "evaluate",
    "parse_entry",
    "parse_expr",
    "parse_file",
    "parse_program",
    "pretty_class",
    "pretty_expr",
    "pretty_program",
    "render",
    "validate_program",
]
