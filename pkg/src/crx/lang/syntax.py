"""MinJ abstract syntax.

All nodes are frozen dataclasses built from tuples, so a parsed program is
immutable and compares structurally.  Source locations are carried on the
nodes that become join points but never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOWHERE = Loc()


# -- expressions --------------------------------------------------------------

class Expr:
    """Marker base for expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class StrLit(Expr):
    value: str


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Null(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class This(Expr):
    pass


@dataclass(frozen=True)
class FieldGet(Expr):
    target: Expr
    field: str


@dataclass(frozen=True)
class FieldSet(Expr):
    target: Expr
    field: str
    value: Expr


@dataclass(frozen=True)
class Call(Expr):
    target: Expr
    method: str
    args: tuple[Expr, ...] = ()
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class New(Expr):
    class_name: str
    args: tuple[Expr, ...] = ()
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class Seq(Expr):
    items: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    else_: Optional[Expr] = None


@dataclass(frozen=True)
class Print(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # "+" or "=="
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Proceed(Expr):
    """Invoke the next inner layer of an around advice."""

    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Realization(Expr):
    """A labelled realization body inside a merged (Sequence) method.

    Produced by the compositor; evaluating it records a
    ``realization-execution`` event before running ``body``.
    """

    label: str
    body: Expr


# -- declarations -------------------------------------------------------------

@dataclass(frozen=True)
class FieldDecl:
    name: str
    type_name: str


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[str, ...]
    body: Expr

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.name, len(self.params))


Member = Union[FieldDecl, MethodDecl]


@dataclass(frozen=True)
class ClassDecl:
    name: str
    super_name: Optional[str] = None
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()

    def field(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method(self, name: str, arity: int) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name and m.arity == arity:
                return m
        return None


@dataclass(frozen=True)
class SourceFile:
    """One parsed ``.mj`` file: an optional ``module`` header plus classes."""

    module: Optional[str]
    classes: tuple[ClassDecl, ...]
    path: Optional[str] = field(default=None, compare=False)


def canonical_class(cls: ClassDecl) -> ClassDecl:
    """Sort a class's fields and methods by name (and arity)."""
    return ClassDecl(
        cls.name,
        cls.super_name,
        tuple(sorted(cls.fields, key=lambda f: f.name)),
        tuple(sorted(cls.methods, key=lambda m: m.signature)),
    )


def canonical_program(classes) -> tuple[ClassDecl, ...]:
    return tuple(sorted((canonical_class(c) for c in classes), key=lambda c: c.name))


def walk(expr: Expr):
    """Yield ``expr`` and every sub-expression, pre-order."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (FieldGet,)):
            stack.append(node.target)
        elif isinstance(node, FieldSet):
            stack.extend((node.value, node.target))
        elif isinstance(node, Call):
            stack.extend(reversed(node.args))
            stack.append(node.target)
        elif isinstance(node, (New, Proceed)):
            stack.extend(reversed(node.args))
        elif isinstance(node, Seq):
            stack.extend(reversed(node.items))
        elif isinstance(node, If):
            if node.else_ is not None:
                stack.append(node.else_)
            stack.extend((node.then, node.cond))
        elif isinstance(node, Print):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.right, node.left))
        elif isinstance(node, Realization):
            stack.append(node.body)


def rename_vars(expr: Expr, mapping: dict[str, str]) -> Expr:
    """Return ``expr`` with free variables renamed through ``mapping``.

    MinJ has no binders inside expressions, so every ``Var`` is free.
    """
    if not mapping:
        return expr

    def go(e: Expr) -> Expr:
        if isinstance(e, Var):
            return Var(mapping.get(e.name, e.name))
        if isinstance(e, FieldGet):
            return FieldGet(go(e.target), e.field)
        if isinstance(e, FieldSet):
            return FieldSet(go(e.target), e.field, go(e.value))
        if isinstance(e, Call):
            return Call(go(e.target), e.method, tuple(go(a) for a in e.args), e.loc)
        if isinstance(e, New):
            return New(e.class_name, tuple(go(a) for a in e.args), e.loc)
        if isinstance(e, Proceed):
            return Proceed(tuple(go(a) for a in e.args))
        if isinstance(e, Seq):
            return Seq(tuple(go(i) for i in e.items))
        if isinstance(e, If):
            return If(go(e.cond), go(e.then), None if e.else_ is None else go(e.else_))
        if isinstance(e, Print):
            return Print(go(e.arg))
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right))
        if isinstance(e, Realization):
            return Realization(e.label, go(e.body))
        return e

    return go(expr)
