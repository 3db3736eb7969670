"""Pretty printer for MinJ.  ``parse(pretty(p)) == p`` for well-formed ``p``."""

from __future__ import annotations

from crx.lang.syntax import (
    BinOp,
    BoolLit,
    Call,
    ClassDecl,
    Expr,
    FieldGet,
    FieldSet,
    If,
    IntLit,
    MethodDecl,
    New,
    Null,
    Print,
    Proceed,
    Realization,
    Seq,
    StrLit,
    This,
    Var,
)

INDENT = "    "


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def _atomic(e: Expr) -> bool:
    return not isinstance(e, (BinOp, FieldSet, Seq))


def _operand(e: Expr) -> str:
    return pretty_expr(e) if _atomic(e) else f"({pretty_expr(e)})"


def _args(args) -> str:
    return ", ".join(pretty_expr(a) for a in args)


def _block_body(e: Expr) -> str:
    """Text between the braces of a block."""
    if isinstance(e, Seq):
        return " ".join(pretty_expr(i) + ";" for i in e.items)
    return pretty_expr(e)


def _block(e: Expr) -> str:
    inner = _block_body(e)
    return f"{{ {inner} }}" if inner else "{ }"


def pretty_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return quote(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Null):
        return "null"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, This):
        return "this"
    if isinstance(e, FieldGet):
        return f"{_operand(e.target)}.{e.field}"
    if isinstance(e, FieldSet):
        return f"{_operand(e.target)}.{e.field} = {pretty_expr(e.value)}"
    if isinstance(e, Call):
        return f"{_operand(e.target)}.{e.method}({_args(e.args)})"
    if isinstance(e, New):
        return f"new {e.class_name}({_args(e.args)})"
    if isinstance(e, Print):
        return f"print({pretty_expr(e.arg)})"
    if isinstance(e, Proceed):
        return f"proceed({_args(e.args)})"
    if isinstance(e, BinOp):
        # left operand may itself be a (left-assoc) chain of the same operator
        left = pretty_expr(e.left) if isinstance(e.left, BinOp) and e.left.op == e.op == "+" else _operand(e.left)
        return f"{left} {e.op} {_operand(e.right)}"
    if isinstance(e, Seq):
        return f"({_block_body(e)})"
    if isinstance(e, If):
        text = f"if ({pretty_expr(e.cond)}) {_block(e.then)}"
        if e.else_ is not None:
            text += f" else {_block(e.else_)}"
        return text
    if isinstance(e, Realization):
        return f"realization {quote(e.label)} {_block(e.body)}"
    raise TypeError(f"not an expression: {e!r}")


def pretty_method(m: MethodDecl, indent: str = INDENT) -> str:
    params = ", ".join(m.params)
    body = m.body
    if isinstance(body, Seq) and len(body.items) > 1:
        lines = [f"{indent}{m.name}({params}) {{"]
        lines += [f"{indent}{INDENT}{pretty_expr(i)};" for i in body.items]
        lines.append(f"{indent}}}")
        return "\n".join(lines)
    return f"{indent}{m.name}({params}) {_block(body)}"


def pretty_class(cls: ClassDecl) -> str:
    head = f"class {cls.name}"
    if cls.super_name:
        head += f" extends {cls.super_name}"
    if not cls.fields and not cls.methods:
        return head + " { }"
    lines = [head + " {"]
    lines += [f"{INDENT}{f.type_name} {f.name};" for f in cls.fields]
    lines += [pretty_method(m) for m in cls.methods]
    lines.append("}")
    return "\n".join(lines)


def pretty_program(classes, module: str | None = None) -> str:
    parts = []
    if module:
        parts.append(f"module {module};")
    parts += [pretty_class(c) for c in classes]
    return "\n\n".join(parts) + "\n"
