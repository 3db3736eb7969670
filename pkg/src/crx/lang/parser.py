"""Recursive-descent parser for MinJ.

Grammar (informal)::

    file      := ("module" qname ";")? classdecl*
    classdecl := "class" ID ("extends" ID)? "{" (field | method)* "}"
    field     := ID ID ";"                      -- type, then name
    method    := ID "(" params? ")" block
    block     := "{" seq "}"
    seq       := (expr (";" expr)*)? ";"?       -- any ";" makes a Seq node
    expr      := eq ("=" expr)?                 -- assignment needs a field target
    eq        := add ("==" add)*
    add       := postfix ("+" postfix)*
    postfix   := primary ("." ID ("(" args ")")?)*
    primary   := INT | STRING | true | false | null | this | ID
               | new ID "(" args ")" | print "(" expr ")"
               | proceed "(" args ")" | realization STRING block
               | if "(" expr ")" block ("else" block)?
               | "(" seq ")"
"""

from __future__ import annotations

from crx.errors import DuplicateClassError, DuplicateMemberError, ParseError
from crx.lang.lexer import Token, tokenize
from crx.lang.syntax import (
    BinOp,
    BoolLit,
    Call,
    ClassDecl,
    Expr,
    FieldDecl,
    FieldGet,
    FieldSet,
    If,
    IntLit,
    Loc,
    MethodDecl,
    New,
    Null,
    Print,
    Proceed,
    Realization,
    Seq,
    SourceFile,
    StrLit,
    This,
    Var,
)

KEYWORDS = frozenset(
    "class extends new print if else true false null this proceed realization".split()
)


class TokenStream:
    def __init__(self, source: str, path: str | None = None):
        self.path = path
        self.tokens = tokenize(source, path)
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col, self.path)

    def at(self, value: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("op", "id") and tok.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.error(f"expected {value!r}, found {self.peek()}")
        return self.advance()

    def expect_id(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "id" or tok.value in KEYWORDS:
            raise self.error(f"expected {what}, found {tok}")
        return self.advance().value

    def expect_int(self) -> int:
        tok = self.peek()
        if tok.kind != "int":
            raise self.error(f"expected integer, found {tok}")
        return int(self.advance().value)

    def qualified_name(self) -> str:
        parts = [self.expect_id()]
        while self.at(".") and self.peek(1).kind == "id":
            self.advance()
            parts.append(self.expect_id())
        return ".".join(parts)

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def loc(self) -> Loc:
        tok = self.peek()
        return Loc(tok.line, tok.col)


class Parser(TokenStream):
    """MinJ parser; subclasses add aspect and rule declarations."""

    # -- declarations -------------------------------------------------------

    def parse_file(self) -> SourceFile:
        module = self.module_header()
        classes = []
        seen = set()
        while not self.at_eof():
            tok = self.peek()
            cls = self.class_decl()
            if cls.name in seen:
                raise DuplicateClassError(f"{self._where(tok)}duplicate class {cls.name}")
            seen.add(cls.name)
            classes.append(cls)
        return SourceFile(module, tuple(classes), self.path)

    def module_header(self) -> str | None:
        if self.at("module"):
            self.advance()
            name = self.qualified_name()
            self.expect(";")
            return name
        return None

    def _where(self, tok: Token) -> str:
        where = f"{self.path}:" if self.path else ""
        return f"{where}{tok.line}:{tok.col}: "

    def class_decl(self) -> ClassDecl:
        self.expect("class")
        name = self.expect_id("class name")
        super_name = None
        if self.accept("extends"):
            super_name = self.expect_id("superclass name")
        self.expect("{")
        fields, methods = [], []
        while not self.at("}"):
            if self.at_eof():
                raise self.error(f"unterminated class {name}")
            member_tok = self.peek()
            member = self.member()
            if isinstance(member, FieldDecl):
                if any(f.name == member.name for f in fields):
                    raise DuplicateMemberError(
                        f"{self._where(member_tok)}duplicate field {name}.{member.name}")
                fields.append(member)
            else:
                if any(m.signature == member.signature for m in methods):
                    raise DuplicateMemberError(
                        f"{self._where(member_tok)}duplicate method {name}.{member.name}/{member.arity}")
                methods.append(member)
        self.expect("}")
        return ClassDecl(name, super_name, tuple(fields), tuple(methods))

    def member(self):
        first = self.expect_id("member")
        if self.at("("):
            return self.method_rest(first)
        name = self.expect_id("field name")
        self.expect(";")
        return FieldDecl(name, first)

    def method_rest(self, name: str) -> MethodDecl:
        params = self.params()
        body = self.block()
        return MethodDecl(name, params, body)

    def params(self) -> tuple[str, ...]:
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            while True:
                tok = self.peek()
                p = self.expect_id("parameter name")
                if p in params:
                    raise DuplicateMemberError(f"{self._where(tok)}duplicate parameter {p}")
                params.append(p)
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(params)

    # -- expressions ----------------------------------------------------------

    def block(self) -> Expr:
        self.expect("{")
        body = self.seq("}")
        self.expect("}")
        return body

    def seq(self, closer: str | None) -> Expr:
        """Parse a sequence up to ``closer`` (``None`` means end of input)."""

        def closed() -> bool:
            return self.at_eof() if closer is None else self.at(closer)

        items = []
        saw_semicolon = False
        while not closed():
            items.append(self.expr())
            if self.accept(";"):
                saw_semicolon = True
                continue
            if not closed():
                raise self.error(f"expected ';' or {closer or 'end of input'!r}, found {self.peek()}")
        if len(items) == 1 and not saw_semicolon:
            return items[0]
        return Seq(tuple(items))

    def expr(self) -> Expr:
        lhs = self.equality()
        if self.at("="):
            tok = self.advance()
            if not isinstance(lhs, FieldGet):
                raise self.error("assignment target must be a field access", tok)
            return FieldSet(lhs.target, lhs.field, self.expr())
        return lhs

    def equality(self) -> Expr:
        left = self.additive()
        while self.accept("=="):
            left = BinOp("==", left, self.additive())
        return left

    def additive(self) -> Expr:
        left = self.postfix()
        while self.accept("+"):
            left = BinOp("+", left, self.postfix())
        return left

    def postfix(self) -> Expr:
        e = self.primary()
        while self.at("."):
            self.advance()
            loc = self.loc()
            name = self.expect_id("member name")
            if self.at("("):
                e = Call(e, name, self.args(), loc)
            else:
                e = FieldGet(e, name)
        return e

    def args(self) -> tuple[Expr, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(args)

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return IntLit(int(tok.value))
        if tok.kind == "str":
            self.advance()
            return StrLit(tok.value)
        if tok.kind == "id":
            word = tok.value
            if word == "true" or word == "false":
                self.advance()
                return BoolLit(word == "true")
            if word == "null":
                self.advance()
                return Null()
            if word == "this":
                self.advance()
                return This()
            if word == "new":
                self.advance()
                loc = self.loc()
                name = self.expect_id("class name")
                return New(name, self.args(), loc)
            if word == "print":
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Print(arg)
            if word == "proceed":
                self.advance()
                return Proceed(self.args())
            if word == "realization":
                self.advance()
                label = self.peek()
                if label.kind != "str":
                    raise self.error("expected realization label string")
                self.advance()
                return Realization(label.value, self.block())
            if word == "if":
                self.advance()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                then = self.block()
                else_ = self.block() if self.accept("else") else None
                return If(cond, then, else_)
            if word in KEYWORDS:
                raise self.error(f"unexpected keyword {word!r}")
            self.advance()
            return Var(word)
        if self.accept("("):
            inner = self.seq(")")
            self.expect(")")
            return inner
        raise self.error(f"unexpected {tok}")


def parse_file(source: str, path: str | None = None) -> SourceFile:
    return Parser(source, path).parse_file()


def parse_program(source: str, path: str | None = None) -> list[ClassDecl]:
    """Parse MinJ source text into its class declarations."""
    return list(parse_file(source, path).classes)


def parse_expr(source: str) -> Expr:
    p = Parser(source)
    return p.seq(None)


def parse_entry(text: str) -> Expr:
    """Turn ``C.m`` into ``new C().m()``; anything else parses as an expression."""
    parts = text.split(".")
    if len(parts) == 2 and all(p.isidentifier() for p in parts):
        return Call(New(parts[0]), parts[1], ())
    return parse_expr(text)
