"""Tokenizer shared by every input format (.mj, .asp, .rules, .hs, .hm)."""

from __future__ import annotations

import re
from dataclasses import dataclass

from crx.errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>==|&&|\|\||[{}();,.=+:*!<>-])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "int", "str", "op", "eof"
    value: str
    line: int
    col: int
    start: int
    end: int

    def __str__(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.value)


def unescape(raw: str, line: int, col: int, path: str | None) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            nxt = raw[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col, path)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str, path: str | None = None) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col, path)
        kind = m.lastgroup
        text = m.group()
        if kind == "str":
            tokens.append(Token("str", unescape(text[1:-1], line, col, path), line, col, pos, m.end()))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col, pos, m.end()))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, pos, pos))
    return tokens
