"""Recursive-descent parser for ``.sec`` programs and ``.acl`` files.

Grammar (``#`` starts a comment that runs to end of line)::

    expr    := appexpr | "if" expr "then" expr "else" expr
             | "fn" IDENT ":" anntype "=>" expr
             | "letrec" IDENT "(" IDENT ":" anntype ")" ":" anntype "!" privset "=" expr "in" expr
    appexpr := atom { atom }
    atom    := "true" | "false" | IDENT | STRING | "(" expr ")"
             | "sign" IDENT "{" expr "}" | "dopriv" IDENT "{" expr "}"
             | "check" IDENT "{" expr "}"
             | "test" IDENT "{" expr "}" "else" "{" expr "}"
    anntype := atype [ "-" privset "->" anntype | "->" anntype ]
    atype   := "bool" | "(" anntype ")"
    privset := "{" [ IDENT { "," IDENT } ] "}"

An identifier that is not lexically bound and names a builtin parses as a
``Const``; every other identifier is a ``Var``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import builtins
from .acl import Acl
from .syntax import (
    BOOL,
    KEYWORDS,
    AnnArrow,
    App,
    Check,
    Const,
    DoPriv,
    If,
    Lam,
    LetRec,
    Lit,
    Signs,
    Span,
    Test,
    Var,
    is_identifier,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'string', 'kw', 'sym', 'eof'
    text: str
    line: int
    col: int

    @property
    def span(self) -> Span:
        return Span(self.line, self.col)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>=>|->|[(){}:=!,-])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind in ("string", "sym"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "<end of input>", line, pos - line_start + 1))
    return tokens


_ATOM_START = {"true", "false", "(", "sign", "dopriv", "check", "test"}
_EXPR_START = _ATOM_START | {"if", "fn", "letrec", "identifier", "string"}


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0
        self.bound: list = []

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, expected=()):
        raise ParseError(message, self.tok.line, self.tok.col, expected)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("kw", "sym") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.tok.text!r}", {text})
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error(f"unexpected {self.tok.text!r}", {"identifier"})
        t = self.tok
        self.i += 1
        return t.text

    # types

    def privset(self) -> frozenset:
        self.expect("{")
        names = []
        if not self.at("}"):
            names.append(self.ident())
            while self.at(","):
                self.i += 1
                names.append(self.ident())
        self.expect("}")
        return frozenset(names)

    def anntype(self):
        if self.at("bool"):
            self.i += 1
            left = BOOL
        elif self.at("("):
            self.i += 1
            left = self.anntype()
            self.expect(")")
        else:
            self.error(f"unexpected {self.tok.text!r}", {"bool", "("})
        if self.at("->"):
            self.i += 1
            return AnnArrow(left, frozenset(), self.anntype())
        if self.at("-"):
            self.i += 1
            latent = self.privset()
            self.expect("->")
            return AnnArrow(left, latent, self.anntype())
        return left

    # expressions

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "string") or (t.kind in ("kw", "sym") and t.text in _ATOM_START)

    def expr(self):
        t = self.tok
        if self.at("if"):
            self.i += 1
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return If(c, a, b, span=t.span)
        if self.at("fn"):
            self.i += 1
            x = self.ident()
            self.expect(":")
            ann = self.anntype()
            self.expect("=>")
            self.bound.append(x)
            body = self.expr()
            self.bound.pop()
            return Lam(x, ann, body, span=t.span)
        if self.at("letrec"):
            self.i += 1
            f = self.ident()
            self.expect("(")
            x = self.ident()
            self.expect(":")
            pty = self.anntype()
            self.expect(")")
            self.expect(":")
            rty = self.anntype()
            self.expect("!")
            latent = self.privset()
            self.expect("=")
            self.bound += [f, x]
            body = self.expr()
            self.bound.pop()
            self.expect("in")
            rest = self.expr()
            self.bound.pop()
            return LetRec(f, AnnArrow(pty, latent, rty), x, body, rest, span=t.span)
        if not self.starts_atom():
            self.error(f"unexpected {self.tok.text!r}", _EXPR_START)
        e = self.atom()
        while self.starts_atom():
            arg = self.atom()
            e = App(e, arg, span=e.span)
        return e

    def braced(self):
        self.expect("{")
        e = self.expr()
        self.expect("}")
        return e

    def atom(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text not in self.bound and builtins.is_builtin(t.text):
                return Const(t.text, span=t.span)
            return Var(t.text, span=t.span)
        if t.kind == "string":
            self.i += 1
            return Const(t.text, span=t.span)
        if self.at("true") or self.at("false"):
            self.i += 1
            return Lit(t.text == "true", span=t.span)
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if self.at("sign"):
            self.i += 1
            n = self.ident()
            return Signs(n, self.braced(), span=t.span)
        if self.at("dopriv"):
            self.i += 1
            p = self.ident()
            return DoPriv(p, self.braced(), span=t.span)
        if self.at("check"):
            self.i += 1
            p = self.ident()
            return Check(p, self.braced(), span=t.span)
        if self.at("test"):
            self.i += 1
            p = self.ident()
            a = self.braced()
            self.expect("else")
            b = self.braced()
            return Test(p, a, b, span=t.span)
        self.error(f"unexpected {t.text!r}", _EXPR_START)


def parse_expr(source: str):
    p = _Parser(source)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}", {"<end of input>"})
    return e


def parse_type(source: str):
    p = _Parser(source)
    t = p.anntype()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}", {"<end of input>"})
    return t


def parse_acl(source: str) -> Acl:
    """Parse ``principal : priv priv ...`` lines; repeated principals merge by union."""
    grants: dict = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if ":" not in line:
            raise ParseError("expected 'principal : privileges'", lineno, 1, {":"})
        head, _, tail = line.partition(":")
        principal = head.strip()
        if not is_identifier(principal):
            raise ParseError(f"bad principal name {principal!r}", lineno, 1, {"identifier"})
        privs = tail.split()
        for p in privs:
            if not is_identifier(p):
                col = raw.index(p, len(head) + 1) + 1
                raise ParseError(f"bad privilege name {p!r}", lineno, col, {"identifier"})
        grants.setdefault(principal, set()).update(privs)
    return Acl(grants)
