"""Base (unannotated) typing.  Security constructs are transparent to types."""
from __future__ import annotations

from typing import Mapping, Optional

from . import builtins
from .syntax import (
    BOOL,
    AnnArrow,
    App,
    Arrow,
    Check,
    Const,
    DoPriv,
    If,
    Lam,
    LetRec,
    Lit,
    Signs,
    Test,
    Type,
    Var,
    erase_ann,
    pretty_type,
)


class TypeCheckError(Exception):
    """Base type error; ``span`` points at the offending node when known."""

    def __init__(self, message: str, span=None):
        self.span = span
        where = f"{span}: " if span is not None else ""
        super().__init__(where + message)


def typecheck(ctx: Optional[Mapping], e) -> Type:
    """Return the base type of ``e``; ``ctx`` maps names to (annotated or base) types."""
    env = {x: erase_ann(t) for x, t in (ctx or {}).items()}
    return _tc(env, e)


def _expect_same(a: Type, b: Type, what: str, span):
    if a != b:
        raise TypeCheckError(f"{what}: {pretty_type(a)} vs {pretty_type(b)}", span)


def _tc(env: dict, e) -> Type:
    if isinstance(e, Lit):
        return BOOL
    if isinstance(e, Const):
        if not builtins.is_builtin(e.name):
            raise TypeCheckError(f"unknown constant {e.name}", e.span)
        return erase_ann(builtins.builtin_type(e.name))
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise TypeCheckError(f"unbound variable {e.name}", e.span) from None
    if isinstance(e, If):
        if _tc(env, e.cond) != BOOL:
            raise TypeCheckError("condition must be bool", e.cond.span or e.span)
        a = _tc(env, e.then)
        b = _tc(env, e.orelse)
        _expect_same(a, b, "branches differ", e.span)
        return a
    if isinstance(e, Lam):
        pt = erase_ann(e.param_ann)
        return Arrow(pt, _tc({**env, e.param: pt}, e.body))
    if isinstance(e, App):
        ft = _tc(env, e.fn)
        if not isinstance(ft, Arrow):
            raise TypeCheckError(f"applying a non-function of type {pretty_type(ft)}", e.span)
        at = _tc(env, e.arg)
        _expect_same(ft.param, at, "argument type mismatch", e.arg.span or e.span)
        return ft.result
    if isinstance(e, LetRec):
        assert isinstance(e.fann, AnnArrow)
        ft = erase_ann(e.fann)
        bt = _tc({**env, e.fname: ft, e.param: ft.param}, e.body)
        _expect_same(bt, ft.result, "letrec body does not match declared result", e.span)
        return _tc({**env, e.fname: ft}, e.in_expr)
    if isinstance(e, (Signs, DoPriv, Check)):
        return _tc(env, e.body)
    if isinstance(e, Test):
        a = _tc(env, e.then)
        b = _tc(env, e.orelse)
        _expect_same(a, b, "test branches differ", e.span)
        return a
    raise TypeCheckError(f"not an expression: {e!r}")
