"""Type-and-effect analysis certifying absence of security errors.

``analyze(ctx, n, e, acl)`` computes an annotated type and the set of
privileges that must be enabled for ``e``, signed by ``n``, to run without a
failed check.  Parameter and letrec annotations are supplied by the
programmer; the analysis checks them in one bottom-up pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import builtins
from .acl import Acl
from .syntax import (
    BOOL,
    AnnArrow,
    AnnType,
    App,
    BoolType,
    Check,
    Const,
    DoPriv,
    If,
    Lam,
    LetRec,
    Lit,
    Signs,
    Test,
    Var,
    erase_ann,
    fmt_privset,
    pretty_type,
)
from .typecheck import TypeCheckError, typecheck

SUBTYPE_FAILURE = "SubtypeFailure"
SIGNS_SIDE_CONDITION = "SignsSideCondition"
LATENT_MISMATCH = "LatentMismatch"
BASE_TYPE_ERROR = "BaseTypeError"


@dataclass(frozen=True)
class AnalysisResult:
    ann_type: AnnType
    required: frozenset

    def report(self) -> str:
        return f"RESULT θ={pretty_type(self.ann_type)} pi={fmt_privset(self.required)}"


class AnalysisError(Exception):
    def __init__(self, kind: str, span, detail: str):
        self.kind = kind
        self.span = span
        self.detail = detail
        super().__init__(f"{kind} at {span or '?'}: {detail}")

    def report(self) -> str:
        return f"ERROR {self.kind} {self.span or '-'} {self.detail}"


def subtype(a: AnnType, b: AnnType) -> bool:
    if isinstance(a, BoolType) and isinstance(b, BoolType):
        return True
    if isinstance(a, AnnArrow) and isinstance(b, AnnArrow):
        return a.latent <= b.latent and subtype(b.param, a.param) and subtype(a.result, b.result)
    return False


def safe_for(result: AnalysisResult, P) -> bool:
    """True when ``P`` covers the required set, i.e. no check can fail."""
    return result.required <= frozenset(P)


def analyze(
    ctx: Optional[Mapping],
    n: str,
    e,
    acl: Acl,
    strict_letrec: bool = False,
) -> AnalysisResult:
    """Raise :class:`AnalysisError` when no derivation exists.

    With ``strict_letrec`` the body of a letrec must reproduce the declared
    result type and latent set exactly; by default subtyping and a smaller
    latent set are accepted.
    """
    ctx = dict(ctx or {})
    try:
        typecheck(ctx, e)
    except TypeCheckError as exc:
        raise AnalysisError(BASE_TYPE_ERROR, exc.span, str(exc)) from None
    theta, pi = _Analyzer(acl, strict_letrec).an(ctx, n, e)
    return AnalysisResult(theta, pi)


def best_effort(ctx: Mapping, n: str, e, acl: Acl) -> tuple:
    """Annotated type and requirement of a base-typable ``e``, without
    enforcing side conditions.

    Used to synthesize binder annotations: where the analysis would fail, the
    first alternative is taken and the walk carries on.
    """
    return _Analyzer(acl, False, lenient=True).an(dict(ctx), n, e)


class _Analyzer:
    def __init__(self, acl: Acl, strict_letrec: bool, lenient: bool = False):
        self.acl = acl
        self.strict = strict_letrec
        self.lenient = lenient

    def fail(self, kind, span, detail):
        if not self.lenient:
            raise AnalysisError(kind, span, detail)

    def an(self, ctx: dict, n: str, e):
        if isinstance(e, Lit):
            return BOOL, frozenset()
        if isinstance(e, Const):
            return builtins.builtin_type(e.name), frozenset()
        if isinstance(e, Var):
            return ctx[e.name], frozenset()
        if isinstance(e, Lam):
            body_t, body_pi = self.an({**ctx, e.param: e.param_ann}, n, e.body)
            return AnnArrow(e.param_ann, body_pi, body_t), frozenset()
        if isinstance(e, App):
            ft, pi1 = self.an(ctx, n, e.fn)
            at, pi2 = self.an(ctx, n, e.arg)
            assert isinstance(ft, AnnArrow)
            if not subtype(at, ft.param):
                self.fail(
                    SUBTYPE_FAILURE,
                    e.arg.span or e.span,
                    f"argument {pretty_type(at)} is not a subtype of {pretty_type(ft.param)}",
                )
            return ft.result, ft.latent | pi1 | pi2
        if isinstance(e, If):
            _, pi1 = self.an(ctx, n, e.cond)
            t2, pi2 = self.an(ctx, n, e.then)
            t3, pi3 = self.an(ctx, n, e.orelse)
            if t2 != t3:
                self.fail(
                    LATENT_MISMATCH, e.span, f"branches {pretty_type(t2)} and {pretty_type(t3)} differ"
                )
            return t2, pi1 | pi2 | pi3
        if isinstance(e, Test):
            t1, pi1 = self.an(ctx, n, e.then)
            t2, pi2 = self.an(ctx, n, e.orelse)
            if t1 != t2:
                self.fail(
                    LATENT_MISMATCH, e.span, f"branches {pretty_type(t1)} and {pretty_type(t2)} differ"
                )
            return t1, pi1 | pi2
        if isinstance(e, LetRec):
            decl = e.fann
            inner = {**ctx, e.fname: decl}
            body_t, body_pi = self.an({**inner, e.param: decl.param}, n, e.body)
            if self.strict:
                ok = body_t == decl.result and body_pi == decl.latent
            else:
                ok = subtype(body_t, decl.result) and body_pi <= decl.latent
            if not ok:
                self.fail(
                    LATENT_MISMATCH,
                    e.span,
                    f"body of {e.fname} has {pretty_type(body_t)} requiring {fmt_privset(body_pi)};"
                    f" declared {pretty_type(decl.result)} requiring {fmt_privset(decl.latent)}",
                )
            t, pi = self.an(inner, n, e.in_expr)
            return t, decl.latent | pi
        if isinstance(e, Check):
            t, pi = self.an(ctx, n, e.body)
            return t, pi | {e.privilege}
        if isinstance(e, DoPriv):
            t, pi = self.an(ctx, n, e.body)
            if e.privilege in self.acl[n]:
                pi = pi - {e.privilege}
            return t, pi
        if isinstance(e, Signs):
            t, pi = self.an(ctx, e.principal, e.body)
            allowed = self.acl[e.principal]
            if not pi <= allowed:
                self.fail(
                    SIGNS_SIDE_CONDITION,
                    e.span,
                    f"{fmt_privset(pi - allowed)} required but not authorized for {e.principal}",
                )
            return t, pi
        raise TypeError(f"not an expression: {e!r}")
