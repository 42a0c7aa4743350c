"""Source-to-source transformations that hoist, commute and eliminate checks.

Each rule is a partial function on the root of an expression: it returns the
rewritten expression, or ``None`` when the node does not match or a side
condition fails.  Drivers apply rules leftmost-outermost to a fixed point and
record a :class:`RewriteTrace`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .acl import Acl
from .syntax import (
    App,
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
    at_path,
    children,
    free_vars,
    is_p_pure,
    pretty,
    replace_at,
    subterms,
    with_children,
)

UNCONDITIONAL = "unconditional"
RESTRICTED = "restricted-to-acl"  # valid only for privilege sets P ⊆ acl[n]

MAX_STEPS = 10_000


class EraseError(Exception):
    pass


class RewriteLimitExceeded(RuntimeError):
    """The step bound was hit; a rule set that loops is a defect."""


@dataclass(frozen=True)
class RewriteRule:
    name: str
    apply: Callable[..., Optional[object]]
    equality_mode: str = UNCONDITIONAL
    # rule would turn a signed function body into an unsigned one
    breaks_fn_body: bool = False

    def __call__(self, e, acl: Optional[Acl] = None):
        return self.apply(e, acl)


@dataclass(frozen=True)
class Step:
    rule: str
    path: tuple
    span: object
    before: str
    after: str
    result: object = field(repr=False, compare=False)

    def line(self) -> str:
        return f"RULE {self.rule} @{self.span or '/'.join(map(str, self.path)) or 'root'}"


@dataclass
class RewriteTrace:
    steps: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @property
    def rule_names(self) -> list:
        return [s.rule for s in self.steps]

    def lines(self) -> list:
        return [s.line() for s in self.steps]

    def replay(self, original):
        e = original
        for s in self.steps:
            if pretty(at_path(e, s.path)) != s.before:
                raise ValueError(f"trace does not match input at step {s.line()}")
            e = replace_at(e, s.path, s.result)
        return e


# --------------------------------------------------------------------------
# helpers


def is_std_value(e) -> bool:
    """Syntactic value whose meaning does not depend on the current principal."""
    if isinstance(e, (Lit, Const, Var)):
        return True
    return isinstance(e, Lam) and isinstance(e.body, Signs)


def _fresh(base: str, avoid: set) -> str:
    for k in itertools.count(1):
        name = f"{base}_{k}"
        if name not in avoid:
            return name


def _all_names(e) -> set:
    out = set()
    for node in subterms(e):
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Lam):
            out.add(node.param)
        elif isinstance(node, LetRec):
            out |= {node.fname, node.param}
    return out


def rename(e, old: str, new: str):
    return subst(e, old, Var(new))


def subst(e, x: str, v):
    """Capture-avoiding substitution ``e[v/x]``."""
    fv = free_vars(v)
    avoid = set(fv) | _all_names(e) | _all_names(v)

    def go(e):
        if isinstance(e, Var):
            return v if e.name == x else e
        if isinstance(e, Lam):
            if e.param == x:
                return e
            param, body = e.param, e.body
            if param in fv:
                param = _fresh(param, avoid)
                avoid.add(param)
                body = rename(body, e.param, param)
            return Lam(param, e.param_ann, go(body), span=e.span)
        if isinstance(e, LetRec):
            if e.fname == x:
                return e
            fname, param, body, rest = e.fname, e.param, e.body, e.in_expr
            if fname in fv:
                fname = _fresh(fname, avoid)
                avoid.add(fname)
                body = rename(body, e.fname, fname) if e.param != e.fname else body
                rest = rename(rest, e.fname, fname)
            if param in fv:
                new_param = _fresh(param, avoid)
                avoid.add(new_param)
                body = rename(body, param, new_param)
                param = new_param
            if param != x:
                body = go(body)
            return LetRec(fname, e.fann, param, body, go(rest), span=e.span)
        kids = children(e)
        if not kids:
            return e
        return with_children(e, [go(k) for k in kids])

    return go(e)


# --------------------------------------------------------------------------
# check hoisting (all unconditional)


def _if_hoist(e, acl=None):
    if (
        isinstance(e, If)
        and isinstance(e.then, Check)
        and isinstance(e.orelse, Check)
        and e.then.privilege == e.orelse.privilege
    ):
        p = e.then.privilege
        return Check(p, If(e.cond, e.then.body, e.orelse.body, span=e.span), span=e.span)
    return None


def _app_hoist(e, acl=None, unrestricted: bool = False):
    if isinstance(e, App) and isinstance(e.arg, Check):
        if unrestricted or is_std_value(e.fn) or isinstance(e.fn, Lam):
            p = e.arg.privilege
            return Check(p, App(e.fn, e.arg.body, span=e.span), span=e.span)
    return None


def _test_else_hoist(e, acl=None):
    if isinstance(e, Test) and isinstance(e.orelse, Check) and e.orelse.privilege == e.privilege:
        p = e.privilege
        return Check(p, Test(p, e.then, e.orelse.body, span=e.span), span=e.span)
    return None


def _test_both_hoist(e, acl=None):
    if (
        isinstance(e, Test)
        and isinstance(e.then, Check)
        and isinstance(e.orelse, Check)
        and e.then.privilege == e.orelse.privilege
    ):
        p = e.then.privilege
        return Check(p, Test(e.privilege, e.then.body, e.orelse.body, span=e.span), span=e.span)
    return None


def _letrec_hoist(e, acl=None):
    if isinstance(e, LetRec) and isinstance(e.in_expr, Check):
        p = e.in_expr.privilege
        inner = LetRec(e.fname, e.fann, e.param, e.body, e.in_expr.body, span=e.span)
        return Check(p, inner, span=e.span)
    return None


def _check_check(e, acl=None):
    if isinstance(e, Check) and isinstance(e.body, Check) and e.body.privilege == e.privilege:
        return e.body
    return None


IF_HOIST = RewriteRule("if-hoist", _if_hoist)
APP_HOIST = RewriteRule("app-hoist", _app_hoist)
APP_HOIST_ANY = RewriteRule("app-hoist-any", lambda e, acl=None: _app_hoist(e, acl, unrestricted=True))
TEST_ELSE_HOIST = RewriteRule("test-else-hoist", _test_else_hoist)
TEST_BOTH_HOIST = RewriteRule("test-both-hoist", _test_both_hoist)
LETREC_HOIST = RewriteRule("letrec-hoist", _letrec_hoist)
CHECK_CHECK = RewriteRule("check-check", _check_check)

HOIST_RULES = (IF_HOIST, APP_HOIST, TEST_ELSE_HOIST, TEST_BOTH_HOIST, LETREC_HOIST, CHECK_CHECK)


# --------------------------------------------------------------------------
# conditional rules


def elim_privileged_check(e, acl: Acl):
    """``sign n { dopriv p { check p { e } } }`` to ``sign n { e }``.

    Requires ``p`` authorized for ``n`` and ``e`` closed and free of
    ``check p``/``test p``.
    """
    if not (isinstance(e, Signs) and isinstance(e.body, DoPriv) and isinstance(e.body.body, Check)):
        return None
    p = e.body.privilege
    chk = e.body.body
    if chk.privilege != p or p not in acl[e.principal]:
        return None
    body = chk.body
    if free_vars(body) or not is_p_pure(body, p):
        return None
    return Signs(e.principal, body, span=e.span)


def commute_check_signs(e, acl: Acl, outward: bool = True):
    """Swap ``sign n`` and ``check p`` when ``p`` is authorized for ``n``.

    ``outward`` moves the check above the signature; otherwise below it.
    """
    if outward:
        if isinstance(e, Signs) and isinstance(e.body, Check):
            n, p = e.principal, e.body.privilege
            if p in acl[n]:
                return Check(p, Signs(n, e.body.body, span=e.span), span=e.span)
        return None
    if isinstance(e, Check) and isinstance(e.body, Signs):
        n, p = e.body.principal, e.privilege
        if p in acl[n]:
            return Signs(n, Check(p, e.body.body, span=e.span), span=e.span)
    return None


def _collapse_once(e, acl=None):
    if isinstance(e, Signs) and isinstance(e.body, Signs) and e.body.principal == e.principal:
        return e.body
    return None


def test_grant(e, acl=None, reverse: bool = False):
    """``test p {a} else {b}`` to ``test p { dopriv p {a} } else {b}`` (or back).

    Sound only for privilege sets contained in the current principal's grants.
    """
    if not isinstance(e, Test):
        return None
    p = e.privilege
    if reverse:
        if isinstance(e.then, DoPriv) and e.then.privilege == p:
            return Test(p, e.then.body, e.orelse, span=e.span)
        return None
    return Test(p, DoPriv(p, e.then, span=e.span), e.orelse, span=e.span)


def drop_tail_frame(e, acl: Acl):
    """``sign n2 { (fn x => sign n1 {b}) v }`` to ``(fn x => sign n1 {b}) v``.

    Requires ``acl[n1] ⊆ acl[n2]`` and ``v`` a value that does not capture
    the current principal (a literal, constant, variable or signed lambda).
    """
    if not (isinstance(e, Signs) and isinstance(e.body, App)):
        return None
    app = e.body
    fn = app.fn
    if not (isinstance(fn, Lam) and isinstance(fn.body, Signs)):
        return None
    if not acl[fn.body.principal] <= acl[e.principal]:
        return None
    if not is_std_value(app.arg):
        return None
    return app


def beta(e, acl=None):
    """Apply a lambda to a principal-independent value by substitution."""
    if isinstance(e, App) and isinstance(e.fn, Lam) and is_std_value(e.arg):
        return subst(e.fn.body, e.fn.param, e.arg)
    return None


ELIM = RewriteRule("elim-check", elim_privileged_check)
COMMUTE_OUT = RewriteRule(
    "commute-check-signs", lambda e, acl: commute_check_signs(e, acl, True), breaks_fn_body=True
)
COMMUTE_IN = RewriteRule("commute-signs-check", lambda e, acl: commute_check_signs(e, acl, False))
COLLAPSE = RewriteRule("collapse-signs", _collapse_once)
TEST_GRANT = RewriteRule("test-grant", test_grant, equality_mode=RESTRICTED)
TEST_GRANT_REV = RewriteRule(
    "test-grant-rev", lambda e, acl=None: test_grant(e, acl, reverse=True), equality_mode=RESTRICTED
)
DROP_TAIL = RewriteRule("drop-tail-frame", drop_tail_frame)
BETA = RewriteRule("beta", beta)

RULES = {
    r.name: r
    for r in HOIST_RULES
    + (APP_HOIST_ANY, ELIM, COMMUTE_OUT, COMMUTE_IN, COLLAPSE, TEST_GRANT, TEST_GRANT_REV, DROP_TAIL, BETA)
}


# --------------------------------------------------------------------------
# drivers


def _walk(e, path=(), fn_body=False):
    yield path, e, fn_body
    for i, kid in enumerate(children(e)):
        kid_is_body = isinstance(e, (Lam, LetRec)) and i == 0
        yield from _walk(kid, path + (i,), kid_is_body)


def rewrite_fixpoint(e, rules: Sequence[RewriteRule], acl: Optional[Acl] = None, max_steps: int = MAX_STEPS):
    """Apply ``rules`` leftmost-outermost until none matches."""
    trace = RewriteTrace()
    for _ in range(max_steps):
        for path, node, fn_body in _walk(e):
            fired = None
            for rule in rules:
                if fn_body and rule.breaks_fn_body:
                    continue
                out = rule.apply(node, acl)
                if out is not None:
                    fired = (rule, out)
                    break
            if fired:
                rule, out = fired
                trace.steps.append(Step(rule.name, path, node.span, pretty(node), pretty(out), out))
                e = replace_at(e, path, out)
                break
        else:
            return e, trace
    raise RewriteLimitExceeded(f"no fixed point after {max_steps} steps")


def hoist_checks(e, unrestricted_app: bool = False):
    rules = list(HOIST_RULES)
    if unrestricted_app:
        rules[1] = APP_HOIST_ANY
    return rewrite_fixpoint(e, rules)


def collapse_signs(e):
    return rewrite_fixpoint(e, [COLLAPSE])[0]


OPTIMIZE_RULES = HOIST_RULES + (BETA, COMMUTE_OUT, COLLAPSE, ELIM)


def optimize(e, acl: Acl, max_steps: int = MAX_STEPS):
    """Hoist checks outward, unfold applications of lambdas to values, move
    checks above signatures, collapse repeated signatures and eliminate checks
    made redundant by an authorized ``dopriv``, to a fixed point."""
    return rewrite_fixpoint(e, OPTIMIZE_RULES, acl, max_steps)


def erase_security(e):
    """Drop every ``dopriv`` and ``check``; ``test`` has no erasure."""
    if isinstance(e, Test):
        raise EraseError(f"test {e.privilege} at {e.span or '?'} cannot be erased")
    if isinstance(e, (DoPriv, Check)):
        return erase_security(e.body)
    kids = children(e)
    if not kids:
        return e
    return with_children(e, [erase_security(k) for k in kids])
