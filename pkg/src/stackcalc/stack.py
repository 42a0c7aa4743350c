"""Lazy stack-inspection semantics.

Evaluation threads an explicit stack of ``Frame(owner, enabled)``.  ``sign``
pushes a frame, ``dopriv`` enables a privilege in the top frame (whether or
not the owner is authorized for it), and ``check``/``test`` walk the stack.
Closures carry no principal; they run on the caller's stack.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from . import builtins
from .acl import Acl
from .outcome import FUELOUT, STAR, Fuel, OutOfFuel, Outcome, SecurityFault, Val, run_deep
from .syntax import App, Check, Const, DoPriv, If, Lam, LetRec, Lit, Signs, Test, Var


@dataclass(frozen=True)
class Frame:
    owner: str
    enabled: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "enabled", frozenset(self.enabled))

    def __str__(self) -> str:
        return f"<{self.owner},{{{','.join(sorted(self.enabled))}}}>"


@dataclass(frozen=True, eq=False)
class ClosureS:
    env: Mapping
    param: str
    body: object
    self_name: Optional[str] = None

    def __repr__(self) -> str:
        tag = f" {self.self_name}" if self.self_name else ""
        return f"<stack-closure{tag} \\{self.param}>"


# Internally a stack is a cons list: (frame, rest) with rest None at the bottom.


def _cons(frames: Sequence[Frame]):
    s = None
    for f in reversed(list(frames)):
        s = (f, s)
    return s


def _frames(s) -> tuple:
    out = []
    while s is not None:
        out.append(s[0])
        s = s[1]
    return tuple(out)


def _check(p: str, s, acl: Acl) -> bool:
    while s is not None:
        frame = s[0]
        if p not in acl[frame.owner]:
            return False
        if p in frame.enabled:
            return True
        s = s[1]
    return False


def check_pred(p: str, stack: Sequence[Frame], acl: Acl) -> bool:
    """Stack inspection: some frame enables ``p`` and it and every frame above
    it (toward the top) is owned by a principal authorized for ``p``."""
    return _check(p, _cons(stack), acl)


def privs(stack: Sequence[Frame], acl: Acl, universe: Optional[Iterable[str]] = None) -> frozenset:
    """Privileges granted by ``stack``; the universe defaults to everything
    mentioned in the ACL or enabled somewhere on the stack."""
    if not stack:
        raise ValueError("privs is defined on nonempty stacks only")
    if universe is None:
        universe = set(acl.privileges)
        for f in stack:
            universe |= f.enabled
    s = _cons(stack)
    return frozenset(p for p in universe if _check(p, s, acl))


def format_stack(stack: Sequence[Frame]) -> str:
    return "::".join(str(f) for f in stack) + "::nil"


def eval_stack(e, stack: Sequence[Frame], env: Optional[Mapping], acl: Acl, fuel: int) -> Outcome:
    if not stack:
        raise ValueError("evaluation needs a nonempty stack")
    ev = _Stack(acl, Fuel(fuel))
    s = _cons(stack)
    env = dict(env or {})
    return run_deep(lambda: ev.run(e, s, env), fuel=fuel)


class _Stack:
    def __init__(self, acl: Acl, fuel: Fuel):
        self.acl = acl
        self.fuel = fuel

    def run(self, e, s, env) -> Outcome:
        try:
            return Val(self.ev(e, s, env))
        except SecurityFault:
            return STAR
        except OutOfFuel:
            return FUELOUT

    def apply(self, f, s, d):
        if isinstance(f, builtins.Prim):
            return f.apply(d)
        self.fuel.spend()
        env = dict(f.env)
        if f.self_name is not None:
            env[f.self_name] = f
        env[f.param] = d
        return self.ev(f.body, s, env)

    def ev(self, e, s, env):
        t = type(e)
        if t is Lit:
            return e.value
        if t is Var:
            return env[e.name]
        if t is Const:
            return builtins.builtin_value(e.name)
        if t is If:
            if self.ev(e.cond, s, env):
                return self.ev(e.then, s, env)
            return self.ev(e.orelse, s, env)
        if t is Lam:
            return ClosureS(env, e.param, e.body)
        if t is App:
            f = self.ev(e.fn, s, env)
            d = self.ev(e.arg, s, env)
            return self.apply(f, s, d)
        if t is LetRec:
            clo = ClosureS(env, e.param, e.body, self_name=e.fname)
            return self.ev(e.in_expr, s, {**env, e.fname: clo})
        if t is Signs:
            return self.ev(e.body, (Frame(e.principal), s), env)
        if t is DoPriv:
            top, rest = s
            return self.ev(e.body, (Frame(top.owner, top.enabled | {e.privilege}), rest), env)
        if t is Check:
            if not _check(e.privilege, s, self.acl):
                raise SecurityFault
            return self.ev(e.body, s, env)
        if t is Test:
            if _check(e.privilege, s, self.acl):
                return self.ev(e.then, s, env)
            return self.ev(e.orelse, s, env)
        raise TypeError(f"not an expression: {e!r}")
