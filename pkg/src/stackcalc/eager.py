"""Eager semantics: evaluation under a current principal and privilege set.

Functions denote maps from a privilege set and an argument to a result, so a
closure captures its defining principal and environment but takes the
privilege set from its caller.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import builtins
from .acl import Acl
from .outcome import FUELOUT, STAR, Fuel, OutOfFuel, Outcome, SecurityFault, Val, run_deep
from .syntax import App, Check, Const, DoPriv, If, Lam, LetRec, Lit, Signs, Test, Var


@dataclass(frozen=True, eq=False)
class ClosureE:
    owner: str
    env: Mapping
    param: str
    body: object
    self_name: Optional[str] = None

    def __repr__(self) -> str:
        tag = f" {self.self_name}" if self.self_name else ""
        return f"<closure{tag} \\{self.param} @{self.owner}>"


def join_priv(P: frozenset, n: str, p: str, acl: Acl) -> frozenset:
    """``P`` plus ``p`` when ``n`` is authorized for ``p``, otherwise ``P``."""
    return P | {p} if p in acl[n] else P


def eval_eager(e, n: str, P, env: Optional[Mapping], acl: Acl, fuel: int) -> Outcome:
    ev = _Eager(acl, Fuel(fuel))
    P = frozenset(P)
    env = dict(env or {})
    return run_deep(lambda: ev.run(e, n, P, env), fuel=fuel)


def apply_eager(f, P, arg, acl: Acl, fuel: int) -> Outcome:
    """Invoke a function value ``f`` with privilege set ``P``."""
    ev = _Eager(acl, Fuel(fuel))
    P = frozenset(P)

    def go():
        try:
            return Val(ev.apply(f, P, arg))
        except SecurityFault:
            return STAR
        except OutOfFuel:
            return FUELOUT

    return run_deep(go, fuel=fuel)


class _Eager:
    def __init__(self, acl: Acl, fuel: Fuel):
        self.acl = acl
        self.fuel = fuel

    def run(self, e, n, P, env) -> Outcome:
        try:
            return Val(self.ev(e, n, P, env))
        except SecurityFault:
            return STAR
        except OutOfFuel:
            return FUELOUT

    def apply(self, f, P, d):
        if isinstance(f, builtins.Prim):
            return f.apply(d)
        self.fuel.spend()
        env = dict(f.env)
        if f.self_name is not None:
            env[f.self_name] = f
        env[f.param] = d
        return self.ev(f.body, f.owner, P, env)

    def ev(self, e, n, P, env):
        t = type(e)
        if t is Lit:
            return e.value
        if t is Var:
            return env[e.name]
        if t is Const:
            return builtins.builtin_value(e.name)
        if t is If:
            if self.ev(e.cond, n, P, env):
                return self.ev(e.then, n, P, env)
            return self.ev(e.orelse, n, P, env)
        if t is Lam:
            return ClosureE(n, env, e.param, e.body)
        if t is App:
            f = self.ev(e.fn, n, P, env)
            d = self.ev(e.arg, n, P, env)
            return self.apply(f, P, d)
        if t is LetRec:
            clo = ClosureE(n, env, e.param, e.body, self_name=e.fname)
            return self.ev(e.in_expr, n, P, {**env, e.fname: clo})
        if t is Signs:
            return self.ev(e.body, e.principal, P & self.acl[e.principal], env)
        if t is DoPriv:
            return self.ev(e.body, n, join_priv(P, n, e.privilege, self.acl), env)
        if t is Check:
            if e.privilege not in P:
                raise SecurityFault
            return self.ev(e.body, n, P, env)
        if t is Test:
            if e.privilege in P:
                return self.ev(e.then, n, P, env)
            return self.ev(e.orelse, n, P, env)
        raise TypeError(f"not an expression: {e!r}")
