"""Builtin constants.

Strings are not a type in the calculus; a quoted literal such as
``"/etc/password"`` is an opaque ``bool`` constant whose value is ``true``.
Builtin functions are pure and ignore the principal, the privilege set and
the stack, so they are safe and p-pure for every p.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .syntax import BOOL, AnnArrow, AnnType


@dataclass(frozen=True, eq=False)
class Prim:
    """A (possibly partially applied) builtin function value."""

    name: str
    arity: int
    fn: Callable
    args: tuple = ()

    def apply(self, arg):
        args = self.args + (arg,)
        if len(args) == self.arity:
            return self.fn(*args)
        return Prim(self.name, self.arity, self.fn, args)

    def __repr__(self) -> str:
        return f"<builtin {self.name}/{self.arity}{' ' + str(self.args) if self.args else ''}>"


def _arrows(n: int) -> AnnType:
    t: AnnType = BOOL
    for _ in range(n):
        t = AnnArrow(BOOL, frozenset(), t)
    return t


# name -> (arity, implementation); arity 0 means a plain bool constant
_TABLE = {
    "hwWrite": (2, lambda data, path: True),
    "not": (1, lambda b: not b),
    "and": (2, lambda a, b: a and b),
    "or": (2, lambda a, b: a or b),
}


def is_string_literal(name: str) -> bool:
    return len(name) >= 2 and name[0] == name[-1] == '"'


def is_builtin(name: str) -> bool:
    return name in _TABLE or is_string_literal(name)


def builtin_type(name: str) -> AnnType:
    if is_string_literal(name):
        return BOOL
    arity, _ = _TABLE[name]
    return _arrows(arity)


def builtin_value(name: str):
    if is_string_literal(name):
        return True
    arity, fn = _TABLE[name]
    return Prim(name, arity, fn)


def builtin_names() -> frozenset:
    return frozenset(_TABLE)
