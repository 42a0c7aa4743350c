"""Evaluation outcomes shared by both interpreters, plus fuel accounting.

An outcome is a value, the security error, or fuel exhaustion.  Fuel
exhaustion is the finite stand-in for divergence: both interpreters spend
exactly one unit per closure invocation, so their outcomes are comparable.
"""
from __future__ import annotations

import functools
import sys
import threading
from dataclasses import dataclass
from typing import Any, Callable

VALUE, SECURITY_ERROR, FUEL_OUT = "value", "security-error", "fuel-out"


@dataclass(frozen=True)
class Outcome:
    kind: str
    value: Any = None

    @property
    def is_value(self) -> bool:
        return self.kind == VALUE

    @property
    def is_error(self) -> bool:
        return self.kind == SECURITY_ERROR

    @property
    def is_fuel_out(self) -> bool:
        return self.kind == FUEL_OUT

    def __str__(self) -> str:
        if self.kind == VALUE:
            v = self.value
            return ("true" if v else "false") if isinstance(v, bool) else "<function>"
        return "SecurityError" if self.kind == SECURITY_ERROR else "FuelOut"


def Val(v) -> Outcome:
    return Outcome(VALUE, v)


STAR = Outcome(SECURITY_ERROR)
FUELOUT = Outcome(FUEL_OUT)


def same_outcome(a: Outcome, b: Outcome) -> bool:
    """Equality of outcomes; function values are never considered equal."""
    if a.kind != b.kind:
        return False
    if a.kind != VALUE:
        return True
    return isinstance(a.value, bool) and isinstance(b.value, bool) and a.value == b.value


class SecurityFault(Exception):
    """Raised inside an evaluator when a check fails."""


class OutOfFuel(Exception):
    """Raised inside an evaluator when a closure is invoked with no fuel left."""


class Fuel:
    __slots__ = ("remaining",)

    def __init__(self, amount: int):
        if amount < 0:
            raise ValueError("fuel must be non-negative")
        self.remaining = amount

    def spend(self):
        if self.remaining <= 0:
            raise OutOfFuel
        self.remaining -= 1


# Python frames per closure invocation is small and bounded; this budget is
# generous enough for any fuel used by the tools.
_FRAMES_PER_FUEL = 12
_STACK_BYTES = 512 * 1024 * 1024
_DRIVER_FUEL = 100_000
_local = threading.local()


def run_deep(thunk: Callable[[], Any], fuel: int = 0):
    """Call ``thunk()`` where deep Python recursion is safe.

    Evaluators recurse on the expression and on every closure invocation.  A
    divergent program can nest thousands of invocations before its fuel runs
    out, which overflows the default interpreter and C stacks.  Work is moved
    to a thread with a large stack unless the caller is already on one.
    """
    needed = 1000 + _FRAMES_PER_FUEL * fuel
    if getattr(_local, "deep", False):
        if needed > sys.getrecursionlimit():
            sys.setrecursionlimit(needed)
        return thunk()
    box: dict = {}
    # the limit is process-wide; put it back afterwards for callers that track it
    saved = sys.getrecursionlimit()
    if needed > saved:
        sys.setrecursionlimit(needed)

    def worker():
        _local.deep = True
        try:
            box["result"] = thunk()
        except BaseException as exc:  # re-raised in the caller's thread
            box["error"] = exc

    old = threading.stack_size()
    threading.stack_size(_STACK_BYTES)
    try:
        t = threading.Thread(target=worker)
        t.start()
    finally:
        threading.stack_size(old)
    t.join()
    sys.setrecursionlimit(saved)
    if "error" in box:
        raise box["error"]
    return box["result"]


def deep(fn: Callable) -> Callable:
    """Run every call of ``fn`` on a large stack (for drivers doing many evaluations)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return run_deep(lambda: fn(*args, **kwargs), fuel=_DRIVER_FUEL)

    return wrapper
