"""Abstract syntax of the security calculus: types, annotated types, expressions.

All nodes are frozen dataclasses.  Every expression node carries an optional
source ``span`` that is ignored by equality and hashing, so structurally equal
trees compare equal regardless of where they came from.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

KEYWORDS = frozenset(
    "true false if then else fn letrec in sign dopriv check test bool".split()
)


def is_identifier(name: str) -> bool:
    return bool(IDENT_RE.fullmatch(name)) and name not in KEYWORDS


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "bool"


BOOL = BoolType()


@dataclass(frozen=True)
class Arrow:
    param: "Type"
    result: "Type"

    def __str__(self) -> str:
        return pretty_type(self)


@dataclass(frozen=True)
class AnnArrow:
    """Arrow whose latent set lists privileges an application may require."""

    param: "AnnType"
    latent: frozenset
    result: "AnnType"

    def __post_init__(self):
        object.__setattr__(self, "latent", frozenset(self.latent))

    def __str__(self) -> str:
        return pretty_type(self)


Type = Union[BoolType, Arrow]
AnnType = Union[BoolType, AnnArrow]


def erase_ann(t: AnnType) -> Type:
    """Forget latent sets: ``(a -{P}-> b)`` becomes ``a -> b``."""
    if isinstance(t, AnnArrow):
        return Arrow(erase_ann(t.param), erase_ann(t.result))
    if isinstance(t, Arrow):
        return Arrow(erase_ann(t.param), erase_ann(t.result))
    return BOOL


def bare_ann(t: Type) -> AnnType:
    """Annotated type with every latent set empty."""
    if isinstance(t, (Arrow, AnnArrow)):
        return AnnArrow(bare_ann(t.param), frozenset(), bare_ann(t.result))
    return BOOL


def fmt_privset(ps) -> str:
    return "{" + ",".join(sorted(ps)) + "}"


def pretty_type(t) -> str:
    if isinstance(t, BoolType):
        return "bool"
    left = pretty_type(t.param)
    if not isinstance(t.param, BoolType):
        left = f"({left})"
    if isinstance(t, AnnArrow):
        return f"{left}-{fmt_privset(t.latent)}->{pretty_type(t.result)}"
    return f"{left} -> {pretty_type(t.result)}"


# --------------------------------------------------------------------------
# expressions


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    value: bool
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Const:
    """Builtin constant; quoted names are opaque bool-typed string literals."""

    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Lam:
    param: str
    param_ann: AnnType
    body: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class App:
    fn: "Expr"
    arg: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class LetRec:
    fname: str
    fann: AnnArrow
    param: str
    body: "Expr"
    in_expr: "Expr"
    span: Optional[Span] = _span()

    def __post_init__(self):
        if not isinstance(self.fann, AnnArrow):
            raise ValueError("letrec must declare an arrow type")


@dataclass(frozen=True)
class Signs:
    principal: str
    body: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class DoPriv:
    privilege: str
    body: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Check:
    privilege: str
    body: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Test:
    privilege: str
    then: "Expr"
    orelse: "Expr"
    span: Optional[Span] = _span()

    __test__ = False  # keep pytest from collecting this class


Expr = Union[Lit, Const, Var, If, Lam, App, LetRec, Signs, DoPriv, Check, Test]

TRUE = Lit(True)
FALSE = Lit(False)

# child field names per constructor, in evaluation / reading order
CHILDREN = {
    Lit: (),
    Const: (),
    Var: (),
    If: ("cond", "then", "orelse"),
    Lam: ("body",),
    App: ("fn", "arg"),
    LetRec: ("body", "in_expr"),
    Signs: ("body",),
    DoPriv: ("body",),
    Check: ("body",),
    Test: ("then", "orelse"),
}


def children(e: Expr) -> tuple:
    return tuple(getattr(e, f) for f in CHILDREN[type(e)])


def with_children(e: Expr, kids) -> Expr:
    names = CHILDREN[type(e)]
    return replace(e, **dict(zip(names, kids)))


def subterms(e: Expr) -> Iterator[Expr]:
    """Preorder traversal, the node itself first."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def positions(e: Expr, path: tuple = ()) -> Iterator[tuple]:
    """Yield ``(path, subterm)`` pairs in preorder; a path is a tuple of child indices."""
    yield path, e
    for i, kid in enumerate(children(e)):
        yield from positions(kid, path + (i,))


def at_path(e: Expr, path: tuple) -> Expr:
    for i in path:
        e = children(e)[i]
    return e


def replace_at(e: Expr, path: tuple, new: Expr) -> Expr:
    if not path:
        return new
    kids = list(children(e))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(e, kids)


def depth(e: Expr) -> int:
    """Height in edges: a leaf has depth 0."""
    kids = children(e)
    return 1 + max(depth(k) for k in kids) if kids else 0


def size(e: Expr) -> int:
    return sum(1 for _ in subterms(e))


# --------------------------------------------------------------------------
# syntactic predicates


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.param}
    if isinstance(e, LetRec):
        return (free_vars(e.body) - {e.fname, e.param}) | (free_vars(e.in_expr) - {e.fname})
    out = frozenset()
    for k in children(e):
        out |= free_vars(k)
    return out


def is_standard(e: Expr) -> bool:
    """Every function body (lambda or letrec) is a signed expression."""
    for node in subterms(e):
        if isinstance(node, (Lam, LetRec)) and not isinstance(node.body, Signs):
            return False
    return True


def is_p_pure(e: Expr, p: str) -> bool:
    """No ``check p`` and no ``test p`` anywhere in ``e``."""
    return not any(
        isinstance(node, (Check, Test)) and node.privilege == p for node in subterms(e)
    )


def is_test_free(e: Expr) -> bool:
    return not any(isinstance(node, Test) for node in subterms(e))


def is_value(e: Expr) -> bool:
    return isinstance(e, (Lit, Const, Var, Lam))


def _ann_privileges(t) -> set:
    if isinstance(t, AnnArrow):
        return set(t.latent) | _ann_privileges(t.param) | _ann_privileges(t.result)
    return set()


def privileges_of(e: Expr) -> frozenset:
    out = set()
    for node in subterms(e):
        if isinstance(node, (DoPriv, Check, Test)):
            out.add(node.privilege)
        elif isinstance(node, Lam):
            out |= _ann_privileges(node.param_ann)
        elif isinstance(node, LetRec):
            out |= _ann_privileges(node.fann)
    return frozenset(out)


def principals_of(e: Expr) -> frozenset:
    return frozenset(node.principal for node in subterms(e) if isinstance(node, Signs))


# --------------------------------------------------------------------------
# pretty printing (inverse of parser.parse_expr)

_EXPR, _APP, _ATOM = 0, 1, 2


def pretty(e: Expr) -> str:
    return _pp(e, _EXPR)


def _pp(e: Expr, level: int) -> str:
    if isinstance(e, Lit):
        return "true" if e.value else "false"
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Signs):
        return f"sign {e.principal} {{ {_pp(e.body, _EXPR)} }}"
    if isinstance(e, DoPriv):
        return f"dopriv {e.privilege} {{ {_pp(e.body, _EXPR)} }}"
    if isinstance(e, Check):
        return f"check {e.privilege} {{ {_pp(e.body, _EXPR)} }}"
    if isinstance(e, Test):
        return f"test {e.privilege} {{ {_pp(e.then, _EXPR)} }} else {{ {_pp(e.orelse, _EXPR)} }}"
    if isinstance(e, App):
        s = f"{_pp(e.fn, _APP)} {_pp(e.arg, _ATOM)}"
        return f"({s})" if level >= _ATOM else s
    if isinstance(e, If):
        s = f"if {_pp(e.cond, _EXPR)} then {_pp(e.then, _EXPR)} else {_pp(e.orelse, _EXPR)}"
    elif isinstance(e, Lam):
        s = f"fn {e.param}:{pretty_type(e.param_ann)} => {_pp(e.body, _EXPR)}"
    elif isinstance(e, LetRec):
        t = e.fann
        s = (
            f"letrec {e.fname} ({e.param}:{pretty_type(t.param)}):{pretty_type(t.result)}"
            f" !{fmt_privset(t.latent)} = {_pp(e.body, _EXPR)} in {_pp(e.in_expr, _EXPR)}"
        )
    else:  # pragma: no cover
        raise TypeError(f"not an expression: {e!r}")
    return f"({s})" if level > _EXPR else s
