"""Random well-typed programs and differential oracles.

The oracles compare outcomes only: the eager and stack interpreters against
each other, the two sides of a rewrite across every principal and privilege
set, a program against its erasure, and analysis verdicts against execution.
A fuel exhaustion on either side makes a comparison inconclusive, never a
failure.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

from . import builtins
from .acl import Acl
from .analysis import AnalysisError, analyze, best_effort
from .eager import eval_eager
from .outcome import deep, same_outcome
from .rewrite import RESTRICTED, RULES, UNCONDITIONAL, erase_security
from .stack import Frame, eval_stack, format_stack, privs
from .syntax import (
    BOOL,
    AnnArrow,
    Arrow,
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
    children,
    erase_ann,
    free_vars,
    is_standard,
    positions,
    pretty,
    principals_of,
    privileges_of,
    replace_at,
)
from .typecheck import TypeCheckError, typecheck

BB = Arrow(BOOL, BOOL)
BBB = Arrow(BOOL, BB)
TYPE_POOL = (BOOL, BOOL, BOOL, BB, BB, BBB, Arrow(BB, BOOL), Arrow(BOOL, BB), Arrow(BB, BB))

# Builtin functions by base type; strings are left out of generated programs.
_BUILTINS_BY_TYPE: dict = {}
for _name in sorted(builtins.builtin_names()):
    _BUILTINS_BY_TYPE.setdefault(erase_ann(builtins.builtin_type(_name)), []).append(_name)


@dataclass
class GenConfig:
    max_depth: int = 6
    n_principals: int = 3
    n_privileges: int = 4
    standard_only: bool = True
    test_free_only: bool = False
    seed: int = 0
    fuel: int = 10_000
    # chance that a recursive call is left unguarded (may diverge)
    diverge_rate: float = 0.02
    # probability that a principal is authorized for a given privilege
    acl_density: float = 0.5
    # explicit universes (e.g. taken from an ACL file) override the counts
    principal_names: tuple = ()
    privilege_names: tuple = ()

    def __post_init__(self):
        if self.principal_names:
            self.n_principals = len(self.principal_names)
        if self.privilege_names:
            self.n_privileges = len(self.privilege_names)
        if self.max_depth < 0 or self.n_principals < 1 or self.n_privileges < 1:
            raise ValueError("depth must be non-negative and universes nonempty")
        if self.n_privileges > 10:
            raise ValueError("at most 10 privileges keep exhaustive sweeps within 1024 sets")
        if self.fuel < 1:
            raise ValueError("fuel must be positive")

    @property
    def principals(self) -> tuple:
        return tuple(self.principal_names) or tuple(f"n{i}" for i in range(self.n_principals))

    @property
    def privileges(self) -> tuple:
        return tuple(self.privilege_names) or tuple(f"p{i}" for i in range(self.n_privileges))


def case_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


def random_acl(cfg: GenConfig, rng: random.Random) -> Acl:
    return Acl(
        {n: frozenset(p for p in cfg.privileges if rng.random() < cfg.acl_density) for n in cfg.principals}
    )


def powerset(items: Iterable) -> Iterator[frozenset]:
    items = sorted(items)
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield frozenset(combo)


# --------------------------------------------------------------------------
# generation


class _Gen:
    """Type-directed generator.  ``gen(ctx, t, d)`` builds a term of base type
    ``t`` with at most ``d`` levels below its root; callers only ask for types
    whose :meth:`floor` fits the budget.  ``ctx`` maps names to
    ``(annotated type, guard)`` where a non-None guard marks a recursive
    function that may only be called from its guarded branch."""

    def __init__(self, cfg: GenConfig, rng: random.Random, acl: Acl):
        self.cfg = cfg
        self.rng = rng
        self.acl = acl
        self.counter = itertools.count()
        self.principals = cfg.principals
        self.privileges = cfg.privileges
        self.std = int(cfg.standard_only)

    def fresh(self, base: str) -> str:
        return f"{base}{next(self.counter)}"

    def latent(self) -> frozenset:
        return frozenset(p for p in self.privileges if self.rng.random() < 0.4)

    def annotate(self, t):
        if isinstance(t, Arrow):
            return AnnArrow(self.annotate(t.param), self.latent(), self.annotate(t.result))
        return BOOL

    def vars_of(self, t, ctx) -> list:
        return [x for x, (ann, guard) in ctx.items() if guard is None and erase_ann(ann) == t]

    def lam_floor(self, t) -> int:
        return 1 + self.std + self.floor(t.result, {})

    def floor(self, t, ctx) -> int:
        """Smallest budget at which a term of type ``t`` can be built."""
        if isinstance(t, BoolType) or t in _BUILTINS_BY_TYPE or self.vars_of(t, ctx):
            return 0
        return self.lam_floor(t)

    def pick(self, weighted):
        options = [(w, f) for w, f in weighted if w > 0]
        r = self.rng.random() * sum(w for w, _ in options)
        for w, f in options:
            r -= w
            if r < 0:
                return f
        return options[-1][1]

    def gen(self, ctx: dict, t, d: int):
        if d <= 0:
            return self.leaf(ctx, t)
        rng = self.rng
        is_bool = isinstance(t, BoolType)
        sub_ok = self.floor(t, ctx) <= d - 1
        vs = self.vars_of(t, ctx)
        rec = [x for x, (ann, guard) in ctx.items() if guard is not None and erase_ann(ann).result == t]
        wrap = 1.5 if sub_ok else 0.0
        choices = [
            (1.0 if is_bool else 0.0, lambda: self.leaf(ctx, t)),
            (2.0 if vs else 0.0, lambda: Var(rng.choice(vs))),
            ((2.0 if is_bool else 0.5) * sub_ok, lambda: self.gen_if(ctx, t, d)),
            (3.0 if is_bool else 1.0, lambda: self.gen_app(ctx, t, d)),
            (3.0 if rec else 0.0, lambda: self.gen_rec_call(ctx, rec)),
            (wrap, lambda: Signs(rng.choice(self.principals), self.gen(ctx, t, d - 1))),
            (wrap, lambda: DoPriv(rng.choice(self.privileges), self.gen(ctx, t, d - 1))),
            (wrap, lambda: Check(rng.choice(self.privileges), self.gen(ctx, t, d - 1))),
            (
                0.0 if self.cfg.test_free_only else (1.0 if is_bool else 0.3) * sub_ok,
                lambda: Test(rng.choice(self.privileges), self.gen(ctx, t, d - 1), self.gen(ctx, t, d - 1)),
            ),
            (3.0 if not is_bool and self.lam_floor(t) <= d else 0.0, lambda: self.gen_lam(ctx, t, d)),
            (0.6 if sub_ok and d >= 3 + self.std else 0.0, lambda: self.gen_letrec(ctx, t, d)),
            (1.0 if t in _BUILTINS_BY_TYPE else 0.0, lambda: Const(rng.choice(_BUILTINS_BY_TYPE[t]))),
        ]
        return self.pick(choices)()

    def leaf(self, ctx, t):
        vs = self.vars_of(t, ctx)
        if isinstance(t, BoolType):
            if vs and self.rng.random() < 0.5:
                return Var(self.rng.choice(vs))
            return Lit(self.rng.random() < 0.5)
        opts = [Var(x) for x in vs] + [Const(c) for c in _BUILTINS_BY_TYPE.get(t, ())]
        if opts:
            return self.rng.choice(opts)
        return self.gen_lam(ctx, t, self.lam_floor(t))

    def gen_if(self, ctx, t, d):
        return If(self.gen(ctx, BOOL, d - 1), self.gen(ctx, t, d - 1), self.gen(ctx, t, d - 1))

    def gen_app(self, ctx, t, d):
        fits = [s for s in TYPE_POOL if max(self.floor(Arrow(s, t), ctx), self.floor(s, ctx)) <= d - 1]
        if not fits:
            return self.leaf(ctx, t)
        s = self.rng.choice(fits)
        return App(self.gen(ctx, Arrow(s, t), d - 1), self.gen(ctx, s, d - 1))

    def gen_rec_call(self, ctx, rec):
        f = self.rng.choice(rec)
        guard = ctx[f][1]
        arg = Var(guard) if self.rng.random() < self.cfg.diverge_rate else Lit(False)
        return App(Var(f), arg)

    def gen_lam(self, ctx, t, d):
        x = self.fresh("x")
        ann = self.annotate(t.param)
        inner = {**ctx, x: (ann, None)}
        if self.std:
            body = Signs(self.rng.choice(self.principals), self.gen(inner, t.result, d - 2))
        else:
            body = self.gen(inner, t.result, d - 1)
        return Lam(x, ann, body)

    def gen_letrec(self, ctx, t, d):
        """``letrec f (x:bool) = sign n { if x then <may call f false> else <no f> } in ...``.

        Recursive calls pass ``false``, so call chains have length at most
        two; with probability ``diverge_rate`` a call passes ``x`` instead and
        may loop.
        """
        f, x = self.fresh("f"), self.fresh("x")
        inner_d = d - 1 - self.std
        res = self.rng.choice([s for s in TYPE_POOL if self.floor(s, {}) <= inner_d - 1])
        decl = AnnArrow(BOOL, self.latent(), self.annotate(res))
        base = {**ctx, x: (BOOL, None)}
        if self.rng.random() < 0.6:
            core = If(Var(x), self.gen({**base, f: (decl, x)}, res, inner_d - 1), self.gen(base, res, inner_d - 1))
        else:
            core = self.gen(base, res, inner_d)
        n = self.rng.choice(self.principals)
        body = Signs(n, core) if self.std else core
        decl = self.settle_decl(ctx, n, f, x, decl, body)
        rest = self.gen({**ctx, f: (decl, None)}, t, d - 1)
        return LetRec(f, decl, x, body, rest)

    def settle_decl(self, ctx, n, f, x, decl, body):
        """Grow the declared type toward what the body needs, so the letrec
        rule has a chance to hold (the analysis may still reject it)."""
        tctx = {y: ann for y, (ann, _) in ctx.items()}
        for _ in range(4):
            bt, pi = best_effort({**tctx, f: decl, x: BOOL}, n, body, self.acl)
            new = AnnArrow(BOOL, decl.latent | pi, bt)
            if new == decl:
                break
            decl = new
        return decl


def gen_expr(cfg: GenConfig, target=BOOL, rng: Optional[random.Random] = None, acl: Optional[Acl] = None):
    """A closed expression of base type ``target``, deterministic in ``cfg.seed``
    (or in ``rng`` when given).  ``acl`` only guides letrec annotations."""
    g = _Gen(cfg, rng or random.Random(cfg.seed), acl or Acl({}))
    target = erase_ann(target)
    return g.gen({}, target, max(cfg.max_depth, g.floor(target, {})))


# --------------------------------------------------------------------------
# reports


@dataclass
class EquivReport:
    cases_run: int = 0
    agreements: int = 0
    inconclusive: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def inconclusive_rate(self) -> float:
        return self.inconclusive / self.cases_run if self.cases_run else 0.0

    def record(self, a, b, **info) -> bool:
        """Tally one comparison; returns True on a mismatch."""
        self.cases_run += 1
        if a.is_fuel_out or b.is_fuel_out:
            self.inconclusive += 1
            return False
        if same_outcome(a, b):
            self.agreements += 1
            return False
        self.mismatches.append({**info, "eager": str(a), "stack_or_rhs": str(b)})
        return True

    def merge(self, other: "EquivReport") -> "EquivReport":
        return EquivReport(
            self.cases_run + other.cases_run,
            self.agreements + other.agreements,
            self.inconclusive + other.inconclusive,
            self.mismatches + other.mismatches,
        )

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m, sort_keys=True) + "\n" for m in self.mismatches)

    def summary(self) -> str:
        return (
            f"cases={self.cases_run} agree={self.agreements} mismatches={len(self.mismatches)}"
            f" inconclusive={self.inconclusive} ({100 * self.inconclusive_rate:.2f}%)"
        )


def _mismatch(program, acl: Acl, principal, privs_or_stack, seed) -> dict:
    return {
        "program": program if isinstance(program, str) else pretty(program),
        "acl": acl.to_text(),
        "principal": principal,
        "privs_or_stack": privs_or_stack,
        "seed": seed,
    }


def _fmt_privs(P) -> str:
    return "{" + ",".join(sorted(P)) + "}"


# --------------------------------------------------------------------------
# consistency of the two semantics


def sample_stack(cfg: GenConfig, rng: random.Random, max_len: int = 4) -> tuple:
    return tuple(
        Frame(rng.choice(cfg.principals), frozenset(p for p in cfg.privileges if rng.random() < 0.5))
        for _ in range(rng.randint(1, max_len))
    )


def consistency_on(e, stack: Sequence[Frame], acl: Acl, fuel: int, universe=None):
    """Outcomes of the stack interpreter on ``stack`` and of the eager one on
    the top principal with ``privs(stack)``."""
    s_out = eval_stack(e, stack, None, acl, fuel)
    P = privs(stack, acl, universe)
    e_out = eval_eager(e, stack[0].owner, P, None, acl, fuel)
    return e_out, s_out


@deep
def diff_consistency(
    cfg: GenConfig,
    acl: Optional[Acl] = None,
    cases: int = 1000,
    stacks_per_case: int = 2,
    programs: Optional[Sequence] = None,
) -> EquivReport:
    """Compare the interpreters on generated standard programs (or on
    ``programs``), each run from an initial stack ``<n,{}>::nil`` and from
    ``stacks_per_case`` sampled stacks.  ``acl=None`` samples an ACL per case."""
    if not cfg.standard_only:
        raise ValueError("consistency holds for standard programs only")
    report = EquivReport()
    universe = set(cfg.privileges)
    total = len(programs) if programs is not None else cases
    for i in range(total):
        rng = case_rng(cfg.seed, i)
        case_acl = acl if acl is not None else random_acl(cfg, rng)
        e = programs[i] if programs is not None else gen_expr(cfg, BOOL, rng, case_acl)
        names = universe | privileges_of(e) | case_acl.privileges
        stacks = [(Frame(rng.choice(cfg.principals)),)]
        stacks += [sample_stack(cfg, rng) for _ in range(stacks_per_case)]
        for stack in stacks:
            a, b = consistency_on(e, stack, case_acl, cfg.fuel, names)
            report.record(a, b, **_mismatch(e, case_acl, stack[0].owner, format_stack(stack), f"{cfg.seed}:{i}"))
    return report


# --------------------------------------------------------------------------
# extensional equivalence


def universes(acl: Acl, *exprs, principals=(), privileges=()) -> tuple:
    ns, ps = set(acl.principals) | set(principals), set(acl.privileges) | set(privileges)
    for e in exprs:
        ns |= principals_of(e)
        ps |= privileges_of(e)
    return sorted(ns or {"n0"}), sorted(ps)


@deep
def verify_equiv(
    e1,
    e2,
    acl: Acl,
    mode: str = UNCONDITIONAL,
    fuel: int = 10_000,
    principals=(),
    privileges=(),
    seed=None,
) -> EquivReport:
    """Compare eager outcomes of ``e1`` and ``e2`` for every principal and every
    privilege set (restricted mode: only sets within the principal's grants)."""
    report = EquivReport()
    ns, ps = universes(acl, e1, e2, principals=principals, privileges=privileges)
    if len(ps) > 10:
        raise ValueError("privilege universe too large for an exhaustive sweep")
    for n in ns:
        pool = acl[n] & set(ps) if mode == RESTRICTED else ps
        for P in powerset(pool):
            a = eval_eager(e1, n, P, None, acl, fuel)
            b = eval_eager(e2, n, P, None, acl, fuel)
            report.record(a, b, **_mismatch(e1, acl, n, _fmt_privs(P), seed), rhs=pretty(e2))
    return report


# --------------------------------------------------------------------------
# safety and erasure


@dataclass
class SafetyReport:
    cases_run: int = 0
    analysis_successes: int = 0
    runs: int = 0
    inconclusive: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        return (
            f"cases={self.cases_run} analyzed={self.analysis_successes} runs={self.runs}"
            f" violations={len(self.violations)} inconclusive={self.inconclusive}"
        )


def _analyze_or_none(e, n, acl):
    try:
        return analyze(None, n, e, acl)
    except AnalysisError:
        return None


@deep
def check_safety(cfg: GenConfig, cases: int = 1000, acl: Optional[Acl] = None, min_safe: int = 0) -> SafetyReport:
    """For each generated program the analysis accepts with requirement ``Π``,
    run it under every ``P ⊇ Π``; a security error is a violation.  Generation
    continues past ``cases`` until ``min_safe`` programs have been accepted."""
    rep = SafetyReport()
    i, cap = 0, max(cases, 50 * min_safe)
    while i < cap and (i < cases or rep.analysis_successes < min_safe):
        rng = case_rng(cfg.seed, i)
        i += 1
        case_acl = acl if acl is not None else random_acl(cfg, rng)
        e = gen_expr(cfg, BOOL, rng, case_acl)
        n = rng.choice(cfg.principals)
        rep.cases_run += 1
        res = _analyze_or_none(e, n, case_acl)
        if res is None:
            continue
        rep.analysis_successes += 1
        extra = set(cfg.privileges) | privileges_of(e) | case_acl.privileges
        for rest in powerset(extra - res.required):
            P = res.required | rest
            out = eval_eager(e, n, P, None, case_acl, cfg.fuel)
            rep.runs += 1
            if out.is_fuel_out:
                rep.inconclusive += 1
            elif out.is_error:
                rep.violations.append(
                    {**_mismatch(e, case_acl, n, _fmt_privs(P), f"{cfg.seed}:{i - 1}"), "required": sorted(res.required)}
                )
    return rep


@deep
def check_erasure(cfg: GenConfig, cases: int = 1000, min_safe: int = 0, acl: Optional[Acl] = None):
    """Compare test-free, analysis-safe programs with their erasure under every
    ``P ⊇ Π``.  Generation continues past ``cases`` until ``min_safe`` programs
    have been accepted by the analysis.  Returns ``(report, safe_programs)``."""
    if not cfg.test_free_only:
        raise ValueError("erasure is defined on test-free programs")
    report = EquivReport()
    safe = 0
    i, cap = 0, max(cases, 50 * min_safe)
    while i < cap and (i < cases or safe < min_safe):
        rng = case_rng(cfg.seed, i)
        case_acl = acl if acl is not None else random_acl(cfg, rng)
        e = gen_expr(cfg, BOOL, rng, case_acl)
        n = rng.choice(cfg.principals)
        i += 1
        res = _analyze_or_none(e, n, case_acl)
        if res is None:
            continue
        safe += 1
        erased = erase_security(e)
        extra = set(cfg.privileges) | privileges_of(e) | case_acl.privileges
        for rest in powerset(extra - res.required):
            P = res.required | rest
            a = eval_eager(e, n, P, None, case_acl, cfg.fuel)
            b = eval_eager(erased, n, P, None, case_acl, cfg.fuel)
            report.record(a, b, **_mismatch(e, case_acl, n, _fmt_privs(P), f"{cfg.seed}:{i - 1}"), rhs=pretty(erased))
    return report, safe


# --------------------------------------------------------------------------
# shrinking


def _shrink_candidates(e):
    for path, sub in positions(e):
        if isinstance(sub, Lit):
            continue
        if not free_vars(sub):
            yield replace_at(e, path, Lit(True))
            yield replace_at(e, path, Lit(False))
        for kid in children(sub):
            yield replace_at(e, path, kid)


def _typechecks_like(e, t) -> bool:
    try:
        return typecheck(None, e) == t
    except TypeCheckError:
        return False


def shrink(e, still_fails: Callable[[object], bool], max_rounds: int = 50, keep_standard: bool = False):
    """Greedy shrinking: replace subterms by literals or by their children while
    the program keeps its type and ``still_fails`` keeps holding."""
    t = typecheck(None, e)
    for _ in range(max_rounds):
        for cand in _shrink_candidates(e):
            if keep_standard and not is_standard(cand):
                continue
            if _typechecks_like(cand, t) and still_fails(cand):
                e = cand
                break
        else:
            return e
    return e


def consistency_fails(stack, acl: Acl, fuel: int) -> Callable[[object], bool]:
    def pred(e) -> bool:
        a, b = consistency_on(e, stack, acl, fuel)
        return not (a.is_fuel_out or b.is_fuel_out or same_outcome(a, b))

    return pred


def equiv_fails(make_pair: Callable, acl: Acl, mode: str = UNCONDITIONAL, fuel: int = 1000):
    """Predicate for :func:`shrink`: ``make_pair(e)`` yields the two sides."""

    def pred(e) -> bool:
        lhs, rhs = make_pair(e)
        return not verify_equiv(lhs, rhs, acl, mode, fuel).ok

    return pred


def report_lines(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)




# --------------------------------------------------------------------------
# rewrite rules under random instantiation


RULE_CHECKS = (
    "if-hoist",
    "app-hoist",
    "app-hoist-any",
    "test-else-hoist",
    "test-both-hoist",
    "letrec-hoist",
    "check-check",
    "collapse-signs",
    "elim-check",
    "commute-check-signs",
    "commute-signs-check",
    "test-grant",
    "drop-tail-frame",
    "beta",
)


def _authorize(acl: Acl, n: str, p: str) -> Acl:
    grants = dict(acl.grants)
    grants[n] = acl[n] | {p}
    return Acl(grants)


def _std_value(g: _Gen, t):
    """A closed value whose meaning does not depend on the current principal."""
    if isinstance(t, BoolType):
        return Lit(g.rng.random() < 0.5)
    if t in _BUILTINS_BY_TYPE and g.rng.random() < 0.3:
        return Const(g.rng.choice(_BUILTINS_BY_TYPE[t]))
    x = g.fresh("x")
    ann = g.annotate(t.param)
    return Lam(x, ann, Signs(g.rng.choice(g.principals), g.gen({x: (ann, None)}, t.result, 2)))


def rule_instance(name: str, cfg: GenConfig, rng: random.Random, acl: Acl):
    """Random closed ``bool`` left-hand side for rule ``name`` together with
    an ACL (possibly extended) under which the rule's side conditions hold.
    Returns ``(lhs, rhs, mode, acl)``."""
    g = _Gen(cfg, rng, acl)
    d = max(cfg.max_depth - 2, 1)
    p = rng.choice(cfg.privileges)
    n = rng.choice(cfg.principals)

    def b(depth=d):
        return g.gen({}, BOOL, depth)

    if name == "if-hoist":
        lhs = If(b(), Check(p, b()), Check(p, b()))
    elif name in ("app-hoist", "app-hoist-any"):
        s = rng.choice([BOOL, BOOL, BB])
        fn = _std_value(g, Arrow(s, BOOL)) if name == "app-hoist" else g.gen({}, Arrow(s, BOOL), d)
        lhs = App(fn, Check(p, g.gen({}, s, d)))
    elif name == "test-else-hoist":
        lhs = Test(p, b(), Check(p, b()))
    elif name == "test-both-hoist":
        lhs = Test(rng.choice(cfg.privileges), Check(p, b()), Check(p, b()))
    elif name == "letrec-hoist":
        lr = g.gen_letrec({}, BOOL, max(d, 3 + g.std))
        lhs = LetRec(lr.fname, lr.fann, lr.param, lr.body, Check(p, lr.in_expr))
    elif name == "check-check":
        lhs = Check(p, Check(p, b()))
    elif name == "collapse-signs":
        lhs = Signs(n, Signs(n, b()))
    elif name == "elim-check":
        acl = _authorize(acl, n, p)
        g.privileges = tuple(q for q in cfg.privileges if q != p) or ("q_unused",)
        lhs = Signs(n, DoPriv(p, Check(p, b())))
    elif name == "commute-check-signs":
        acl = _authorize(acl, n, p)
        lhs = Signs(n, Check(p, b()))
    elif name == "commute-signs-check":
        acl = _authorize(acl, n, p)
        lhs = Check(p, Signs(n, b()))
    elif name == "test-grant":
        lhs = Test(p, b(), b())
    elif name == "drop-tail-frame":
        n1, n2 = rng.choice(cfg.principals), rng.choice(cfg.principals)
        grants = dict(acl.grants)
        grants[n1] = acl[n1] & acl[n2]
        acl = Acl(grants)
        s = rng.choice([BOOL, BOOL, BB])
        x = g.fresh("x")
        ann = g.annotate(s)
        fn = Lam(x, ann, Signs(n1, g.gen({x: (ann, None)}, BOOL, d)))
        lhs = Signs(n2, App(fn, _std_value(g, s)))
    elif name == "beta":
        s = rng.choice([BOOL, BOOL, BB])
        x = g.fresh("x")
        ann = g.annotate(s)
        lhs = App(Lam(x, ann, g.gen({x: (ann, None)}, BOOL, d)), _std_value(g, s))
    else:
        raise KeyError(f"unknown rule {name!r}")
    rule = RULES[name]
    rhs = rule(lhs, acl)
    if rhs is None:
        raise AssertionError(f"{name} did not fire on its own instance {pretty(lhs)}")
    return lhs, rhs, rule.equality_mode, acl


@deep
def check_rule(
    name: str, cfg: GenConfig, instances: int = 500, mode: Optional[str] = None, acl: Optional[Acl] = None
) -> EquivReport:
    """Verify rule ``name`` on random instances; ``mode`` overrides the rule's
    own equality mode (e.g. to probe a restricted rule unrestricted).
    ``acl=None`` samples an ACL per instance."""
    report = EquivReport()
    for i in range(instances):
        rng = case_rng(cfg.seed, i)
        base = acl if acl is not None else random_acl(cfg, rng)
        lhs, rhs, rule_mode, case_acl = rule_instance(name, cfg, rng, base)
        sub = verify_equiv(lhs, rhs, case_acl, mode or rule_mode, cfg.fuel, cfg.principals, cfg.privileges, f"{cfg.seed}:{i}")
        report = report.merge(sub)
    return report


# --------------------------------------------------------------------------
# negative controls: each side condition is necessary


@dataclass(frozen=True)
class Control:
    name: str
    lhs: object
    rhs: object
    acl: Acl
    mode: str = UNCONDITIONAL


def negative_controls() -> list:
    """Constructed pairs that break one side condition each; every pair must
    be told apart by :func:`verify_equiv`."""
    from .parser import parse_expr

    acl = Acl({"a": {"p"}, "b": set()})
    P = parse_expr
    return [
        # elim with p not authorized for the signer
        Control("elim-unauthorized", P("sign b { dopriv p { check p { true } } }"), P("sign b { true }"), acl),
        # elim on a body that itself checks p
        Control(
            "elim-impure",
            P("sign a { dopriv p { check p { check p { true } } } }"),
            P("sign a { check p { true } }"),
            acl,
        ),
        Control(
            "elim-impure-test",
            P("sign a { dopriv p { check p { test p { true } else { false } } } }"),
            P("sign a { test p { true } else { false } }"),
            acl,
        ),
        # elim on an open body: the free function checks p with the caller's privileges
        Control(
            "elim-open",
            P("(fn g:bool-{p}->bool => sign b { dopriv p { check p { g true } } }) (fn z:bool => check p { z })"),
            P("(fn g:bool-{p}->bool => sign b { g true }) (fn z:bool => check p { z })"),
            Acl({"a": {"p"}, "b": {"p"}}),
        ),
        # commute with p not authorized for the signer
        Control("commute-unauthorized", P("sign b { check p { true } }"), P("check p { sign b { true } }"), acl),
        # tail frame dropped although the callee has more rights than the caller
        Control(
            "drop-tail-wider-callee",
            P("sign b { (fn x:bool => sign a { check p { x } }) true }"),
            P("(fn x:bool => sign a { check p { x } }) true"),
            acl,
        ),
        # tail frame dropped with an argument that is an unsigned function
        Control(
            "drop-tail-unsigned-arg",
            P("sign a { (fn g:bool-{}->bool => sign b { g true }) (fn z:bool => dopriv p { check p { z } }) }"),
            P("(fn g:bool-{}->bool => sign b { g true }) (fn z:bool => dopriv p { check p { z } })"),
            acl,
        ),
        # tail frame dropped with a non-value argument
        Control(
            "drop-tail-nonvalue-arg",
            P("sign b { (fn x:bool => sign b { x }) (check p { true }) }"),
            P("(fn x:bool => sign b { x }) (check p { true })"),
            acl,
        ),
    ]


def control_results(fuel: int = 1000) -> dict:
    """Name of each negative control mapped to its equivalence report."""
    return {c.name: verify_equiv(c.lhs, c.rhs, c.acl, c.mode, fuel) for c in negative_controls()}


# --------------------------------------------------------------------------
# searching for a witness that test-grant needs the restricted mode


def _grant_contexts(p: str, q: str, n: str) -> list:
    from .parser import parse_expr

    holes = [
        "{}",
        f"dopriv {p} {{ {{}} }}",
        f"dopriv {q} {{ {{}} }}",
        f"sign {n} {{ {{}} }}",
        f"sign {n} {{ dopriv {p} {{ {{}} }} }}",
        f"check {p} {{ {{}} }}",
        f"(fn u:bool => sign {n} {{ {{}} }}) true",
        f"(fn h:bool-{{{p}}}->bool => sign {n} {{ h true }}) (fn z:bool => {{}})",
    ]
    return holes


@deep
def search_test_grant_witness(cfg: GenConfig, attempts: int = 2000, stacks_per_case: int = 4):
    """Look for a closed program telling ``test p {a} else {b}`` from
    ``test p { dopriv p {a} } else {b}`` without the restriction ``P ⊆ A(n)``,
    under either semantics.  Returns the first witness (a dict) or ``None``."""
    from .parser import parse_expr

    seeds = ["check {p} {{ true }}", "dopriv {p} {{ check {p} {{ true }} }}", "sign {n} {{ check {p} {{ true }} }}"]
    for i in range(attempts):
        rng = case_rng(cfg.seed, i)
        acl = random_acl(cfg, rng)
        p, q = rng.choice(cfg.privileges), rng.choice(cfg.privileges)
        n = rng.choice(cfg.principals)
        g = _Gen(cfg, rng, acl)
        if i % 2 == 0:
            a = parse_expr(rng.choice(seeds).format(p=p, n=n))
        else:
            a = g.gen({}, BOOL, max(cfg.max_depth - 2, 1))
        bexpr = g.gen({}, BOOL, 2)
        lhs_core, rhs_core = Test(p, a, bexpr), Test(p, DoPriv(p, a), bexpr)
        hole = rng.choice(_grant_contexts(p, q, n))
        lhs = parse_expr(hole.replace("{}", f"({pretty(lhs_core)})", 1) if hole != "{}" else pretty(lhs_core))
        rhs = parse_expr(hole.replace("{}", f"({pretty(rhs_core)})", 1) if hole != "{}" else pretty(rhs_core))
        rep = verify_equiv(lhs, rhs, acl, UNCONDITIONAL, cfg.fuel, cfg.principals, cfg.privileges)
        if rep.mismatches:
            return {"semantics": "eager", **rep.mismatches[0]}
        for _ in range(stacks_per_case):
            stack = sample_stack(cfg, rng)
            sa = eval_stack(lhs, stack, None, acl, cfg.fuel)
            sb = eval_stack(rhs, stack, None, acl, cfg.fuel)
            if not (sa.is_fuel_out or sb.is_fuel_out or same_outcome(sa, sb)):
                return {
                    "semantics": "stack",
                    **_mismatch(lhs, acl, stack[0].owner, format_stack(stack), f"{cfg.seed}:{i}"),
                    "eager": str(sa),
                    "stack_or_rhs": str(sb),
                    "rhs": pretty(rhs),
                }
    return None
