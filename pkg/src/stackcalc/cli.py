"""Command-line front end: ``stackcalc <command> ...``.

Exit codes: 0 success, 1 base type error, 2 analysis failure, 3 security
error at run time, 4 equivalence mismatch, 5 parse error, 6 fuel exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .acl import Acl
from .analysis import AnalysisError, analyze
from .eager import eval_eager
from .harness import (
    RULE_CHECKS,
    EquivReport,
    GenConfig,
    check_erasure,
    check_rule,
    check_safety,
    diff_consistency,
    verify_equiv,
)
from .outcome import FUEL_OUT, SECURITY_ERROR
from .parser import ParseError, parse_acl, parse_expr
from .rewrite import RESTRICTED, UNCONDITIONAL, EraseError, erase_security, optimize
from .stack import Frame, eval_stack
from .syntax import is_test_free, pretty, pretty_type
from .typecheck import TypeCheckError, typecheck

OK, TYPE_ERROR, UNSAFE, SECURITY, MISMATCH, PARSE, FUEL = range(7)


@dataclass
class CliConfig:
    command: str
    programs: list = field(default_factory=list)
    acl: Optional[str] = None
    principal: str = "n0"
    privs: tuple = ()
    semantics: str = "eager"
    fuel: int = 10_000
    seed: int = 0
    cases: int = 1000
    depth: int = 6
    output: str = "human"


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


class _Out:
    def __init__(self, mode: str, stream=None):
        self.mode = mode
        self.stream = stream or sys.stdout

    def emit(self, human: str, **record):
        if self.mode == "jsonl":
            print(json.dumps(record, sort_keys=True), file=self.stream)
        else:
            print(human, file=self.stream)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_program(path: str, out: _Out):
    try:
        return parse_expr(_read(path))
    except ParseError as exc:
        out.emit(f"{path}:{exc}", kind="parse-error", file=path, line=exc.line, col=exc.col, message=exc.message)
        raise _Exit(PARSE) from None


def _load_acl(path: Optional[str], out: _Out) -> Acl:
    if path is None:
        return Acl({})
    try:
        return parse_acl(_read(path))
    except ParseError as exc:
        out.emit(f"{path}:{exc}", kind="parse-error", file=path, line=exc.line, col=exc.col, message=exc.message)
        raise _Exit(PARSE) from None


def _typecheck(e, out: _Out):
    try:
        return typecheck(None, e)
    except TypeCheckError as exc:
        out.emit(f"type error at {exc.span or '?'}: {exc}", kind="type-error", span=str(exc.span), message=str(exc))
        raise _Exit(TYPE_ERROR) from None


def _analyze(e, cfg: CliConfig, acl: Acl, out: _Out, strict: bool = False):
    try:
        return analyze(None, cfg.principal, e, acl, strict_letrec=strict)
    except AnalysisError as exc:
        code = TYPE_ERROR if exc.kind == "BaseTypeError" else UNSAFE
        out.emit(exc.report(), kind="analysis-error", error=exc.kind, span=str(exc.span), detail=exc.detail)
        raise _Exit(code) from None


# --------------------------------------------------------------------------
# commands


def cmd_typecheck(cfg: CliConfig, args, out: _Out) -> int:
    e = _load_program(cfg.programs[0], out)
    t = _typecheck(e, out)
    out.emit(pretty_type(t), kind="type", type=pretty_type(t))
    return OK


def cmd_analyze(cfg: CliConfig, args, out: _Out) -> int:
    acl = _load_acl(cfg.acl, out)
    e = _load_program(cfg.programs[0], out)
    res = _analyze(e, cfg, acl, out, strict=args.strict_letrec)
    out.emit(res.report(), kind="result", type=pretty_type(res.ann_type), pi=sorted(res.required))
    return OK


def cmd_run(cfg: CliConfig, args, out: _Out) -> int:
    acl = _load_acl(cfg.acl, out)
    e = _load_program(cfg.programs[0], out)
    _typecheck(e, out)
    P = frozenset(cfg.privs)
    if cfg.semantics == "stack":
        res = eval_stack(e, [Frame(cfg.principal, P)], None, acl, cfg.fuel)
    else:
        res = eval_eager(e, cfg.principal, P, None, acl, cfg.fuel)
    out.emit(str(res), kind="outcome", semantics=cfg.semantics, outcome=str(res))
    return {SECURITY_ERROR: SECURITY, FUEL_OUT: FUEL}.get(res.kind, OK)


def cmd_optimize(cfg: CliConfig, args, out: _Out) -> int:
    acl = _load_acl(cfg.acl, out)
    e = _load_program(cfg.programs[0], out)
    _typecheck(e, out)
    result, trace = optimize(e, acl)
    if args.trace:
        for step in trace:
            out.emit(step.line(), kind="step", rule=step.rule, span=str(step.span or ""), before=step.before, after=step.after)
    out.emit(pretty(result), kind="program", program=pretty(result))
    return OK


def cmd_erase(cfg: CliConfig, args, out: _Out) -> int:
    acl = _load_acl(cfg.acl, out)
    e = _load_program(cfg.programs[0], out)
    if not is_test_free(e):
        out.emit("refusing to erase: program uses test", kind="refused", reason="not test-free")
        return UNSAFE
    res = _analyze(e, cfg, acl, out)
    try:
        erased = erase_security(e)
    except EraseError as exc:  # pragma: no cover - test-freeness checked above
        out.emit(str(exc), kind="refused", reason=str(exc))
        return UNSAFE
    # the erasure has the same meaning under every privilege set covering pi
    out.emit(pretty(erased), kind="program", program=pretty(erased), pi=sorted(res.required))
    return OK


def _emit_report(report: EquivReport, out: _Out, extra: str = ""):
    for m in report.mismatches:
        out.emit(f"MISMATCH {json.dumps(m, sort_keys=True)}", kind="mismatch", **m)
    out.emit(
        f"{extra}{report.summary()}",
        kind="summary",
        cases=report.cases_run,
        agreements=report.agreements,
        mismatches=len(report.mismatches),
        inconclusive=report.inconclusive,
    )


def cmd_equiv(cfg: CliConfig, args, out: _Out) -> int:
    acl = _load_acl(cfg.acl, out)
    e1 = _load_program(cfg.programs[0], out)
    e2 = _load_program(cfg.programs[1], out)
    t1, t2 = _typecheck(e1, out), _typecheck(e2, out)
    if t1 != t2:
        out.emit(f"type error: {pretty_type(t1)} vs {pretty_type(t2)}", kind="type-error", message="types differ")
        return TYPE_ERROR
    mode = RESTRICTED if args.restricted else UNCONDITIONAL
    report = verify_equiv(e1, e2, acl, mode, cfg.fuel)
    _emit_report(report, out)
    return OK if report.ok else MISMATCH


def cmd_fuzz(cfg: CliConfig, args, out: _Out) -> int:
    acl = None if args.random_acl else _load_acl(cfg.acl, out)
    names = {}
    if acl is not None:
        names = dict(principal_names=tuple(sorted(acl.principals)), privilege_names=tuple(sorted(acl.privileges)))
    try:
        gen = GenConfig(max_depth=cfg.depth, seed=cfg.seed, fuel=cfg.fuel, test_free_only=args.mode == "erasure", **names)
    except ValueError as exc:
        print(f"stackcalc: {exc}", file=sys.stderr)
        return PARSE
    if args.mode == "consistency":
        report = diff_consistency(gen, acl, cases=cfg.cases)
        _emit_report(report, out)
        return OK if report.ok else MISMATCH
    if args.mode == "safety":
        rep = check_safety(gen, cases=cfg.cases, acl=acl)
        for v in rep.violations:
            out.emit(f"VIOLATION {json.dumps(v, sort_keys=True)}", kind="violation", **v)
        out.emit(rep.summary(), kind="summary", cases=rep.cases_run, analyzed=rep.analysis_successes,
                 violations=len(rep.violations), inconclusive=rep.inconclusive)
        return OK if rep.ok else MISMATCH
    if args.mode == "erasure":
        report, safe = check_erasure(gen, cases=cfg.cases, acl=acl)
        _emit_report(report, out, extra=f"safe={safe} ")
        return OK if report.ok else MISMATCH
    code = OK
    for name in RULE_CHECKS:
        report = check_rule(name, gen, instances=cfg.cases, acl=acl)
        _emit_report(report, out, extra=f"{name}: ")
        if not report.ok:
            code = MISMATCH
    return code


COMMANDS = {
    "typecheck": cmd_typecheck,
    "analyze": cmd_analyze,
    "run": cmd_run,
    "optimize": cmd_optimize,
    "erase": cmd_erase,
    "equiv": cmd_equiv,
    "fuzz": cmd_fuzz,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stackcalc", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, acl_required=True):
        p.add_argument("--acl", required=acl_required, help="ACL file")
        p.add_argument("--format", choices=("human", "jsonl"), default="human", dest="output")
        return p

    def positive(text: str) -> int:
        v = int(text)
        if v < 1:
            raise argparse.ArgumentTypeError("must be at least 1")
        return v

    def privlist(text: str) -> tuple:
        return tuple(p for p in text.split(",") if p)

    p = common(sub.add_parser("typecheck", help="print the base type"), acl_required=False)
    p.add_argument("file")

    p = common(sub.add_parser("analyze", help="type-and-effect analysis"))
    p.add_argument("file")
    p.add_argument("--principal", default="n0")
    p.add_argument("--strict-letrec", action="store_true", help="letrec bodies must match declarations exactly")

    p = common(sub.add_parser("run", help="evaluate a program"))
    p.add_argument("file")
    p.add_argument("--semantics", choices=("eager", "stack"), default="eager")
    p.add_argument("--principal", default="n0")
    p.add_argument("--privs", type=privlist, default=())
    p.add_argument("--fuel", type=positive, default=10_000)

    p = common(sub.add_parser("optimize", help="hoist and eliminate checks"))
    p.add_argument("file")
    p.add_argument("--trace", action="store_true")

    p = common(sub.add_parser("erase", help="drop dopriv/check from a safe, test-free program"))
    p.add_argument("file")
    p.add_argument("--principal", default="n0")

    p = common(sub.add_parser("equiv", help="compare two programs over all principals and privilege sets"))
    p.add_argument("file")
    p.add_argument("file2")
    p.add_argument("--restricted", action="store_true", help="only privilege sets within the principal's grants")
    p.add_argument("--fuel", type=positive, default=10_000)

    p = sub.add_parser("fuzz", help="differential testing on generated programs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--acl", help="ACL file")
    src.add_argument("--random-acl", action="store_true", help="sample an ACL per case")
    p.add_argument("--format", choices=("human", "jsonl"), default="human", dest="output")
    p.add_argument("--cases", type=positive, default=1000)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuel", type=positive, default=10_000)
    p.add_argument("--mode", choices=("consistency", "safety", "erasure", "rules"), default="consistency")
    return ap


def config_from_args(args) -> CliConfig:
    programs = [getattr(args, "file", None), getattr(args, "file2", None)]
    return CliConfig(
        command=args.command,
        programs=[f for f in programs if f],
        acl=getattr(args, "acl", None),
        principal=getattr(args, "principal", "n0"),
        privs=getattr(args, "privs", ()),
        semantics=getattr(args, "semantics", "eager"),
        fuel=getattr(args, "fuel", 10_000),
        seed=getattr(args, "seed", 0),
        cases=getattr(args, "cases", 1000),
        depth=getattr(args, "depth", 6),
        output=args.output,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    out = _Out(cfg.output)
    try:
        return COMMANDS[cfg.command](cfg, args, out)
    except _Exit as exc:
        return exc.code
    except OSError as exc:
        print(f"stackcalc: {exc}", file=sys.stderr)
        return PARSE


if __name__ == "__main__":
    sys.exit(main())
