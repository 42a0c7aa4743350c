import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackcalc.acl import Acl
from stackcalc.harness import (
    RULE_CHECKS,
    EquivReport,
    GenConfig,
    check_erasure,
    check_rule,
    check_safety,
    consistency_fails,
    control_results,
    diff_consistency,
    equiv_fails,
    gen_expr,
    negative_controls,
    random_acl,
    shrink,
    verify_equiv,
)
from stackcalc.outcome import FUELOUT, Val
from stackcalc.parser import parse_expr
from stackcalc.rewrite import RESTRICTED
from stackcalc.stack import Frame
from stackcalc.syntax import BOOL, Arrow, Lit, depth, free_vars, is_standard, is_test_free, pretty, size
from stackcalc.typecheck import typecheck

from conftest import corpus_acl, corpus_program

seeds = st.integers(0, 2**63 - 1)


def test_depth_floor():
    for seed in range(20):
        assert gen_expr(GenConfig(max_depth=0, seed=seed)) in (Lit(True), Lit(False))


def test_determinism():
    cfg = GenConfig(seed=1234)
    assert gen_expr(cfg) == gen_expr(cfg)
    assert pretty(gen_expr(cfg)) == pretty(gen_expr(GenConfig(seed=1234)))


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(n_privileges=11)
    with pytest.raises(ValueError):
        GenConfig(fuel=0)
    assert GenConfig(principal_names=("a", "b")).principals == ("a", "b")


@settings(max_examples=200, deadline=None)
@given(seeds, st.booleans(), st.booleans(), st.integers(0, 6))
def test_generator_soundness(seed, standard, test_free, d):
    cfg = GenConfig(max_depth=d, seed=seed, standard_only=standard, test_free_only=test_free)
    for target in (BOOL, Arrow(BOOL, BOOL)):
        e = gen_expr(cfg, target)
        assert typecheck(None, e) == target
        assert not free_vars(e)
        assert depth(e) <= max(d, 3)
        if target == BOOL:
            assert depth(e) <= d
        if standard:
            assert is_standard(e)
        if test_free:
            assert is_test_free(e)


def test_generated_programs_exercise_every_construct():
    from stackcalc.syntax import subterms

    kinds = set()
    for seed in range(200):
        kinds |= {type(s).__name__ for s in subterms(gen_expr(GenConfig(seed=seed)))}
    assert kinds >= {"Lit", "Const", "Var", "If", "Lam", "App", "LetRec", "Signs", "DoPriv", "Check", "Test"}


def test_report_counts_and_jsonl():
    rep = EquivReport()
    assert not rep.record(Val(True), Val(True))
    assert not rep.record(FUELOUT, Val(True))
    assert rep.record(Val(True), Val(False), program="p", seed=1)
    assert (rep.cases_run, rep.agreements, rep.inconclusive, len(rep.mismatches)) == (3, 1, 1, 1)
    line = rep.to_jsonl().strip()
    assert json.loads(line)["stack_or_rhs"] == "false"
    merged = rep.merge(rep)
    assert merged.cases_run == 6 and len(merged.mismatches) == 2


def test_consistency_on_password_corpus(pass_acl):
    programs = [corpus_program(n) for n in ("use", "bad1", "bad2", "passwd")]
    cfg = GenConfig(principal_names=("n0", "user", "root"), privilege_names=("p", "w"))
    rep = diff_consistency(cfg, pass_acl, programs=programs, stacks_per_case=8)
    assert rep.ok and rep.cases_run == 36


def test_consistency_small_run():
    rep = diff_consistency(GenConfig(seed=7), cases=300)
    assert rep.ok, rep.mismatches[:1]
    assert rep.cases_run == 900


def test_consistency_requires_standard():
    with pytest.raises(ValueError):
        diff_consistency(GenConfig(standard_only=False), cases=1)


def test_verify_equiv_finds_check_difference():
    rep = verify_equiv(parse_expr("check p { true }"), parse_expr("true"), Acl({"n": {"p"}}))
    assert not rep.ok
    assert any(m["privs_or_stack"] == "{}" and m["eager"] == "SecurityError" for m in rep.mismatches)


def test_verify_equiv_restricted_mode_sweeps_fewer_sets():
    acl = Acl({"n": {"p"}, "m": {"p", "q"}})
    e = parse_expr("test p { true } else { true }")
    assert verify_equiv(e, e, acl).cases_run == 8
    assert verify_equiv(e, e, acl, RESTRICTED).cases_run == 2 + 4


def test_fuel_out_is_inconclusive():
    loop = parse_expr("letrec f (x:bool):bool !{} = sign n { f x } in f true")
    rep = verify_equiv(loop, parse_expr("true"), Acl({"n": set()}), fuel=50)
    assert rep.ok and rep.inconclusive == rep.cases_run


@pytest.mark.parametrize("name", RULE_CHECKS)
def test_rules_small_run(name):
    rep = check_rule(name, GenConfig(seed=11), instances=40)
    assert rep.ok, rep.mismatches[:1]


def test_negative_controls_all_fail():
    results = control_results()
    assert len(results) == len(negative_controls())
    for name, rep in results.items():
        assert not rep.ok, name


def test_safety_small_run():
    rep = check_safety(GenConfig(seed=3), cases=300)
    assert rep.ok and rep.analysis_successes > 50


def test_erasure_small_run():
    rep, safe = check_erasure(GenConfig(seed=3, test_free_only=True), cases=200, min_safe=60)
    assert rep.ok and safe >= 60


def test_erasure_requires_test_free():
    with pytest.raises(ValueError):
        check_erasure(GenConfig(), cases=1)


def test_shrink_consistency_mismatch_on_non_standard_program():
    acl = Acl({"root": {"w"}, "user": set()})
    big = parse_expr(
        "if (fn y:bool => sign user { not y }) true then false else "
        "(sign root { fn x:bool => dopriv w { check w { x } } }) (test w { true } else { true })"
    )
    stack = (Frame("user"),)
    pred = consistency_fails(stack, acl, 100)
    assert pred(big)
    small = shrink(big, pred)
    assert pred(small)
    assert size(small) < size(big)


def test_shrink_equivalence_witness():
    acl = Acl({"n": {"p"}})
    lhs = parse_expr("if true then check p { not false } else check p { true }")

    def pair(e):
        return e, parse_expr("true")

    pred = equiv_fails(pair, acl)
    small = shrink(lhs, pred)
    assert pred(small)
    assert size(small) <= size(lhs)


def test_random_acl_density():
    acl = random_acl(GenConfig(acl_density=1.0), random.Random(0))
    assert all(acl[n] == {"p0", "p1", "p2", "p3"} for n in ("n0", "n1", "n2"))
