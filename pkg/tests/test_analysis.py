import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackcalc.acl import Acl
from stackcalc.analysis import (
    BASE_TYPE_ERROR,
    LATENT_MISMATCH,
    SIGNS_SIDE_CONDITION,
    SUBTYPE_FAILURE,
    AnalysisError,
    AnalysisResult,
    analyze,
    safe_for,
    subtype,
)
from stackcalc.eager import eval_eager
from stackcalc.harness import powerset
from stackcalc.parser import parse_expr, parse_type
from stackcalc.syntax import BOOL, AnnArrow, erase_ann
from stackcalc.typecheck import typecheck

from conftest import corpus_acl, corpus_program, generated

T = parse_type
LPCP = Acl({"n": {"p"}})


def an(src, n="n", acl=LPCP, ctx=None, **kw):
    return analyze(ctx, n, parse_expr(src), acl, **kw)


def test_subtype_examples():
    assert subtype(BOOL, BOOL)
    assert subtype(T("bool-{}->bool"), T("bool-{p}->bool"))
    assert not subtype(T("bool-{p}->bool"), T("bool-{}->bool"))
    # contravariant parameter
    assert subtype(T("(bool-{p}->bool)-{}->bool"), T("(bool-{}->bool)-{}->bool"))
    assert not subtype(T("(bool-{}->bool)-{}->bool"), T("(bool-{p}->bool)-{}->bool"))
    assert not subtype(BOOL, T("bool-{}->bool"))


ann_types = st.recursive(
    st.just(BOOL),
    lambda inner: st.builds(AnnArrow, inner, st.frozensets(st.sampled_from("pqw")), inner),
    max_leaves=4,
)


@settings(max_examples=300, deadline=None)
@given(ann_types, ann_types)
def test_subtype_implies_same_erasure(a, b):
    if subtype(a, b):
        assert erase_ann(a) == erase_ann(b)


@settings(max_examples=200, deadline=None)
@given(ann_types, ann_types, ann_types)
def test_subtype_is_a_preorder(a, b, c):
    assert subtype(a, a)
    if subtype(a, b) and subtype(b, c):
        assert subtype(a, c)


def test_cp():
    res = analyze(None, "n", corpus_program("cp"), LPCP)
    assert res == AnalysisResult(T("bool-{p}->bool"), frozenset())
    assert res.report() == "RESULT θ=bool-{p}->bool pi={}"


def test_cp_requires_authorization():
    with pytest.raises(AnalysisError) as info:
        analyze(None, "n", corpus_program("cp"), Acl({"n": set()}))
    assert info.value.kind == SIGNS_SIDE_CONDITION


def test_lp():
    res = analyze(None, "n", corpus_program("lp"), LPCP)
    assert res.ann_type == T("(bool-{p}->bool)-{}->(bool-{}->bool)")
    assert res.required == frozenset()


def test_lp_cp_applied():
    res = analyze(None, "n", corpus_program("lpcp"), LPCP)
    assert res == AnalysisResult(BOOL, frozenset())


def test_password_corpus(pass_acl):
    assert analyze(None, "n0", corpus_program("use"), pass_acl) == AnalysisResult(BOOL, frozenset())
    assert analyze(None, "n0", corpus_program("passwd"), pass_acl).required == {"p"}
    for bad in ["bad1", "bad2"]:
        with pytest.raises(AnalysisError) as info:
            analyze(None, "n0", corpus_program(bad), pass_acl)
        assert info.value.kind == SIGNS_SIDE_CONDITION
        assert "w" in info.value.detail


def test_check_adds_and_dopriv_removes():
    assert an("check p { true }").required == {"p"}
    assert an("dopriv p { check p { true } }").required == frozenset()
    # not authorized: dopriv does not help
    assert an("dopriv q { check q { true } }").required == {"q"}


def test_application_exposes_latent():
    assert an("(fn x:bool => check p { x }) true").required == {"p"}
    assert an("fn x:bool => check p { x }").required == frozenset()


def test_subtype_failure():
    with pytest.raises(AnalysisError) as info:
        an("(fn f:bool-{}->bool => f true) (fn x:bool => check p { x })")
    assert info.value.kind == SUBTYPE_FAILURE
    # a wider declared latent set accepts it
    assert an("(fn f:bool-{p}->bool => f true) (fn x:bool => check p { x })").required == {"p"}


def test_if_branches_need_equal_annotations():
    with pytest.raises(AnalysisError) as info:
        an("if true then fn x:bool => check p { x } else fn x:bool => x")
    assert info.value.kind == LATENT_MISMATCH


def test_base_type_error():
    with pytest.raises(AnalysisError) as info:
        an("true true")
    assert info.value.kind == BASE_TYPE_ERROR
    assert info.value.report().startswith("ERROR BaseTypeError")


def test_letrec_declaration_is_used():
    src = "letrec f (x:bool):bool !{p} = sign n { if x then f false else check p { true } } in f true"
    assert an(src).required == {"p"}
    # declared set too small
    with pytest.raises(AnalysisError) as info:
        an(src.replace("!{p}", "!{}"))
    assert info.value.kind == LATENT_MISMATCH


def test_letrec_relaxation_and_strict_mode():
    src = "letrec f (x:bool):bool !{p} = sign n { x } in f true"
    assert an(src).required == {"p"}
    with pytest.raises(AnalysisError):
        an(src, strict_letrec=True)


def test_context_annotations():
    assert an("g true", ctx={"g": T("bool-{w}->bool")}).required == {"w"}


def test_safe_for():
    assert safe_for(AnalysisResult(BOOL, frozenset()), set())
    assert safe_for(AnalysisResult(BOOL, frozenset({"p"})), {"p", "w"})
    assert not safe_for(AnalysisResult(BOOL, frozenset({"p"})), set())


@settings(max_examples=300, deadline=None)
@given(generated())
def test_safety(case):
    e, acl, n = case
    try:
        res = analyze(None, n, e, acl)
    except AnalysisError:
        return
    universe = {"p0", "p1", "p2", "p3"}
    for rest in powerset(universe - res.required):
        out = eval_eager(e, n, res.required | rest, None, acl, 1000)
        assert not out.is_error, rest


@settings(max_examples=200, deadline=None)
@given(generated(standard_only=False))
def test_erasure_coherence(case):
    e, acl, n = case
    try:
        res = analyze(None, n, e, acl)
    except AnalysisError:
        return
    assert erase_ann(res.ann_type) == typecheck(None, e)


@settings(max_examples=100, deadline=None)
@given(generated(), st.frozensets(st.sampled_from(["p0", "p1", "p2", "p3"])))
def test_widening_a_letrec_declaration_keeps_success(case, extra):
    from stackcalc.syntax import LetRec, positions, replace_at

    e, acl, n = case
    try:
        before = analyze(None, n, e, acl)
    except AnalysisError:
        return
    for path, node in positions(e):
        if isinstance(node, LetRec):
            wider = AnnArrow(node.fann.param, node.fann.latent | extra, node.fann.result)
            e2 = replace_at(e, path, LetRec(node.fname, wider, node.param, node.body, node.in_expr))
            after = analyze(None, n, e2, acl)
            assert before.required <= after.required
            return
