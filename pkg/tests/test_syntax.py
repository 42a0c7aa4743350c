import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackcalc.parser import ParseError, parse_acl, parse_expr, parse_type
from stackcalc.syntax import (
    BOOL,
    AnnArrow,
    App,
    Arrow,
    Check,
    Const,
    DoPriv,
    Lit,
    Signs,
    Test,
    Var,
    bare_ann,
    depth,
    erase_ann,
    free_vars,
    is_p_pure,
    is_standard,
    is_test_free,
    pretty,
    pretty_type,
    subterms,
)

from conftest import generated


def test_parse_check_of_constant():
    assert parse_expr("check w { hwWrite }") == Check("w", Const("hwWrite"))


def test_parse_literals():
    assert parse_expr("true") == Lit(True)
    assert parse_expr("false") == Lit(False)


def test_application_is_left_associative():
    assert parse_expr("f a b") == App(App(Var("f"), Var("a")), Var("b"))


def test_bound_builtin_name_is_a_variable():
    e = parse_expr("fn not:bool => not")
    assert e.body == Var("not")
    assert parse_expr("not") == Const("not")


def test_string_literal_is_constant():
    assert parse_expr('"/etc/password"') == Const('"/etc/password"')


def test_comments_and_whitespace():
    assert parse_expr("# a comment\n  sign n { true } # trailing") == Signs("n", Lit(True))


@pytest.mark.parametrize(
    "src",
    ["", "sign { true }", "check p true", "true true )", "fn x => x", "test p { true }", "letrec f (x:bool):bool = x in f"],
)
def test_parse_errors_carry_position(src):
    with pytest.raises(ParseError) as info:
        parse_expr(src)
    assert info.value.line >= 1 and info.value.col >= 1


def test_trailing_input_rejected():
    with pytest.raises(ParseError) as info:
        parse_expr("true )")
    assert info.value.col == 6


def test_parse_error_expected_set():
    with pytest.raises(ParseError) as info:
        parse_expr("sign n true")
    assert "{" in info.value.expected


def test_parse_types():
    assert parse_type("bool") == BOOL
    assert parse_type("bool-{p}->bool") == AnnArrow(BOOL, {"p"}, BOOL)
    # right associative
    assert parse_type("bool -> bool -> bool") == AnnArrow(BOOL, set(), AnnArrow(BOOL, set(), BOOL))
    assert parse_type("(bool-{p}->bool)-{}->bool-{}->bool") == AnnArrow(
        AnnArrow(BOOL, {"p"}, BOOL), set(), AnnArrow(BOOL, set(), BOOL)
    )


def test_pretty_type_round_trip():
    for src in ["bool", "bool-{p,q}->bool", "(bool-{p}->bool)-{}->bool-{}->bool", "bool-{}->(bool-{w}->bool)"]:
        t = parse_type(src)
        assert parse_type(pretty_type(t)) == t


def test_erase_ann():
    assert erase_ann(BOOL) == BOOL
    assert erase_ann(parse_type("bool-{p}->bool")) == Arrow(BOOL, BOOL)
    assert bare_ann(Arrow(BOOL, BOOL)) == AnnArrow(BOOL, set(), BOOL)


# acl files


def test_parse_acl_password_example():
    acl = parse_acl("user: p\nroot: p w")
    assert acl["user"] == {"p"} and acl["root"] == {"p", "w"}


def test_empty_acl_is_total():
    acl = parse_acl("")
    assert acl["anyone"] == frozenset()


def test_acl_lines_merge_by_union():
    assert parse_acl("a: x\na: y")["a"] == {"x", "y"}


def test_acl_comments_and_blank_lines():
    acl = parse_acl("# header\n\nroot: p w  # admin\nguest:\n")
    assert acl["root"] == {"p", "w"} and acl["guest"] == frozenset()


@pytest.mark.parametrize("src", ["root p w", "1root: p", "root: p-w"])
def test_malformed_acl_lines(src):
    with pytest.raises(ParseError):
        parse_acl(src)


# syntactic predicates


def test_is_standard_examples():
    assert is_standard(parse_expr("fn x:bool => sign n { x }"))
    assert not is_standard(parse_expr("fn x:bool => x"))
    assert is_standard(parse_expr("true"))
    assert not is_standard(parse_expr("letrec f (x:bool):bool !{} = x in f true"))
    assert is_standard(parse_expr("letrec f (x:bool):bool !{} = sign n { x } in f true"))


def test_is_p_pure_examples():
    assert is_p_pure(parse_expr("check q { true }"), "p")
    assert not is_p_pure(parse_expr("test p { true } else { true }"), "p")
    assert is_p_pure(parse_expr("dopriv p { true }"), "p")
    assert not is_p_pure(parse_expr("fn x:bool => sign n { check p { x } }"), "p")


def _scan_pure(e, p):
    return not any(isinstance(s, (Check, Test)) and s.privilege == p for s in subterms(e))


@settings(max_examples=200, deadline=None)
@given(generated(standard_only=False), st.sampled_from(["p0", "p1", "p2", "p3"]))
def test_p_purity_matches_subterm_scan(case, p):
    e, _, _ = case
    assert is_p_pure(e, p) == _scan_pure(e, p)


def test_free_vars_examples():
    assert free_vars(parse_expr("fn x:bool => x")) == set()
    assert free_vars(parse_expr("f x")) == {"f", "x"}
    assert free_vars(parse_expr("letrec f (x:bool):bool !{} = sign n { f x } in f")) == set()
    assert free_vars(parse_expr("letrec f (x:bool):bool !{} = sign n { g x } in f y")) == {"g", "y"}


def _naive_free(e, bound=frozenset()):
    from stackcalc.syntax import Lam, LetRec, children

    if isinstance(e, Var):
        return set() if e.name in bound else {e.name}
    if isinstance(e, Lam):
        return _naive_free(e.body, bound | {e.param})
    if isinstance(e, LetRec):
        return _naive_free(e.body, bound | {e.fname, e.param}) | _naive_free(e.in_expr, bound | {e.fname})
    out = set()
    for k in children(e):
        out |= _naive_free(k, bound)
    return out


def test_pretty_examples():
    assert pretty(Check("p", Lit(True))) == "check p { true }"
    assert pretty(App(App(Var("f"), Var("a")), Var("b"))) == "f a b"
    assert pretty(Signs("n", Signs("n", Const("c")))) == "sign n { sign n { c } }"
    assert pretty(App(Var("f"), App(Var("g"), Var("x")))) == "f (g x)"


@settings(max_examples=300, deadline=None)
@given(generated(standard_only=False))
def test_round_trip(case):
    e, _, _ = case
    assert parse_expr(pretty(e)) == e


@settings(max_examples=100, deadline=None)
@given(generated(standard_only=False))
def test_generated_programs_are_closed(case):
    e, _, _ = case
    assert free_vars(e) == set() == _naive_free(e)


def test_round_trip_corner_cases():
    for src in [
        "(fn x:bool => x) true",
        "if true then fn x:bool => x else fn y:bool => y",
        "f (if a then b else c) d",
        "test p { dopriv q { true } } else { check p { false } }",
        "letrec f (x:(bool-{p}->bool)):bool-{}->bool !{p} = sign n { fn y:bool => x y } in f",
        "(letrec f (x:bool):bool !{} = sign n { x } in f) true",
    ]:
        e = parse_expr(src)
        assert parse_expr(pretty(e)) == e


def test_depth_counts_edges():
    assert depth(Lit(True)) == 0
    assert depth(Check("p", Lit(True))) == 1
    assert depth(parse_expr("f a b")) == 2


def test_is_test_free():
    assert is_test_free(parse_expr("dopriv p { check p { true } }"))
    assert not is_test_free(parse_expr("sign n { test p { true } else { false } }"))
