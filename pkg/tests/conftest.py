from pathlib import Path

import pytest
from hypothesis import strategies as st

from stackcalc.acl import Acl
from stackcalc.harness import GenConfig, gen_expr, random_acl
from stackcalc.parser import parse_acl, parse_expr

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus_program(name: str):
    return parse_expr((CORPUS / f"{name}.sec").read_text())


def corpus_acl(name: str) -> Acl:
    return parse_acl((CORPUS / f"{name}.acl").read_text())


@pytest.fixture
def pass_acl() -> Acl:
    return corpus_acl("pass")


@st.composite
def generated(draw, standard_only=True, test_free_only=False, max_depth=4):
    """(program, acl, principal) with the program drawn by the project generator."""
    seed = draw(st.integers(0, 2**32 - 1))
    cfg = GenConfig(max_depth=max_depth, seed=seed, standard_only=standard_only, test_free_only=test_free_only)
    import random

    rng = random.Random(seed)
    acl = random_acl(cfg, rng)
    e = gen_expr(cfg, rng=rng, acl=acl)
    n = draw(st.sampled_from(cfg.principals))
    return e, acl, n


privsets = st.frozensets(st.sampled_from(["p0", "p1", "p2", "p3"]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
