"""A lambda calculus with stack inspection: parser, type checker, eager and
stack interpreters, a type-and-effect analysis, check-moving rewrites and a
differential testing harness."""
from .acl import Acl
from .analysis import AnalysisError, AnalysisResult, analyze, safe_for
from .eager import eval_eager, join_priv
from .outcome import FUELOUT, STAR, Outcome, Val, same_outcome
from .parser import ParseError, parse_acl, parse_expr, parse_type
from .stack import Frame, check_pred, eval_stack, privs
from .syntax import free_vars, is_p_pure, is_standard, pretty
from .typecheck import TypeCheckError, typecheck

__version__ = "0.1.0"
