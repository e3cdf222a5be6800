#!/usr/bin/env python3
"""
Unit tests for the expression language: evaluation, printing and parsing
"""

import sys
import os
import pytest
from hypothesis import given, settings, strategies as st

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.dsl_parser import parse_expression  # noqa: E402
from operasim.errors import EvaluationError  # noqa: E402
from operasim.expressions import (  # noqa: E402
    Binary,
    BoolLit,
    Call,
    EvalContext,
    IfExpr,
    IntLit,
    SeqLit,
    SetLit,
    SymLit,
    TupleLit,
    Unary,
    Var,
    free_variables,
    literal_from_value,
    value_to_json,
    value_to_source,
)


def evaluate(text: str, **variables):
    return parse_expression(text).evaluate(EvalContext(variables))


class TestEvaluation:
    """Operators and builtins"""

    def test_arithmetic_floors(self):
        assert evaluate("-7 / 2") == -4
        assert evaluate("-7 % 2") == 1
        assert evaluate("1 + 2 * 3") == 7
        assert evaluate("(1 + 2) * 3") == 9

    def test_division_by_zero(self):
        with pytest.raises(EvaluationError):
            evaluate("1 / 0")
        with pytest.raises(EvaluationError):
            evaluate("1 % 0")

    def test_equality_is_typed(self):
        assert evaluate("1 == 1") is True
        assert evaluate("1 == true") is False
        assert evaluate("'a' != 'b'") is True

    def test_membership(self):
        assert evaluate("'food_N' in {'food_N', 'food_E'}") is True
        assert evaluate("3 in [1, 2]") is False
        assert evaluate("1 in (1,)") is True

    def test_boolean_operators_need_booleans(self):
        assert evaluate("true and not false") is True
        with pytest.raises(EvaluationError):
            evaluate("1 and true")

    def test_if_expression(self):
        assert evaluate("if x > 2 then 'big' else 'small'", x=3) == "big"
        assert evaluate("if x > 2 then 'big' else 'small'", x=1) == "small"

    def test_collections(self):
        assert evaluate("append(seen, 'a')", seen=("b",)) == ("b", "a")
        assert evaluate("len({1, 2, 2})") == 2
        assert evaluate("[1, 2] + [3]") == (1, 2, 3)
        assert evaluate("{1, 2} - {2}") == frozenset({1})
        assert evaluate("at((4, 5), 1)") == 5
        assert evaluate("max(1, 7, 3) - min(4, 2)") == 5
        assert evaluate("abs(-4)") == 4

    def test_unknown_names(self):
        with pytest.raises(EvaluationError):
            evaluate("missing + 1")
        with pytest.raises(EvaluationError):
            evaluate("nosuch(1)")

    def test_bad_builtin_arguments(self):
        with pytest.raises(EvaluationError):
            evaluate("at([1], 5)")
        with pytest.raises(EvaluationError):
            evaluate("len(3)")

    def test_free_variables(self):
        assert free_variables(parse_expression("food + input > threshold")) == {"food", "input", "threshold"}


class TestLiterals:
    """Runtime values and their literal forms"""

    def test_value_to_source(self):
        assert value_to_source(("a",)) == "('a',)"
        assert value_to_source(("a", 1), "seq") == "['a', 1]"
        assert value_to_source(frozenset({3, 1})) == "{1, 3}"
        assert value_to_source(-2) == "-2"

    def test_value_to_json(self):
        assert value_to_json(frozenset({"b", "a"})) == ["a", "b"]
        assert value_to_json((1, (True, "x"))) == [1, [True, "x"]]

    def test_literal_from_value_evaluates_back(self):
        for v in (0, -5, True, "tick", (1, "a"), frozenset({2, 3})):
            assert literal_from_value(v).evaluate(EvalContext()) == v
        assert literal_from_value((1, 2), "seq") == SeqLit((IntLit(1), IntLit(2)))


#
# printing and re-parsing arbitrary trees
#

NAMES = ("x", "y", "food", "walk", "input")
SYMBOLS = ("a", "tick", "food_N")
BINARY_OPS = ("or", "and", "==", "!=", "<", "<=", ">", ">=", "in", "+", "-", "*", "/", "%")

leaves = st.one_of(
    st.integers(min_value=0, max_value=10**6).map(IntLit),
    st.booleans().map(BoolLit),
    st.sampled_from(SYMBOLS).map(SymLit),
    st.sampled_from(NAMES).map(Var),
)


def _extend(children):
    items = st.lists(children, max_size=3).map(tuple)
    return st.one_of(
        st.builds(Binary, st.sampled_from(BINARY_OPS), children, children),
        st.builds(Unary, st.sampled_from(("neg", "not")), children),
        st.builds(IfExpr, children, children, children),
        st.builds(Call, st.sampled_from(("len", "max", "append")), items),
        items.map(TupleLit),
        items.map(SeqLit),
        items.map(SetLit),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


class TestPrinting:
    """Canonical printing of expression trees"""

    @settings(max_examples=500, deadline=None)
    @given(expressions)
    def test_print_then_parse_is_identity(self, expr):
        assert parse_expression(expr.to_source()) == expr

    def test_minimal_parentheses(self):
        assert parse_expression("(a + b) * c").to_source() == "(a + b) * c"
        assert parse_expression("a + (b * c)").to_source() == "a + b * c"
        assert parse_expression("a - (b - c)").to_source() == "a - (b - c)"
        assert parse_expression("(a == b) == c").to_source() == "(a == b) == c"
        assert parse_expression("-(a + 1)").to_source() == "-(a + 1)"
        assert parse_expression("not (a and b)").to_source() == "not (a and b)"
        assert parse_expression("1 + (if a then 2 else 3)").to_source() == "1 + (if a then 2 else 3)"

    def test_one_tuple(self):
        assert parse_expression("(a,)") == TupleLit((Var("a"),))
        assert parse_expression("(a)") == Var("a")
        assert parse_expression("()") == TupleLit(())
