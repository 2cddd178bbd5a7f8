import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatter.errors import EvalError, ExpressionSyntaxError, UnknownIdentifier
from chatter.expr import BinOp, Call, ExpressionField, Neg, Num, Var, evaluate, parse_expression, to_text


def ev(text, x=0.0, v=0.0, t=0.0):
    return evaluate(parse_expression(text), x, v, t)


def test_known_values():
    assert ev("-cos(v) - x^3", x=2.0) == -9.0
    assert ev("x - x^3", x=1.5) == -1.875
    assert ev("2^3^2") == 512.0
    assert ev("-2^2") == -4.0
    assert ev("(-2)^2") == 4.0
    assert ev("8 / 4 / 2") == 1.0
    assert ev("1 - 2 - 3") == -4.0
    assert ev("2 * -3") == -6.0
    assert ev("1.5e2 + .5") == 150.5
    assert ev("sqrt(abs(-16)) + sin(t)", t=math.pi / 2) == pytest.approx(5.0)


def test_tree_shape():
    assert parse_expression("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse_expression("x - v - t") == BinOp("-", BinOp("-", Var("x"), Var("v")), Var("t"))


@pytest.mark.parametrize("text,pos", [("x +", 3), ("2 $ 3", 2), ("(x", 2), ("x y", 2), ("sin x", 4), (")", 0)])
def test_syntax_errors_carry_offsets(text, pos):
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression(text)
    assert exc.value.position == pos
    assert exc.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as exc:
        parse_expression("x + y")
    assert exc.value.position == 4


def test_variable_is_not_a_function():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x(2)")


@pytest.mark.parametrize("text", ["1 / x", "sqrt(x - 1)", "x^0.5", "0^-1"])
def test_eval_errors(text):
    with pytest.raises(EvalError):
        ev(text, x=-0.0 if text == "1 / x" else -1.0)


def test_field_broadcasts_over_arrays():
    f = ExpressionField("-9.8")
    u = np.zeros((3, 4))
    assert f(u, u, 0.0).shape == (3, 4)
    g = ExpressionField("x * v")
    assert np.array_equal(g(np.arange(3.0), np.full(3, 2.0), 0.0), [0.0, 2.0, 4.0])


leaves = st.one_of(
    st.builds(Num, st.floats(0, 1e6, allow_nan=False, allow_infinity=False)),
    st.sampled_from([Var("x"), Var("v"), Var("t")]),
)
trees = st.recursive(
    leaves,
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from("+-*/^"), sub, sub),
        st.builds(Call, st.sampled_from(["sin", "cos", "sqrt", "abs"]), sub),
    ),
    max_leaves=12,
)


@settings(max_examples=300)
@given(trees)
def test_print_parse_round_trip(tree):
    text = to_text(tree)
    assert parse_expression(text) == tree
    assert to_text(parse_expression(text)) == text


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 10))
def test_agrees_with_python(x, v, t):
    text = "-0.02*v + x - x^3 + 0.02*cos(0.1*t)"
    assert ev(text, x, v, t) == pytest.approx(-0.02 * v + x - x**3 + 0.02 * math.cos(0.1 * t), abs=1e-12)
