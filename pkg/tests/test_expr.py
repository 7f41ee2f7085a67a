import numpy as np
import pytest
from hypothesis import given, strategies as st

from czcurve.expr import ExpressionError, compile_expression, tokenize


def ev(text, x, dim=2):
    return compile_expression(text, dim)(np.asarray(x, dtype=float))


def test_riesz_expression():
    assert ev("x[1]/norm^2", [[3.0, 4.0]])[0] == pytest.approx(0.12, rel=1e-15)


def test_precedence_and_associativity():
    assert ev("1 + 2 * 3", [[0, 0]])[0] == 7.0
    assert ev("2^3^2", [[0, 0]])[0] == 512.0
    assert ev("-2^2", [[0, 0]])[0] == -4.0
    assert ev("(1 + 2) * 3", [[0, 0]])[0] == 9.0
    assert ev("8 / 4 / 2", [[0, 0]])[0] == 1.0


def test_functions_and_constants():
    x = np.array([[0.5, -2.0]])
    assert ev("abs(x[2]) + max(x[1], 1) + min(x[1], 1)", x)[0] == 2.0 + 1.0 + 0.5
    assert ev("cos(pi)", x)[0] == -1.0
    assert ev("sign(x[2])", x)[0] == -1.0
    assert ev("1.5e-1 + .5", x)[0] == pytest.approx(0.65)


def test_custom_norm():
    f = compile_expression("norm", 2, lambda x: np.max(np.abs(x), axis=-1))
    assert f(np.array([[3.0, -4.0]]))[0] == 4.0


def test_broadcast_constant():
    out = ev("2", np.zeros((5, 2)))
    assert out.shape == (5,) and np.all(out == 2.0)


@pytest.mark.parametrize("text,offset", [("x[1] +", 6), ("x[3]", 2), ("1 $ 2", 2), ("foo(1)", 0),
                                         ("(1", 2), ("max(1)", 0)])
def test_errors_carry_offset(text, offset):
    with pytest.raises(ExpressionError, match=f"offset {offset}"):
        compile_expression(text, 2)


def test_depth_and_length_limits():
    with pytest.raises(ExpressionError):
        compile_expression("(" * 200 + "1" + ")" * 200, 2)
    with pytest.raises(ExpressionError):
        tokenize("1+" * 3000 + "1")


def test_wrong_dimension_input():
    with pytest.raises(ExpressionError):
        compile_expression("1", 0)
    f = compile_expression("x[1]", 2)
    with pytest.raises(Exception):
        f(np.zeros((3, 3)))


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_arithmetic_matches_python(a, b, c):
    x = np.array([[a, b, c]])
    got = ev("x[1] * x[2] - x[3] + x[1]", x, dim=3)[0]
    assert got == a * b - c + a
