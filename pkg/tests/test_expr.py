import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace.errors import ExpressionError
from singtrace.expr import Expression, parse, to_string


@pytest.mark.parametrize(
    "text, x, expected",
    [
        ("1/(n+1)", 3.0, 0.25),
        ("(n+1)^(-0.5)", 3.0, 0.5),
        ("2^3^2", 0.0, 512.0),
        ("-x^2", 3.0, -9.0),
        ("log(1+s)*(1+0.4*sin(log(log(s+e))))", math.e - math.e + 1.0, math.log(2) * (1 + 0.4 * math.sin(math.log(math.log(1 + math.e))))),
        ("sqrt(abs(x)) + cos(pi*x)", 4.0, 3.0),
        ("exp(-t)", 0.0, 1.0),
    ],
)
def test_evaluate(text, x, expected):
    assert Expression(text)(x) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("bad", ["", "1/(n+", "foo(x)", "x y", "n + s", "3 +* 4", "sin"])
def test_rejects_malformed(bad):
    with pytest.raises(ExpressionError):
        Expression(bad)


@pytest.mark.parametrize(
    "text, x, d1",
    [
        ("1/(n+1)", 2.0, -1.0 / 9.0),
        ("log(1+s)", 1.0, 0.5),
        ("x^3", 2.0, 12.0),
        ("sin(x)*exp(x)", 0.0, 1.0),
    ],
)
def test_first_derivative(text, x, d1):
    assert Expression(text).derivative(1)(x) == pytest.approx(d1, rel=1e-13)


def test_complex_symbol():
    ex = Expression("exp(2*pi*i*s)")
    assert ex.is_complex
    assert ex(0.25) == pytest.approx(1j)


def test_mpmath_far_outside_double_range():
    ex = Expression("1/(n+1)")
    val = ex.mp("1e400")
    assert float(val * 10**400) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.floats(-2, 2))
def test_polynomial_derivative_matches_numpy(coeffs, x):
    text = " + ".join(f"({c})*x^{k}" for k, c in enumerate(coeffs))
    ex = Expression(text)
    poly = np.polynomial.Polynomial(coeffs)
    assert ex(x) == pytest.approx(poly(x), abs=1e-9)
    assert ex.derivative(1)(x) == pytest.approx(poly.deriv()(x), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_round_trip_through_text(a, b):
    ex = Expression(f"{a!r}*log(x) + {b!r}/x")
    again = Expression(to_string(parse(ex.text)))
    assert again(2.5) == pytest.approx(ex(2.5), rel=1e-14)
