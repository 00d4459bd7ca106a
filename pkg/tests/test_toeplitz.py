import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace import InvalidInputError, ModelDomainError
from singtrace.errors import InconclusiveError, InsufficientDataError
from singtrace import toeplitz as tp

M = tp.ToeplitzModel


def shifted_circle():
    return tp.unitarize(M(expression="exp(2*pi*i*s) - 0.5"))


# --------------------------------------------------------------------- model


def test_symbol_evaluation_and_derivative():
    u = M(coeffs={1: 1.0, -2: 0.5j})
    s = np.linspace(0, 1, 7)
    np.testing.assert_allclose(u(s), np.exp(2j * np.pi * s) + 0.5j * np.exp(-4j * np.pi * s), atol=1e-14)
    h = 1e-6
    fd = (u(s + h) - u(s - h)) / (2 * h)
    np.testing.assert_allclose(u.derivative(s), fd, rtol=1e-7, atol=1e-7)


def test_unitarized_derivative_matches_finite_difference():
    u = shifted_circle()
    s = np.linspace(0.05, 0.95, 9)
    h = 1e-6
    fd = (u(s + h) - u(s - h)) / (2 * h)
    np.testing.assert_allclose(u.derivative(s), fd, rtol=1e-6, atol=1e-6)
    assert u.unitary_defect() < 1e-14


def test_fourier_of_expression_symbol():
    u = M(expression="exp(2*pi*i*s) + 0.25")
    c = u.fourier(3)
    np.testing.assert_allclose(c, [0, 0, 0, 0.25, 1, 0, 0], atol=1e-13)


@pytest.mark.parametrize(
    "kw, err",
    [
        ({}, InvalidInputError),
        ({"coeffs": {0: 1}, "expression": "1"}, InvalidInputError),
        ({"coeffs": {0.5: 1}}, InvalidInputError),
        ({"coeffs": {0: float("nan")}}, InvalidInputError),
        ({"coeffs": {0: 1, 1: 1}}, ModelDomainError),
        ({"expression": "exp(2*pi*i*s) - 1"}, ModelDomainError),
    ],
)
def test_bad_symbols(kw, err):
    with pytest.raises(err):
        M(**kw)


def test_from_dict_variants():
    a = M.from_dict({"fourier_coeffs": [[3, 1, 0]]})
    assert a.coeffs == {3: 1 + 0j}
    with pytest.raises(InvalidInputError):
        M.from_dict({"fourier_coeffs": [[3, "x"]]})
    with pytest.raises(InvalidInputError):
        M.from_dict({"name": "empty"})


# ------------------------------------------------------------------ winding


@pytest.mark.parametrize(
    "model, w",
    [(M.monomial(3), 3), (M.monomial(-2), -2), (M(coeffs={0: 1}), 0), (shifted_circle(), 1),
     (tp.unitarize(M(coeffs={0: 2, 1: 1})), 0)],
)
def test_winding(model, w):
    assert tp.winding_number(model) == w


@pytest.mark.parametrize("n", [-2, 1, 3])
def test_lesch_index_is_minus_winding(n):
    assert tp.lesch_index(M.monomial(n)) == pytest.approx(-n, abs=1e-8)


def test_lesch_index_shifted_circle():
    assert tp.lesch_index(shifted_circle()) == pytest.approx(-1, abs=1e-8)


def test_lesch_index_additive_on_products():
    assert tp.lesch_index(M.monomial(1) * M.monomial(2)) == pytest.approx(-3, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(-6, 6))
def test_adjoint_negates_index(n):
    u = M.monomial(n)
    assert tp.lesch_index(u.adjoint()) == pytest.approx(-tp.lesch_index(u), abs=1e-8)


def test_lesch_needs_unitary_symbol():
    with pytest.raises(InvalidInputError):
        tp.lesch_index(M(coeffs={0: 2, 1: 1}))


def test_products_need_trig_symbols():
    with pytest.raises(InvalidInputError):
        M.monomial(1) * shifted_circle()


# -------------------------------------------------------------- near kernel


def test_toeplitz_section_entries():
    T = tp.toeplitz_matrix(M(coeffs={1: 2.0, -1: 3.0}), 4)
    np.testing.assert_allclose(T, np.diag([2.0] * 3, -1) + np.diag([3.0] * 3, 1))


def test_near_kernel_of_double_shift():
    k = tp.truncated_near_kernel(M.monomial(2), N=128)
    assert k.count == 2
    assert k.sign_hint == -2


@pytest.mark.parametrize("model", [M(coeffs={0: 1}), tp.unitarize(M(coeffs={0: 2, 1: 1}))])
def test_near_kernel_empty_for_zero_winding(model):
    assert tp.truncated_near_kernel(model, N=64).count == 0


@pytest.mark.parametrize("N", [48, 100])
def test_near_kernel_size_validated(N):
    with pytest.raises(InvalidInputError):
        tp.truncated_near_kernel(M.monomial(1), N=N)


# --------------------------------------------------------------- zeta index


def test_zeta_index_of_shift():
    z = tp.zeta_index(M.monomial(1))
    assert z.diagonal == pytest.approx(-1.0, abs=1e-14)
    assert z.band.converged
    assert z.band.value == pytest.approx(-1.0, abs=1e-3)


def test_zeta_index_of_mixed_unitarized_symbol():
    z = tp.zeta_index(tp.unitarize(M(coeffs={1: 1, -1: 0.1})))
    assert z.band.value == pytest.approx(-1.0, abs=5e-2)


def test_zeta_index_needs_unitary():
    with pytest.raises(InvalidInputError):
        tp.zeta_index(M(coeffs={0: 2, 1: 1}))


# ------------------------------------------------------------- crossed trace


def test_crossed_trace_gaussian():
    res = tp.crossed_trace_check(2.0, lambda x: np.exp(-x * x))
    assert res.rhs == pytest.approx(2 * math.sqrt(math.pi), rel=1e-12)
    assert res.rel_err < 1e-10


def test_crossed_trace_modulated_gaussian():
    res = tp.crossed_trace_check(1.0, lambda x: np.exp(-x * x / 2) * np.cos(x))
    assert res.rhs == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-0.5), rel=1e-12)
    assert res.rel_err < 1e-10


def test_crossed_trace_zero_scalar():
    res = tp.crossed_trace_check(0.0, lambda x: np.exp(-x * x))
    assert res.lhs == res.rhs == 0.0


@pytest.mark.parametrize("a", [-1.5, 0.5, 3.0])
def test_crossed_trace_linear_in_scalar(a):
    f = lambda x: np.exp(-x * x / 2)  # noqa: E731
    one = tp.crossed_trace_check(1.0, f)
    res = tp.crossed_trace_check(a, f)
    assert res.lhs == pytest.approx(a * one.lhs, rel=1e-14)


def test_crossed_trace_coverage_checked():
    with pytest.raises(InsufficientDataError):
        tp.crossed_trace_check(1.0, lambda x: np.exp(-x * x), grid=tp.GridHalfLine(Lambda=3.0))
    assert issubclass(InsufficientDataError, InconclusiveError)


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        tp.GridHalfLine(h=0.0)
    with pytest.raises(InvalidInputError):
        tp.GridHalfLine(h=1e-8, Lambda=40.0)
