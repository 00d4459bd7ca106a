import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace.errors import InsufficientDataError, ModelDomainError
from singtrace.means import (
    GridFunction,
    cesaro_mean,
    commutator_residuals,
    hardy_mean,
    limit_band,
    transform,
)


def sampled(f, lo=10.0, hi=1e12, per_decade=64):
    return GridFunction.sample(f, lo, hi, per_decade)


# ------------------------------------------------------------------ Hardy mean


@pytest.mark.parametrize("c", [0.0, 1.0, -3.5])
def test_hardy_mean_of_constant(c):
    H = hardy_mean(sampled(lambda x: c + 0 * x, 1e-2, 1e3))
    assert np.allclose(H.values, c, atol=1e-13)


def test_hardy_mean_of_identity_is_half():
    f = sampled(lambda x: x, 1e-2, 1e3, 16)
    H = hardy_mean(f)
    assert np.allclose(H.values, 0.5 * f.x, rtol=1e-12)


def test_hardy_mean_of_sine_at_pi():
    H = hardy_mean(sampled(np.sin, 1e-2, 10.0, 16))
    assert H.func(np.array([math.log(math.pi)]))[0] == pytest.approx(2.0 / math.pi, abs=1e-6)


# ----------------------------------------------------------------- Cesaro mean


@pytest.mark.parametrize("c", [1.0, 7.0])
def test_cesaro_mean_of_constant(c):
    M = cesaro_mean(sampled(lambda s: c + 0 * s, 1.5, 1e8))
    assert np.allclose(M.values, c, rtol=1e-12)


def test_cesaro_mean_kills_log_periodic_sine():
    L = math.log(100)
    M = cesaro_mean(sampled(lambda s: np.sin(2 * math.pi * np.log(s) / L), 1.0001, 1e8))
    assert abs(M.values[-1]) <= 0.05


def test_cesaro_mean_of_indicator():
    g = sampled(lambda s: (np.asarray(s) <= math.e).astype(float), 1.0001, math.exp(10))
    M = cesaro_mean(g, quadrature="gauss")
    assert M.values[-1] == pytest.approx(0.1, abs=1e-12)


def test_cesaro_mean_rejects_t_below_one():
    with pytest.raises(ModelDomainError):
        cesaro_mean(sampled(lambda s: s, 0.5, 10.0))


# ------------------------------------------------------------------- transforms


def test_dilate_by_one_is_identity():
    f = sampled(lambda x: np.sin(x), 1.0, 100.0)
    assert np.array_equal(transform(f, "dilate", a=1.0).values, f.values)


def test_dilate_square():
    f = sampled(lambda x: x**2, 1.0, 100.0)
    g = transform(f, "dilate", a=3.0)
    assert g.func(np.array([math.log(2.0)]))[0] == pytest.approx(36.0, rel=1e-13)


def test_power_of_log():
    f = sampled(np.log, 1.0, 100.0)
    g = transform(f, "power", a=2.0)
    assert g.func(np.array([1.0]))[0] == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("kind", ["dilate", "power"])
@pytest.mark.parametrize("a", [0.0, -1.0])
def test_nonpositive_parameter_rejected(kind, a):
    with pytest.raises(ModelDomainError):
        transform(sampled(np.log, 1.0, 100.0), kind, a=a)


def test_log_and_exp_substitute_round_trip():
    f = sampled(lambda x: 1.0 / np.log(x), 10.0, 1e12)
    back = transform(transform(f, "log_substitute"), "exp_substitute")
    assert np.allclose(back.log_x, f.log_x, rtol=1e-14)
    assert np.array_equal(back.values, f.values)


# ------------------------------------------------------------ commutator residuals


def test_constant_has_no_residuals():
    rep = commutator_residuals(sampled(lambda x: 1.0 + 0 * x), 2.0, 3.0)
    assert rep.translate_tail <= 1e-12
    assert rep.dilate_tail <= 1e-12
    assert rep.max_identity_error <= 1e-12


def test_translation_residual_of_sine():
    # the residual is bounded by 2 sup|f| |b| / (t + b); on the last decade t >= 10^3
    rep = commutator_residuals(sampled(np.sin, 10.0, 1e4), 1.0, 5.0, identities=False)
    assert rep.translate_tail <= 2 * 5.0 / (1e3 + 5.0) + 1e-9
    assert rep.translate_tail == pytest.approx(7.161012003165941e-4, rel=1e-6)


@pytest.mark.parametrize("t_max", [1e6, 1e20])
def test_dilation_residual_decays_like_inverse_log(t_max):
    # f(x) = sin(2 pi ln x / ln 4): M D_2 f - D_2 M f is about (ln 4 / pi) / ln t,
    # so it only reaches 0.01 near t = 1e19 (not at 1e6)
    f = sampled(lambda x: np.sin(2 * math.pi * np.log(x) / math.log(4)), 10.0, t_max)
    rep = commutator_residuals(f, 2.0, 0.0, identities=False)
    bound = math.log(4) / math.pi / math.log(rep.t_tail[0])
    assert rep.dilate_tail <= 1.05 * bound
    assert rep.dilate_tail >= 0.9 * bound


def test_dilation_residual_frozen_values():
    f = sampled(lambda x: np.sin(2 * math.pi * np.log(x) / math.log(4)), 10.0, 1e6)
    assert commutator_residuals(f, 2.0, 0.0, identities=False).dilate_tail == pytest.approx(0.03769488125138784, rel=1e-8)


# ----------------------------------------------------------------- limit_band


def test_inverse_log_approach_converges():
    band = limit_band(sampled(lambda t: 1 + 0.577 / np.log(t)), 1e-3, "richardson_log")
    assert band.converged
    assert band.value == pytest.approx(1.0, abs=1e-3)


def test_log_periodic_oscillation_does_not_converge():
    band = limit_band(sampled(lambda t: 1 + 0.5 * np.sin(2 * math.pi * np.log(t) / math.log(100))), 1e-3, "raw_tail")
    assert not band.converged
    assert band.liminf_est == pytest.approx(0.5, abs=0.02)
    assert band.limsup_est == pytest.approx(1.5, abs=0.02)


def test_constant_band_is_exact():
    band = limit_band(sampled(lambda t: 7.0 + 0 * t), 1e-3)
    assert band.converged and band.value == 7.0 and band.band_width == 0.0


def test_too_few_decades():
    with pytest.raises(InsufficientDataError):
        limit_band(sampled(lambda t: 1.0 + 0 * t, 10.0, 1e3), 1e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-3, 3))
def test_richardson_removes_inverse_log_terms(c0, c1):
    band = limit_band(sampled(lambda t: c0 + c1 / np.log(t)), 1e-6, "richardson_log")
    assert band.converged
    assert band.value == pytest.approx(c0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-2, 2))
def test_band_scaling(factor, shift):
    band = limit_band(sampled(lambda t: shift + np.sin(np.log(np.log(t)))), 1e-6, "raw_tail")
    scaled = band.scaled(factor)
    assert scaled.liminf_est == pytest.approx(factor * band.liminf_est)
    assert scaled.band_width == pytest.approx(factor * band.band_width)
