import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace.errors import DivergenceError, InvalidInputError, ModelDomainError
from singtrace.spectral_models import (
    IdealParams,
    SpectralModel,
    TailLaw,
    closed_form,
    diagonal,
    distribution,
    distribution_growth_check,
    from_matrix,
    harmonic,
    ideal_norm,
    oscillatory,
    power_integral_check,
    resolvent,
    sqrt_harmonic,
    submajorizes,
    trace_class,
)


@pytest.fixture(scope="module")
def diag321():
    return from_matrix(np.diag([3.0, 2.0, 1.0]))


# ----------------------------------------------------------------- mu and F


def test_matrix_step_convention():
    assert from_matrix(np.diag([3.0, 1.0, 2.0])).mu_at(1.5) == 2.0


def test_closed_form_mu():
    assert resolvent().mu_at(9.0) == pytest.approx(0.1, rel=1e-15)


def test_diagonal_mu_sorted():
    assert sqrt_harmonic().mu_at(3.2) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize(
    "model, t, expected, rel",
    [
        (resolvent(), math.e - 1, 1.0, 1e-14),
        (from_matrix(np.diag([3.0, 2.0, 1.0])), 10.0, 6.0, 0.0),
        (harmonic(), 10.0, 2.9289682539682538, 1e-14),
    ],
)
def test_integral_mu(model, t, expected, rel):
    assert model.integral_mu(t) == pytest.approx(expected, rel=rel)


def test_integral_far_beyond_double_range():
    F = resolvent().F_log(np.array([300 * math.log(10)]))[0]
    assert F == pytest.approx(690.776, abs=5e-4)


# -------------------------------------------------------------- distribution


@pytest.mark.parametrize(
    "model, u, count",
    [
        (harmonic(), 0.3, 3.0),
        (harmonic(), 2.0, 0.0),
        (resolvent(), 2.0, 0.0),
        (from_matrix(np.diag([3.0, 1.0, 2.0])), 0.5, 3.0),
        (harmonic(), 0.01, 99.0),
    ],
)
def test_distribution_counts(model, u, count):
    assert model.distribution_at(u) == count


def test_distribution_continuous():
    assert resolvent().distribution_at(1e-6) == pytest.approx(1e6 - 1, rel=1e-12)


@pytest.mark.parametrize(
    "u, expected",
    [(0.3, 1 + 1 / 2 + 1 / 3), (2.0, 0.0), (0.01, 5.177377517639621), (1e-5, 12.090146129863427)],
)
def test_cutoff_trace_harmonic(u, expected):
    assert harmonic().cutoff_trace(u) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_cutoff_trace_resolvent_is_log():
    assert resolvent().cutoff_trace(1e-4) == pytest.approx(math.log(1e4), rel=1e-12)


def test_cutoff_identity_random_thresholds(rng):
    h = harmonic()
    for u in 10.0 ** rng.uniform(-5, -0.01, 50):
        direct = math.fsum(1.0 / (n + 1) for n in range(int(2 / u)) if 1.0 / (n + 1) > math.exp(math.log(u)))
        assert h.cutoff_trace(u) == pytest.approx(direct, rel=1e-9)


def test_galois_duality():
    d = distribution(harmonic())
    assert d.galois_violations(np.linspace(0, 50, 30), np.logspace(-3, 0, 30)) == []


# -------------------------------------------------------------------- ideals


def test_resolvent_ideal_norm():
    out = ideal_norm(resolvent(), IdealParams(1.0))
    assert out.in_ideal
    assert out.norm_estimate == pytest.approx(1.0, abs=1e-9)
    assert out.small_ideal_C == pytest.approx(1.0, abs=1e-9)


def test_sqrt_model_ideals():
    assert ideal_norm(sqrt_harmonic(), IdealParams(2.0)).in_ideal
    assert not ideal_norm(sqrt_harmonic(), IdealParams(1.0)).in_ideal


def test_finite_rank_norm_is_finite(diag321):
    assert math.isfinite(ideal_norm(diag321, IdealParams(1.5)).norm_estimate)


def test_ideal_exponent_below_one_rejected():
    with pytest.raises(InvalidInputError):
        IdealParams(0.5)


# --------------------------------------------------------------- zeta / heat


def test_zeta_at_two():
    assert harmonic().zeta(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-13)


def test_zeta_two_tail_cutoffs_agree():
    h = harmonic()
    assert h.zeta(2.0, n_direct=10**6) == pytest.approx(h.zeta(2.0), rel=1e-10)


def test_weighted_zeta_linear():
    assert harmonic(weight=2.0).zeta(2.0, weighted=True) == pytest.approx(math.pi**2 / 3, rel=1e-13)


def test_zeta_finite_rank(diag321):
    assert diag321.zeta(1.0) == 6.0


def test_zeta_at_abscissa_raises():
    with pytest.raises(DivergenceError) as info:
        harmonic().zeta(1.0)
    assert info.value.abscissa == 1.0


def test_heat_trace_theta_oracle():
    assert harmonic().heat_trace(10.0) == pytest.approx(math.sqrt(math.pi) * 10 / 2 - 0.5, rel=1e-12)


def test_heat_trace_geometric():
    assert sqrt_harmonic().heat_trace(100.0, p=2.0) == pytest.approx(1 / math.expm1(0.01), rel=1e-12)


def test_heat_trace_finite_rank_small_lambda(diag321):
    assert diag321.heat_trace(1e-3) == 0.0


# ------------------------------------------------------------ submajorization


def test_submajorization_scaled():
    two = closed_form("2/(1+s)", TailLaw(2.0, 1.0))
    assert submajorizes(resolvent(), two, np.logspace(-1, 8, 50))[0]


def test_submajorization_order(diag321):
    flat = from_matrix(np.diag([2.0, 2.0, 2.0]))
    assert not submajorizes(diag321, flat, [1, 2, 3])[0]
    assert submajorizes(flat, diag321, [1, 2, 3])[0]


@pytest.mark.parametrize("model", [harmonic(), resolvent(), trace_class()])
def test_submajorization_reflexive(model):
    assert submajorizes(model, model, np.logspace(0, 6, 20))[0]


# ------------------------------------------------------------ property checks


def test_power_integral_equality_for_resolvent():
    rep = power_integral_check(resolvent(), [1.0, 1.5, 2.0])
    assert rep.passed and rep.worst == pytest.approx(1.0, abs=1e-12)


def test_power_integral_harmonic():
    assert power_integral_check(harmonic(), [2.0]).passed


def test_power_integral_finite_rank_saturates(diag321):
    rep = power_integral_check(diag321, [1.5])
    assert rep.passed and rep.details["ratios"][1.5] < 1.0


@pytest.mark.parametrize(
    "model, C, holds_from",
    [
        (resolvent(), 1.1, 1.2589254117941673),
        (diagonal("1/((n+1)*log(n+2))", tail_law=TailLaw(1 / math.log(2), 1.0)), 2.0, 1.4531273098789956),
        (from_matrix(np.diag([3.0, 2.0, 1.0])), 1.0, 2.9772958326031853),
    ],
)
def test_distribution_growth(model, C, holds_from):
    rep = distribution_growth_check(model, C)
    assert rep.passed
    assert rep.details["holds_from"] == pytest.approx(holds_from, rel=1e-12)


# --------------------------------------------------------------- validation


def test_missing_tail_law_rejected():
    with pytest.raises(InvalidInputError):
        diagonal("1/(n+1)")


def test_domain_error_reported():
    with pytest.raises(ModelDomainError):
        closed_form("log(s-1)", TailLaw(1.0, 1.0))


def test_increasing_sequence_rejected():
    with pytest.raises(InvalidInputError):
        diagonal("n+1", tail_law=TailLaw(1.0, 1.0))


def test_from_dict_round_trip():
    doc = {"kind": "diagonal_sequence", "expression": "1/(n+1)", "tail_law": {"c": 1, "q": 1}, "name": "h"}
    m = SpectralModel.from_dict(doc)
    assert m.name == "h" and m.zeta(2.0) == pytest.approx(math.pi**2 / 6)


@pytest.mark.parametrize("doc", [[], {"kind": "nope"}, {"kind": "diagonal_sequence", "tail_law": {"c": 1}}])
def test_from_dict_rejects(doc):
    with pytest.raises(InvalidInputError):
        SpectralModel.from_dict(doc)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=12))
def test_matrix_model_monotone(values):
    m = from_matrix(np.diag(values))
    t = np.linspace(0, len(values) + 2, 25)
    mu = np.array([m.mu_at(x) for x in t])
    F = np.array([m.integral_mu(x) for x in t])
    assert np.all(np.diff(mu) <= 1e-15)
    assert np.all(np.diff(F) >= -1e-12)
    assert F[-1] == pytest.approx(sum(values), rel=1e-12, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0))
def test_oscillatory_F_is_concave_on_grid(scale):
    m = oscillatory(0.4)
    L = np.linspace(1.0, 30.0, 41) * scale
    F = m.F_log(L)
    assert np.all(np.diff(F) >= 0)
