import math

import numpy as np
import pytest
from scipy import special

from singtrace import dixmier
from singtrace.errors import DivergenceError, InvalidInputError
from singtrace.spectral_models import from_matrix, harmonic, oscillatory, resolvent, sqrt_harmonic, trace_class

FINITE = from_matrix(np.diag([3.0, 2.0, 1.0]))


# -------------------------------------------------------------- normalization


@pytest.mark.parametrize(
    "route, p, constant",
    [
        ("zeta", 1.0, 1.0),
        ("zeta", 2.0, 2.0),
        ("heat", 1.0, math.sqrt(math.pi) / 2),
        ("heat", 2.0, 1.0),
        ("heat", 3.0, special.gamma(2.5)),
        ("partial_sum", 2.0, 1.0),
        ("cutoff", 1.0, 1.0),
        ("stretched_cutoff", 1.5, 1.0),
    ],
)
def test_normalization_constant(route, p, constant):
    assert dixmier.normalization_constant(route, p) == pytest.approx(constant, rel=1e-15)


def test_normalize_divides():
    assert dixmier.normalize("zeta", 2.0, 2.0) == pytest.approx(1.0)


def test_unknown_route():
    with pytest.raises(InvalidInputError):
        dixmier.run_route("abel", harmonic())


# --------------------------------------------------------------------- routes


@pytest.mark.parametrize("model, expected", [(resolvent(), 1.0), (harmonic(), 1.0), (trace_class(), 0.0)])
def test_partial_sum_route(model, expected):
    band = dixmier.route_partial_sum(model)
    assert band.converged
    assert band.value == pytest.approx(expected, abs=1e-6)


def test_raw_partial_sum_ratio_at_1e8():
    g = dixmier.partial_sum_function(harmonic())
    L = math.log(1e8)
    assert float(harmonic().F_log(np.array([L]))[0]) / math.log1p(1e8) == pytest.approx(1.031, abs=1e-3)
    assert g.values[-1] < g.values[0]


@pytest.mark.parametrize("model, expected", [(resolvent(), 1.0), (FINITE, 0.0)])
def test_cutoff_route(model, expected):
    band = dixmier.route_cutoff(model)
    assert band.converged and band.value == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("C", [0.5, 1.0, 5.0])
def test_stretch_invariance(C):
    plain = dixmier.route_cutoff(harmonic())
    stretched = dixmier.route_cutoff(harmonic(), stretch=C)
    assert stretched.overlaps(plain, slack=5e-3)
    assert stretched.value == pytest.approx(1.0, abs=5e-3)


def test_zeta_route_residue():
    probe = dixmier.route_zeta(harmonic())
    assert probe.raw_limit == pytest.approx(1.0, abs=1e-6)


def test_zeta_route_p2():
    probe = dixmier.route_zeta(sqrt_harmonic(), p=2.0)
    assert probe.raw_limit == pytest.approx(2.0, abs=1e-3)
    assert probe.dixmier_value == pytest.approx(1.0, abs=1e-3)


def test_weighted_zeta_route():
    probe = dixmier.route_zeta(harmonic(weight=3.0), weighted=True)
    assert probe.dixmier_value == pytest.approx(3.0, abs=1e-5)


def test_zeta_linear_in_weight():
    a = dixmier.route_zeta(harmonic(weight="2 + sin(n)"), weighted=True).dixmier_value
    b = dixmier.route_zeta(harmonic(weight="1 + cos(n)^2"), weighted=True).dixmier_value
    ab = dixmier.route_zeta(harmonic(weight="3 + sin(n) + cos(n)^2"), weighted=True).dixmier_value
    assert ab == pytest.approx(a + b, abs=1e-9)
    assert a > 0 and b > 0


@pytest.mark.parametrize("s", [1.1, 1.3, 1.7, 2.0, 3.5])
def test_zeta_trace_property_banded_weight(s, rng):
    # for diagonal T only the diagonal of a banded A enters: tr(A T^s) = tr(T^s A) = sum A_nn mu_n^s
    n = 400
    mu = 1.0 / np.arange(1, n + 1)
    A = np.diag(rng.uniform(1, 2, n)) + np.diag(rng.normal(size=n - 1), 1) + np.diag(rng.normal(size=n - 2), -2)
    Ts = np.diag(mu**s)
    left, right = np.trace(A @ Ts), np.trace(Ts @ A)
    assert left == right
    assert left == pytest.approx(math.fsum(np.diag(A) * mu**s), rel=1e-14)


def test_heat_route_raw_and_normalized():
    probe = dixmier.route_heat(harmonic())
    assert probe.raw_limit == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-4)
    assert probe.dixmier_value == pytest.approx(1.0, abs=1e-4)


def test_heat_route_p2():
    probe = dixmier.route_heat(sqrt_harmonic(), p=2.0)
    assert probe.dixmier_value == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("route", ["zeta", "heat"])
def test_finite_rank_spectral_routes_vanish(route):
    band, _ = dixmier.run_route(route, FINITE)
    assert band.converged and abs(band.value) <= 1e-6


def test_not_in_ideal_rejected():
    with pytest.raises(DivergenceError):
        dixmier.route_partial_sum(sqrt_harmonic())


# ---------------------------------------------------------------------- agree


def test_agree_harmonic():
    rep = dixmier.agree(harmonic(), tol=5e-3)
    assert rep.agreed and rep.all_converged
    assert rep.consensus_value == pytest.approx(1.0, abs=5e-3)


def test_agree_trace_class():
    rep = dixmier.agree(trace_class(), tol=1e-6, route_tols={r: 1e-6 for r in dixmier.ROUTES})
    assert rep.agreed and abs(rep.consensus_value) <= 1e-6


def test_agree_oscillatory_bands():
    rep = dixmier.agree(oscillatory(0.4))
    assert rep.agreed and not any(b.converged for b in rep.route_bands.values())
    for route in ("partial_sum", "cutoff", "stretched_cutoff"):
        band = rep.route_bands[route]
        assert band.liminf_est == pytest.approx(0.6, abs=0.02)
        assert band.limsup_est == pytest.approx(1.4, abs=0.02)
    # Abel-type means damp the oscillation: the zeta and heat bands are strictly narrower
    assert rep.route_bands["zeta"].band_width < 0.7
    assert rep.route_bands["heat"].band_width < 0.7


def test_weighted_agree_restricts_routes():
    with pytest.raises(InvalidInputError):
        dixmier.agree(harmonic(weight=3.0), routes=dixmier.ROUTES)
    rep = dixmier.agree(harmonic(weight=3.0), routes=dixmier.WEIGHTED_ROUTES, tol=1e-5)
    assert rep.consensus_value == pytest.approx(3.0, abs=1e-5)


def test_cesaro_collapse():
    band = dixmier.cesaro_collapse(oscillatory(0.4))
    assert band.liminf_est >= 0.99 and band.limsup_est <= 1.01


def test_subsequential_values_are_cluster_points():
    vals = dixmier.subsequential_values(oscillatory(0.4))
    assert sorted(vals.values()) == pytest.approx([0.6, 1.4], abs=1e-9)


# ------------------------------------------------------------------------ csv


def test_csv_deterministic_and_anchored():
    a = dixmier.agree(harmonic(), routes=("partial_sum", "zeta")).to_csv(11)
    b = dixmier.agree(harmonic(), routes=("partial_sum", "zeta")).to_csv(11)
    assert a == b
    lines = a.split("\r\n")
    assert lines[0] == ",".join(dixmier.CSV_FIELDS)
    assert all(line.startswith("1,11,") for line in lines[1:] if line)
    assert dixmier.ANCHORS["zeta"] in a
