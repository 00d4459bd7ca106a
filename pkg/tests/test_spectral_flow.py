import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace import InvalidInputError, ModelDomainError
from singtrace.errors import DegenerateCrossingError
from singtrace import spectral_flow as sf


def scalar_path():
    """D_t = t - 1/2 on C^1: one eigenvalue crosses upward."""
    return sf.OperatorPath("matrix", D0=[[-0.5]], A=[[1.0]])


def random_matrix_path(seed, dim=16):
    rng = np.random.default_rng(seed)
    g, h = rng.standard_normal((2, dim, dim))
    return sf.OperatorPath("matrix", D0=0.5 * (g + g.T), A=0.5 * (h + h.T))


# ------------------------------------------------------------------ constants


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9, 3.0, 7.5])
def test_ctilde_closed_form_matches_quadrature(p):
    assert abs(sf.ctilde(p) - sf.ctilde_quadrature(p)) <= 1e-10 * sf.ctilde(p)


def test_ctilde_known_values():
    # p = 2 gives int dx / (1 + x^2) = pi, p = 3 gives 2
    assert sf.ctilde(2.0) == pytest.approx(math.pi, rel=1e-14)
    assert sf.ctilde(3.0) == pytest.approx(2.0, rel=1e-14)


def test_ctilde_domain():
    with pytest.raises(ModelDomainError):
        sf.ctilde(1.0)


def test_lattice_trace_against_direct_sum():
    p, x = 1.5, 0.3
    k = np.arange(-200000, 200001, dtype=float)
    direct = math.fsum((1 + (k - x) ** 2) ** (-p / 2))
    # the direct truncation misses ~ 2 * 200000^(1-p)/(p-1)
    missing = 2 * 200000 ** (1 - p) / (p - 1)
    assert sf.lattice_trace(x, p, 2000) == pytest.approx(direct + missing, rel=1e-6)


def test_lattice_trace_is_periodic():
    a = sf.lattice_trace(0.25, 1.3, 1000)
    b = sf.lattice_trace(1.25, 1.3, 1000)
    assert a == pytest.approx(b, rel=1e-12)


# ------------------------------------------------------------------ counting


def test_scalar_path_counts_one():
    path = scalar_path()
    assert sf.sf_crossings(path).value == 1
    assert sf.sf_partition(path).value == 1
    [c] = sf.sf_crossings(path).crossings
    assert c.direction == 1 and 0.45 < c.t < 0.55


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lattice_flow_is_minus_n(n):
    path = sf.OperatorPath.lattice(n, 2000)
    assert sf.sf_crossings(path).value == -n
    assert sf.sf_partition(path).value == -n


def test_constant_path_has_no_flow():
    path = sf.OperatorPath("matrix", D0=np.diag([-1.0, 2.0]), A=np.zeros((2, 2)))
    assert sf.sf_crossings(path).value == 0
    assert sf.sf_partition(path).value == 0


def test_reparametrization_invariance():
    path = scalar_path()
    assert sf.sf_crossings(path, reparam=lambda s: s * s).value == 1
    assert sf.sf_partition(path, reparam=lambda s: s * s).value == 1
    lat = sf.OperatorPath.lattice(2, 500)
    assert sf.sf_partition(lat, reparam=lambda s: s**3).value == -2


def test_tangential_touch_is_degenerate():
    # lower eigenvalue 0.1 - sqrt((t - 1/2)^2 + 0.01) touches zero at t = 1/2
    d = 0.1
    path = sf.OperatorPath("matrix", D0=[[-0.5 + d, d], [d, 0.5 + d]], A=[[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(DegenerateCrossingError):
        sf.sf_crossings(path)


@pytest.mark.parametrize("grid", [[0.0, 0.5], [0.2, 1.0], [0.0, 0.6, 0.4, 1.0]])
def test_bad_grids_rejected(grid):
    with pytest.raises(InvalidInputError):
        sf.sf_crossings(scalar_path(), t_samples=grid)
    with pytest.raises(InvalidInputError):
        sf.sf_partition(scalar_path(), partition=grid)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_crossings_and_partition_agree_on_random_paths(seed):
    path = random_matrix_path(seed, 6)
    assert sf.sf_crossings(path).value == sf.sf_partition(path).value


# ------------------------------------------------------------------ integral


def test_integral_with_endpoint_term_on_scalar_path():
    res = sf.sf_integral(scalar_path(), p=1.5)
    assert res.converged
    assert res.value == pytest.approx(1.0, abs=0.05)
    # the bare integral is far from 1; the endpoint term supplies the rest
    assert res.integral == pytest.approx(0.1801191479536786, rel=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_integral_on_lattice(n):
    res = sf.sf_integral(sf.OperatorPath.lattice(n, 2000), p=1.5)
    assert res.endpoint_correction == 0.0
    assert res.value == pytest.approx(-n, abs=0.02)


def test_integral_matches_count_on_random_matrix():
    path = random_matrix_path(0)
    assert sf.sf_integral(path).value == pytest.approx(sf.sf_crossings(path).value, abs=0.02)


@pytest.mark.parametrize("p", [1.0, 2.0, 0.5])
def test_integral_rejects_p_outside_interval(p):
    with pytest.raises(ModelDomainError):
        sf.sf_integral(scalar_path(), p=p)


# ---------------------------------------------------------------------- zeta


@pytest.mark.parametrize("n", [0, 1, 2])
def test_zeta_flow(n):
    band = sf.sf_zeta(sf.OperatorPath.lattice(n, 2000)).band
    assert band.converged
    assert band.value == pytest.approx(-n, abs=5e-3)


def test_zeta_flow_needs_lattice():
    with pytest.raises(InvalidInputError):
        sf.sf_zeta(scalar_path())


# -------------------------------------------------------------- sweep


def test_sweep_vanishes_without_perturbation():
    path = sf.OperatorPath("matrix", D0=np.diag([-1.0, 0.0, 3.0]), A=np.zeros((3, 3)))
    assert sf.resolvent_difference_sweep(path).sup == 0.0


def test_sweep_is_finite_on_random_matrix():
    rep = sf.resolvent_difference_sweep(random_matrix_path(0))
    assert rep.finite
    assert rep.values.shape == (11, 7)


def test_sweep_stable_in_cutoff():
    ok, sups = sf.sweep_stability()
    assert ok
    assert sups[-1] == pytest.approx(0.011447313400349657, rel=1e-9)


def test_sweep_p_grid_validated():
    with pytest.raises(InvalidInputError):
        sf.resolvent_difference_sweep(scalar_path(), p_grid=[1.5])


# ---------------------------------------------------------------- paths


def test_unitary_generates_perturbation():
    D0 = np.diag([0.0, 1.0])
    u = np.array([[0.0, 1.0], [1.0, 0.0]])
    path = sf.OperatorPath("matrix", D0=D0, u=u)
    np.testing.assert_allclose(path.A, np.diag([1.0, -1.0]))


@pytest.mark.parametrize(
    "kw",
    [
        {"kind": "circle"},
        {"kind": "lattice", "n": 1},
        {"kind": "lattice", "n": 5, "K": 4},
        {"kind": "matrix", "D0": [[0.0, 1.0], [0.0, 0.0]], "A": np.eye(2)},
        {"kind": "matrix", "D0": np.eye(2)},
        {"kind": "matrix", "D0": np.eye(2), "u": 2 * np.eye(2)},
    ],
)
def test_bad_paths_rejected(kw):
    with pytest.raises(InvalidInputError):
        sf.OperatorPath(**kw)


def test_report_agrees_on_lattice():
    rep = sf.sf_report(sf.OperatorPath.lattice(2, 2000))
    assert rep.agreement
    assert rep.sf_crossings == rep.sf_partition == -2
