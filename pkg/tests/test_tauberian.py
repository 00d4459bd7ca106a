import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singtrace import tauberian as ta
from singtrace.errors import InvalidInputError, ModelDomainError
from singtrace.spectral_models import harmonic


@pytest.mark.parametrize(
    "measure, r, expected",
    [
        (ta.unit_jumps(), 100.0, 1.0 / math.expm1(0.01)),
        (ta.linear(), 7.0, 7.0),
        (ta.StieltjesMeasure("jump_sequence", jumps=[[2.0, 5.0]]), 1.0, 5.0 * math.exp(-2.0)),
    ],
)
def test_laplace_stieltjes_oracles(measure, r, expected):
    assert measure.laplace_stieltjes(r) == pytest.approx(expected, rel=1e-12)


def test_unit_jump_ratios_at_1e6():
    u = ta.unit_jumps()
    r = 1e6
    gap = abs(u.laplace_stieltjes(r) / r - float(u.beta(np.array([r]))[0]) / r)
    assert gap <= 1e-5
    assert gap == pytest.approx(4.999999166921398e-07, rel=1e-6)


def test_karamata_unit_jumps():
    rep = ta.karamata_compare(ta.unit_jumps(), tol=1e-5)
    assert rep.consistent and not rep.unbounded
    assert rep.band_h.value == pytest.approx(1.0, abs=1e-5)
    assert rep.band_beta.value == pytest.approx(1.0, abs=1e-5)


def test_karamata_linear_exact():
    rep = ta.karamata_compare(ta.linear(), tol=1e-9)
    assert rep.band_h.value == pytest.approx(1.0, abs=1e-12)
    assert rep.band_beta.value == pytest.approx(1.0, abs=1e-12)


def test_quadratic_growth_tagged_unbounded():
    m = ta.StieltjesMeasure("jump_sequence", t_expression="n + 1", c_expression="n + 1", growth=ta.GrowthLaw(1.0, 2.0))
    rep = ta.karamata_compare(m)
    assert rep.unbounded and rep.consistent
    assert set(rep.tags) == {"h(r)/r unbounded", "beta(t)/t unbounded"}


@pytest.mark.parametrize("seed", range(10))
def test_random_periodic_measures_consistent(seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    m = ta.random_periodic(rng)
    rep = ta.karamata_compare(m, tol=1e-3, r_decades=(1.0, 6.0), t_decades=(1.0, 7.0), per_decade=6)
    assert rep.consistent and not rep.unbounded
    density = m.jumps[:, 1].sum() / m.period
    assert rep.band_beta.estimate == pytest.approx(density, abs=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.floats(0.5, 1e4))
def test_laplace_stieltjes_linear_in_measure(s1, s2, r):
    a = ta.random_periodic(np.random.default_rng(s1))
    b = ta.random_periodic(np.random.default_rng(s2))
    assert (a + b).laplace_stieltjes(r) == pytest.approx(a.laplace_stieltjes(r) + b.laplace_stieltjes(r), rel=1e-12)


def test_zeta_measure_reproduces_zeta():
    m = ta.zeta_measure(harmonic())
    for r in (2.0, 10.0, 100.0):
        assert m.laplace_stieltjes(r) == pytest.approx(harmonic().zeta(1.0 + 1.0 / r), rel=1e-12)


def test_zeta_measure_karamata_matches_zeta_route():
    rep = ta.karamata_compare(ta.zeta_measure(harmonic()), tol=1e-3, r_decades=(1.0, 6.0), t_decades=(1.0, 7.0),
                              per_decade=6)
    assert rep.consistent
    assert rep.band_h.estimate == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize(
    "kwargs, error",
    [
        ({"kind": "nope"}, InvalidInputError),
        ({"kind": "jump_sequence", "jumps": [[1.0, -1.0]]}, ModelDomainError),
        ({"kind": "jump_sequence", "jumps": [[3.0, 1.0]], "period": 2.0}, ModelDomainError),
        ({"kind": "closed_form", "expression": "t - 1", "growth": ta.GrowthLaw(1.0, 1.0)}, ModelDomainError),
        ({"kind": "closed_form", "expression": "t"}, InvalidInputError),
    ],
)
def test_invalid_measures(kwargs, error):
    with pytest.raises(error):
        ta.StieltjesMeasure(**kwargs)


def test_from_dict():
    m = ta.StieltjesMeasure.from_dict({"kind": "jump_sequence", "jumps": [[1.0, 1.0]], "period": 1.0})
    assert float(m.beta(np.array([10.5]))[0]) == 10.0


def test_karamata_rejects_bad_tolerance():
    with pytest.raises(InvalidInputError):
        ta.karamata_compare(ta.linear(), tol=0.0)
