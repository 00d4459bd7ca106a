import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from singtrace import _kernels_py, kernels

try:
    from singtrace import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

positive = arrays(np.float64, st.integers(1, 200), elements=st.floats(1e-6, 10.0))


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(positive, st.floats(0.5, 3.0))
def test_power_sum_backends_agree(mu, s):
    w = np.linspace(1.0, 2.0, mu.size)
    a = compiled.weighted_power_sum(mu, w, s)
    b = _kernels_py.weighted_power_sum(mu, w, s)
    assert a == pytest.approx(b, rel=1e-13)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(positive, st.floats(1e-4, 10.0))
def test_heat_sum_backends_agree(mu, a):
    w = np.ones_like(mu)
    assert compiled.heat_sum(mu, w, a) == pytest.approx(_kernels_py.heat_sum(mu, w, a), rel=1e-13, abs=1e-300)


@needs_compiled
@pytest.mark.parametrize("shift, p, K", [(0.0, 1.5, 100), (0.3, 1.1, 2000), (-2.0, 2.0, 10)])
def test_lattice_sum_backends_agree(shift, p, K):
    assert compiled.lattice_sum(shift, p, K) == pytest.approx(_kernels_py.lattice_sum(shift, p, K), rel=1e-13)


def test_read_only_buffers_accepted():
    mu = np.linspace(1.0, 2.0, 10)
    mu.setflags(write=False)
    assert kernels.weighted_power_sum(mu, None, 1.0) == pytest.approx(15.0)


def test_exp_weighted_sum_closed_form():
    t = np.arange(1.0, 2001.0)
    # sum_{k>=1} e^{-k/r} truncated far in the tail
    r = 10.0
    expected = np.exp(-1 / r) * (1 - np.exp(-2000 / r)) / (1 - np.exp(-1 / r))
    assert kernels.exp_weighted_sum(t, 1.0, r) == pytest.approx(expected, rel=1e-13)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("SINGTRACE_THREADS", "3")
    assert kernels.thread_cap() == 3
    monkeypatch.setenv("SINGTRACE_THREADS", "bogus")
    assert kernels.thread_cap() == 1
