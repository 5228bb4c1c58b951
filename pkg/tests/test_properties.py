import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mcnfdi.flow import gamma_by_simulation, gamma_coefficients, run_network
from mcnfdi.randgen import random_dag


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gamma_methods_agree(seed):
    g = random_dag(np.random.default_rng(seed), n_sinks=2)
    for s in g.sinks:
        a, b = gamma_coefficients(g, s), gamma_by_simulation(g, s)
        while a and a[-1] == 0:
            a.pop()
        assert len(a) == len(b)
        assert np.allclose(a, b, atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(-10, 10), min_size=1, max_size=12))
def test_sink_is_convolution_with_gamma(seed, u):
    g = random_dag(np.random.default_rng(seed))
    s = g.sinks[0]
    gam = gamma_coefficients(g, s)
    y = run_network(g, u)[s]
    want = [sum(gam[d - 1] * u[k - d] for d in range(1, len(gam) + 1) if k - d >= 0)
            for k in range(len(u))]
    assert np.allclose(y, want, atol=1e-9)
