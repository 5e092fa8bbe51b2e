import math

import numpy as np
import pytest

import mscme


def poisson_pmf(lam, n):
    return np.array([math.exp(k * math.log(lam) - lam - math.lgamma(k + 1)) for k in range(n)])


@pytest.fixture(scope="module")
def linear():
    return mscme.parse_network(mscme.examples.linear)


def test_network_metadata(linear):
    assert linear.species == ["X1", "X2"]
    assert linear.reactions == ["R1", "R2", "R3", "R4"]
    assert linear.slow_variables == ["S"]
    np.testing.assert_allclose(linear.propensities([3, 2]), [20.0, 2.0, 15.0, 10.0])


def test_cma_matches_poisson(linear):
    eff = mscme.cma(linear, 0, 400)
    assert eff.method == "cma"
    pi = eff.stationary()
    ref = poisson_pmf(44.0, 401)
    err = np.linalg.norm(pi.probabilities - ref) / np.linalg.norm(ref)
    assert err < 1e-8
    assert mscme.lin_marginal_intensity(20, 1, 5, 5) == pytest.approx(44.0)


def test_qssa_error(linear):
    pi = mscme.qssa(linear, 0, 400).stationary()
    assert mscme.relative_l2(pi, mscme.poisson(44.0, 0, 400)) == pytest.approx(0.4322, abs=1e-3)


def test_bridge_endpoints(linear):
    eff = mscme.cma(linear, 0, 400)
    dom = mscme.DominatingProcess(eff.generator)
    assert dom.rho == pytest.approx(20 + 399 * 5 / 11)
    x = dom.index([44])
    pmf = dom.event_count_pmf(10.0, x, x)
    assert pmf.weights.sum() == pytest.approx(1.0)
    times, states = dom.bridge(pmf, seed=3)
    assert times[0] == 0.0 and states[0] == [44] and states[-1] == [44]
    assert np.all(np.diff(times) > 0)


def test_simulate_reproducible(linear):
    a = mscme.simulate(linear, [0, 0], 2.0, seed=11)
    b = mscme.simulate(linear, [0, 0], 2.0, seed=11)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert a[2][0] == -1


def test_errors():
    with pytest.raises(mscme.ConfigError):
        mscme.parse_network("species A\nreaction R: A -> B @ 1\n")
    net = mscme.parse_network("species A B\nreaction F: A -> B @ 1\nslow S = A + B\nfast F = B\n")
    eff = mscme.cma(net, 0, 2)
    dom = mscme.DominatingProcess(eff.generator)
    with pytest.raises(mscme.NumericalError):
        dom.event_count_pmf(1.0, dom.index([0]), dom.index([1]))
