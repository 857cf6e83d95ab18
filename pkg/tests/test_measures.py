"""
Unit tests for empirical measures, exact transport distances, psi profiles and
histogram relative entropy.
"""

import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import tempfile

import numpy as np
import pytest

from mvreflect.measures import (EmpiricalMeasure, common_edges, get_psi, histogram, moment_norm, pinsker_holds,
                                psi_class_check, psi_moment, relative_entropy, total_variation, wasserstein_k,
                                wasserstein_psi, weighted_var_norm)
from mvreflect.measures.entropy import Histogram
from mvreflect.measures.transport import assignment_cost, lp_cost, pairwise_distance, quantile_cost_1d
from mvreflect.utils.errors import EntropyError, TransportError


def _spread_pair(n=4, k=2.0, dim=1):
    """delta_0 against the law moving mass n^{-1-k} to distance n."""
    mu = EmpiricalMeasure.dirac(np.zeros(dim))
    e = np.zeros(dim)
    e[0] = n
    eps = n ** (-1.0 - k)
    nu = EmpiricalMeasure(np.vstack([np.zeros(dim), e]), [1.0 - eps, eps])
    return mu, nu


def test_empirical_measure():
    """Construction, weights and basic statistics."""
    print("Testing EmpiricalMeasure...")

    mu = EmpiricalMeasure([0.0, 1.0, 2.0])
    assert mu.n == 3 and mu.dim == 1
    assert mu.uniform
    assert np.allclose(mu.mean(), [1.0])
    assert mu.expectation(lambda X: X[:, 0] ** 2) == pytest.approx(5.0 / 3.0)
    assert np.allclose(mu.translate(0.5).atoms[:, 0], [0.5, 1.5, 2.5])

    with pytest.raises(ValueError):
        EmpiricalMeasure([0.0, 1.0], [0.7, 0.7])
    with pytest.raises(ValueError):
        EmpiricalMeasure([0.0, 1.0], [1.5, -0.5])
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((0, 1)))

    weighted = EmpiricalMeasure([[0.0, 0.0], [1.0, 1.0]], [0.25, 0.75])
    path = os.path.join(tempfile.mkdtemp(), 'measure.csv')
    weighted.to_csv(path)
    loaded = EmpiricalMeasure.from_csv(path)
    assert np.array_equal(loaded.atoms, weighted.atoms)
    assert np.allclose(loaded.weights, weighted.weights)

    print("✓ EmpiricalMeasure test passed")


def test_moment_norm():
    print("\nTesting moment_norm...")

    assert moment_norm(2, EmpiricalMeasure.dirac([3.0, 4.0])) == pytest.approx(5.0)
    assert moment_norm(2, EmpiricalMeasure([-1.0, 1.0])) == pytest.approx(1.0)
    assert moment_norm(1, EmpiricalMeasure([0.0, 1.0, 2.0])) == pytest.approx(1.0)
    assert moment_norm(0, EmpiricalMeasure([5.0])) == 1.0
    assert psi_moment(get_psi('identity'), EmpiricalMeasure([0.0, 2.0])) == pytest.approx(1.0)

    print("✓ moment_norm test passed")


def test_wasserstein_examples():
    """Closed-form Wasserstein distances."""
    print("\nTesting wasserstein_k...")

    x, y = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    assert wasserstein_k(2, EmpiricalMeasure.dirac(x), EmpiricalMeasure.dirac(y)) == pytest.approx(5.0)

    # moving mass n^{-1-k} to distance n costs n^{-1/k}
    mu, nu = _spread_pair(n=4, k=2.0, dim=1)
    assert wasserstein_k(2, mu, nu) == pytest.approx(0.5)
    mu, nu = _spread_pair(n=4, k=2.0, dim=2)
    assert wasserstein_k(2, mu, nu) == pytest.approx(0.5, rel=1e-6)

    rng = np.random.default_rng(0)
    sample = rng.uniform(size=64)
    assert wasserstein_k(1, EmpiricalMeasure(sample), EmpiricalMeasure(sample + 0.3)) == pytest.approx(0.3)

    same = EmpiricalMeasure(rng.normal(size=(20, 2)))
    assert wasserstein_k(2, same, same) == pytest.approx(0.0, abs=1e-12)

    print("✓ wasserstein_k test passed")


def test_wasserstein_zero_order_and_errors():
    """k = 0 is half the total variation; negative orders are rejected."""
    print("\nTesting wasserstein_k with k=0...")

    mu = EmpiricalMeasure([0.0, 1.0])
    nu = EmpiricalMeasure([0.0, 2.0])
    assert total_variation(mu, nu) == pytest.approx(1.0)
    assert wasserstein_k(0, mu, nu) == pytest.approx(0.5)

    with pytest.raises(TransportError):
        wasserstein_k(-1, mu, nu)
    with pytest.raises(TransportError):
        wasserstein_k(2, mu, EmpiricalMeasure.dirac([0.0, 0.0]))

    print("✓ k=0 and error test passed")


def test_transport_solvers_agree():
    """Quantile coupling, assignment and the transport LP give the same optimum."""
    print("\nTesting transport solvers...")

    rng = np.random.default_rng(1)
    x = rng.normal(size=40)
    y = rng.normal(loc=0.5, size=40)
    C = pairwise_distance(x[:, None], y[:, None]) ** 2
    w = np.full(40, 1.0 / 40)
    by_quantile = quantile_cost_1d(x, w, y, w, 2)
    assert assignment_cost(C) == pytest.approx(by_quantile, rel=1e-9)
    assert lp_cost(C, w, w) == pytest.approx(by_quantile, rel=1e-6)

    # general weights in 2D: two atoms against one
    mu = EmpiricalMeasure([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    nu = EmpiricalMeasure.dirac([0.0, 1.0])
    assert wasserstein_k(1, mu, nu) == pytest.approx(1.0)
    nu2 = EmpiricalMeasure([[1.0, 0.0], [2.0, 1.0], [0.0, 0.0]], [0.25, 0.25, 0.5])
    # (0,0) stays, (1,1) splits between its two unit-distance neighbours
    assert wasserstein_k(1, mu, nu2) == pytest.approx(0.5, rel=1e-6)

    print("✓ transport solvers test passed")


def test_lp_example():
    """Transport LP on a two-point example with unequal weights."""
    print("\nTesting transport LP...")

    mu = EmpiricalMeasure([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5])
    nu = EmpiricalMeasure([[0.0, 1.0], [2.0, 0.0], [5.0, 5.0]], [0.5, 0.5, 0.0])
    # the parallel plan (cost 1 per unit mass) beats the crossing one
    assert wasserstein_k(1, mu, nu) == pytest.approx(1.0, rel=1e-6)

    mu = EmpiricalMeasure([[0.0, 0.0]])
    nu = EmpiricalMeasure([[1.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    assert wasserstein_k(1, mu, nu) == pytest.approx(0.5 + 0.5 * np.sqrt(2), rel=1e-6)

    print("✓ transport LP test passed")


def test_wasserstein_psi():
    print("\nTesting wasserstein_psi...")

    a, b = EmpiricalMeasure.dirac([0.0]), EmpiricalMeasure.dirac([3.0])
    assert wasserstein_psi(get_psi('identity'), a, a) == pytest.approx(0.0)
    assert wasserstein_psi(get_psi('identity'), a, b) == pytest.approx(3.0)
    assert wasserstein_psi(get_psi('bounded_exp'), a, b) == pytest.approx(1.0 - np.exp(-3.0))

    print("✓ wasserstein_psi test passed")


def test_weighted_var_norm():
    print("\nTesting weighted_var_norm...")

    mu, nu = _spread_pair(n=4, k=2.0)
    assert weighted_var_norm(2, mu, mu) == pytest.approx(0.0)
    assert weighted_var_norm(2, mu, nu) == pytest.approx(0.28125)
    assert weighted_var_norm(2, mu, nu) <= 3.0 / 4
    assert weighted_var_norm(2, EmpiricalMeasure.dirac([0.0]), EmpiricalMeasure.dirac([1.0])) == pytest.approx(3.0)

    with pytest.raises(TransportError):
        weighted_var_norm(0, mu, nu)

    print("✓ weighted_var_norm test passed")


def test_psi_class_check():
    """Membership of the built-in profiles in the admissible class."""
    print("\nTesting psi_class_check...")

    assert psi_class_check(get_psi('identity')).passed
    assert psi_class_check(get_psi('bounded_exp')).passed
    assert psi_class_check(get_psi('shifted_power', k=0.5)).passed

    square = psi_class_check(get_psi('power', k=2.0, kappa=5.0))
    assert not square.passed
    assert not square.bounded_ok

    root = psi_class_check(get_psi('power', k=0.5))
    assert not root.passed

    with pytest.raises(KeyError):
        get_psi('log')

    print("✓ psi_class_check test passed")


def test_relative_entropy():
    """Two-bin closed form, identical histograms and infinite entropy."""
    print("\nTesting relative_entropy...")

    edges = [np.array([0.0, 0.5, 1.0])]
    nu = Histogram(edges, np.array([4.0, 0.0]))
    mu = Histogram(edges, np.array([2.0, 2.0]))
    assert relative_entropy(nu, mu) == pytest.approx(np.log(2.0))
    assert relative_entropy(mu, mu) == pytest.approx(0.0)
    assert relative_entropy(mu, nu) == np.inf
    assert pinsker_holds(nu, mu)

    other = Histogram([np.array([0.0, 0.25, 1.0])], np.array([1.0, 1.0]))
    with pytest.raises(EntropyError):
        relative_entropy(nu, other)

    print("✓ relative_entropy test passed")


def test_pinsker_on_samples():
    """Ent >= 1/2 ||nu - mu||_var^2 on histograms of random samples."""
    print("\nTesting Pinsker on samples...")

    rng = np.random.default_rng(4)
    for shift in (0.0, 0.1, 0.5, 1.0):
        a = rng.normal(size=(3000, 1))
        b = rng.normal(loc=shift, size=(3000, 1))
        edges = common_edges([a, b], bins=12, bounds=(np.array([-6.0]), np.array([7.0])))
        ha, hb = histogram(a, edges), histogram(b, edges)
        ent = relative_entropy(hb, ha)
        if np.isfinite(ent):
            assert pinsker_holds(hb, ha, ent)

    pts = rng.uniform(size=(500, 2))
    edges = common_edges([pts], bins=5)
    hist = histogram(pts, edges)
    assert hist.dim == 2
    assert hist.prob.sum() == pytest.approx(1.0)

    print("✓ Pinsker test passed")


def run_all_tests():
    """Run all tests."""
    print("=" * 80)
    print("Running measure tests")
    print("=" * 80)

    test_empirical_measure()
    test_moment_norm()
    test_wasserstein_examples()
    test_wasserstein_zero_order_and_errors()
    test_transport_solvers_agree()
    test_lp_example()
    test_wasserstein_psi()
    test_weighted_var_norm()
    test_psi_class_check()
    test_relative_entropy()
    test_pinsker_on_samples()

    print("\n" + "=" * 80)
    print("All tests passed successfully! ✓")
    print("=" * 80)
    return True


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
