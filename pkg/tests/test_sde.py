"""
Unit tests for coefficients, the interacting particle system, the frozen-flow map,
Picard iteration and the coupling by change of measure.
"""

import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from scipy import stats

from mvreflect.config import PARTICLE_CHUNK
from mvreflect.geometry import Ball, Interval
from mvreflect.measures import EmpiricalMeasure, wasserstein_k
from mvreflect.sde import (CoefficientSpec, ConstantDiffusion, CustomDrift, GranularMedia, LinearMeanField,
                           MeasureFlow, ParticleEnsemble, ScalarIsotropic, SimConfig, apply_H, couple_pair,
                           exact_gap, get_potential, make_initial, mean_field_drift, picard_solve, simulate_mckean,
                           step_particles)
from mvreflect.sde.coefficients import interaction_gradient
from mvreflect.utils.errors import ConfigError, GridMismatchError
from mvreflect.utils.rng import CounterRNG


def _granular(V='zero', V_scale=1.0, W='zero', W_scale=1.0, s=1.0, dim=1):
    drift = GranularMedia(get_potential(V, scale=V_scale), get_potential(W, scale=W_scale))
    return CoefficientSpec(drift, ScalarIsotropic(s, dim))


def _linear(A=-1.0, B=0.5, s=0.5):
    return CoefficientSpec(LinearMeanField([[A]], [[B]]), ScalarIsotropic(s, 1))


def test_mean_field_drift():
    """Closed-form drifts for the built-in kernels."""
    print("Testing mean_field_drift...")

    mu = EmpiricalMeasure([0.0, 2.0])
    assert mean_field_drift(_granular(W='quadratic'), [3.0], mu)[0] == pytest.approx(-4.0)
    assert mean_field_drift(_granular(V='quadratic', V_scale=0.5), [3.0], mu)[0] == pytest.approx(-3.0)

    sym = EmpiricalMeasure([-1.0, 1.0])
    assert mean_field_drift(_granular(W='cubic'), [0.0], sym)[0] == pytest.approx(0.0, abs=1e-12)
    assert mean_field_drift(_granular(W='cubic'), [2.0], sym)[0] == pytest.approx(-15.0)

    assert mean_field_drift(CoefficientSpec(LinearMeanField([[-1.0]], [[2.0]]), ScalarIsotropic(1.0, 1)),
                            [1.0], mu)[0] == pytest.approx(1.0)

    with pytest.raises(FloatingPointError):
        mean_field_drift(CoefficientSpec(CustomDrift('inverse_sqrt'), ScalarIsotropic(1.0, 1)), [0.0], mu)

    print("✓ mean_field_drift test passed")


def test_cubic_prefix_sums():
    """The sorted prefix-sum path for 1D cubic kernels matches the direct sum."""
    print("\nTesting 1D cubic interaction...")

    rng = np.random.default_rng(3)
    z = rng.normal(size=50)
    w = rng.uniform(size=50)
    w /= w.sum()
    X = rng.normal(size=(30, 1))
    W = get_potential('cubic', scale=0.7)
    D = X - z[None, :]
    direct = (3.0 * 0.7 * np.abs(D) * D) @ w
    assert np.allclose(interaction_gradient(W, X, z[:, None], w)[:, 0], direct)

    print("✓ 1D cubic interaction test passed")


def test_step_without_noise():
    """Zero diffusion and zero drift leave the ensemble in place."""
    print("\nTesting step_particles without noise...")

    coeffs = CoefficientSpec(GranularMedia(get_potential('zero'), get_potential('zero')), ConstantDiffusion([[0.0]]))
    ens = ParticleEnsemble.from_points([0.2, 0.5])
    new = step_particles(ens, coeffs, Interval(0, 1), 0.1, CounterRNG(1, 'step'))
    assert np.array_equal(new.positions, ens.positions)
    assert np.all(new.local_time == 0.0)
    assert new.step == 1
    assert new.time == pytest.approx(0.1)

    # projected: a drift pushing out of the half-line keeps the particle on the boundary
    push = CoefficientSpec(CustomDrift('constant', vector=(-2.0,)), ConstantDiffusion([[0.0]]))
    ens = ParticleEnsemble.from_points([0.0])
    for _ in range(3):
        ens = step_particles(ens, push, Interval(0, np.inf, scheme='project'), 0.1, CounterRNG(1, 'step'))
    assert ens.positions[0, 0] == pytest.approx(0.0)
    assert ens.local_time[0] == pytest.approx(0.6)

    # folded: the particle bounces off the boundary and gains |b|h every other step
    ens = ParticleEnsemble.from_points([0.0])
    for _ in range(3):
        ens = step_particles(ens, push, Interval(0, np.inf), 0.1, CounterRNG(1, 'step'))
    assert ens.positions[0, 0] == pytest.approx(0.2)
    assert ens.local_time[0] == pytest.approx(0.4)

    with pytest.raises(ValueError):
        step_particles(ens, push, Interval(0, np.inf), 0.0, CounterRNG(1, 'step'))

    print("✓ step_particles without noise test passed")


def test_counter_rng():
    """A particle's noise depends only on (seed, id, step)."""
    print("\nTesting CounterRNG...")

    rng = CounterRNG(5, 'step')
    full = rng.normals(7, np.arange(10), 2)
    assert np.array_equal(rng.normals(7, [3], 2)[0], full[3])
    assert not np.array_equal(rng.normals(8, np.arange(10), 2), full)
    assert not np.array_equal(CounterRNG(5, 'coupling').normals(7, np.arange(10), 2), full)
    assert np.array_equal(CounterRNG(5, 'step').normals(7, np.arange(10), 2), full)

    with pytest.raises(ValueError):
        CounterRNG(-1)

    print("✓ CounterRNG test passed")


def test_sim_config():
    """Time grid, recording steps and rejected configurations."""
    print("\nTesting SimConfig...")

    dom = Interval(0, 1)
    coeffs = _granular()
    cfg = SimConfig(T=1.0, h=0.3, N=10, domain=dom, coefficients=coeffs)
    assert cfg.n_steps == 4
    assert cfg.step_size == pytest.approx(0.25)
    assert cfg.time_of(4) == 1.0

    cfg = SimConfig(T=1.0, h=0.1, N=10, domain=dom, coefficients=coeffs, record_stride=3)
    assert cfg.n_steps == 10
    assert cfg.record_steps().tolist() == [0, 3, 6, 9, 10]

    cfg = SimConfig(T=1.0, h=1e-4, N=10, domain=dom, coefficients=coeffs)
    assert cfg.stride == 10
    assert cfg.replace(seed=7).seed == 7

    with pytest.raises(ConfigError):
        SimConfig(T=0.0, h=0.1, N=10, domain=dom, coefficients=coeffs)
    with pytest.raises(ConfigError):
        SimConfig(T=1.0, h=2.0, N=10, domain=dom, coefficients=coeffs)
    with pytest.raises(ConfigError):
        SimConfig(T=1.0, h=0.1, N=0, domain=dom, coefficients=coeffs)
    with pytest.raises(ConfigError):
        SimConfig(T=1.0, h=0.1, N=10, domain=Ball([0.0, 0.0], 1.0), coefficients=coeffs)

    print("✓ SimConfig test passed")


def test_reflected_brownian_motion():
    """Reflected Brownian motion on [0, inf) from 0 has the law of |B_T| at time T."""
    print("\nTesting reflected Brownian motion...")

    cfg = SimConfig(T=1.0, h=1e-3, N=2000, domain=Interval(0, np.inf, scheme='project'), coefficients=_granular(),
                    seed=11)
    result = simulate_mckean(cfg)
    X_T = result.flow.positions[-1, :, 0]
    assert np.all(X_T >= 0)
    assert stats.kstest(X_T, 'halfnorm').pvalue > 1e-3
    # E l_T = E|B_T| = sqrt(2T/pi)
    assert result.local_time.mean() == pytest.approx(np.sqrt(2.0 / np.pi), abs=0.06)
    assert np.all(result.tilde_local_time <= result.local_time + 1e-15)
    assert result.flow.times[-1] == 1.0

    again = simulate_mckean(cfg)
    assert np.array_equal(again.flow.positions, result.flow.positions)

    # folding gives the same terminal law; its local time is the sum of excursion depths
    folded = simulate_mckean(cfg.replace(domain=Interval(0, np.inf)))
    assert np.all(folded.flow.positions[-1] >= 0)
    assert stats.kstest(folded.flow.positions[-1, :, 0], 'halfnorm').pvalue > 1e-3
    assert 0.0 < folded.local_time.mean() < result.local_time.mean()

    print("✓ reflected Brownian motion test passed")


def test_thread_count_invariance():
    """Results do not depend on the number of worker threads."""
    print("\nTesting thread count invariance...")

    coeffs = _granular(V='quadratic', V_scale=0.5, W='quadratic', W_scale=0.5)
    cfg = SimConfig(T=0.05, h=0.01, N=PARTICLE_CHUNK + 100, domain=Interval(-1, 1), coefficients=coeffs,
                    initial=make_initial('uniform'), seed=3)
    single = simulate_mckean(cfg)
    threaded = simulate_mckean(cfg.replace(threads=3))
    assert np.array_equal(single.flow.positions, threaded.flow.positions)
    assert np.array_equal(single.local_time, threaded.local_time)

    print("✓ thread count invariance test passed")


def test_exchangeability():
    """Relabelling initial points together with their ids reproduces the step exactly."""
    print("\nTesting exchangeability...")

    coeffs = _granular(W='quadratic', W_scale=0.5)
    rng = np.random.default_rng(8)
    points = rng.uniform(0.0, 1.0, size=(50, 1))
    perm = rng.permutation(50)

    a = ParticleEnsemble.from_points(points)
    b = ParticleEnsemble.from_points(points[perm], ids=perm)
    for _ in range(5):
        a = step_particles(a, coeffs, Interval(0, 1), 0.01, CounterRNG(2, 'step'))
        b = step_particles(b, coeffs, Interval(0, 1), 0.01, CounterRNG(2, 'step'))
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.ids, b.ids)

    with pytest.raises(ValueError):
        ParticleEnsemble.from_points(points, ids=np.zeros(50))

    print("✓ exchangeability test passed")


def test_linear_mean_field_oracle():
    """The mean of the linear mean-field model solves m' = (A + B) m."""
    print("\nTesting linear mean-field oracle...")

    cfg = SimConfig(T=1.0, h=1e-3, N=2000, domain=Interval(-10, 10), coefficients=_linear(),
                    initial=make_initial('dirac', point=[1.0]), seed=5)
    flow = simulate_mckean(cfg).flow
    means = flow.mean()[:, 0]
    assert means[0] == 1.0
    assert means[-1] == pytest.approx(np.exp(-0.5), abs=0.04)
    j = flow.index_at_time(0.5)
    assert means[j] == pytest.approx(np.exp(-0.25), abs=0.04)

    print("✓ linear mean-field oracle test passed")


def test_apply_H_reproduces_particle_system():
    """The frozen-flow map fed with the particle flow reproduces it bit for bit."""
    print("\nTesting apply_H fixed point...")

    coeffs = _granular(V='quadratic', V_scale=0.5, W='quadratic', W_scale=0.5)
    cfg = SimConfig(T=0.5, h=0.01, N=300, domain=Interval(0, np.inf), coefficients=coeffs,
                    initial=make_initial('uniform', lo=[0.0], hi=[1.0]), record_stride=1, seed=9)
    sim = simulate_mckean(cfg)
    frozen = apply_H(sim.flow, cfg)
    assert np.array_equal(frozen.flow.positions, sim.flow.positions)
    assert np.array_equal(frozen.flow.local_time, sim.flow.local_time)

    short = SimConfig(T=0.25, h=0.01, N=300, domain=Interval(0, np.inf), coefficients=coeffs, record_stride=1)
    with pytest.raises(GridMismatchError):
        apply_H(sim.flow, short)

    print("✓ apply_H fixed point test passed")


def test_apply_H_measure_independent():
    """Without interaction the input flow is irrelevant."""
    print("\nTesting apply_H with a measure-independent drift...")

    coeffs = _granular(V='quadratic', V_scale=0.5)
    cfg = SimConfig(T=0.2, h=0.02, N=100, domain=Interval(-2, 2), coefficients=coeffs, seed=4)
    gamma = EmpiricalMeasure(np.zeros(100))
    a = apply_H(MeasureFlow.constant(gamma, cfg), cfg, gamma)
    b = apply_H(MeasureFlow.constant(EmpiricalMeasure(np.ones(100)), cfg), cfg, gamma)
    assert np.array_equal(a.flow.positions, b.flow.positions)

    print("✓ apply_H measure-independent test passed")


def test_picard_measure_independent():
    """A measure-independent drift converges in the second iteration."""
    print("\nTesting picard_solve without interaction...")

    cfg = SimConfig(T=0.2, h=0.02, N=200, domain=Interval(-5, 5), coefficients=_granular(s=1.0), seed=6)
    result = picard_solve(cfg, max_iter=5, tol=1e-2)
    assert result.converged
    assert result.iterations == 2
    assert result.fixed_iteration == 1
    assert result.distances[0] > 1e-2
    assert result.distances[1] == 0.0
    assert [r['iteration'] for r in result.records()] == [1, 2]

    with pytest.raises(ConfigError):
        picard_solve(cfg, max_iter=0)

    print("✓ picard_solve without interaction test passed")


def test_picard_contraction():
    """Successive Picard distances shrink for the linear mean-field model."""
    print("\nTesting picard_solve contraction...")

    cfg = SimConfig(T=1.0, h=0.01, N=400, domain=Interval(-10, 10), coefficients=_linear(),
                    initial=make_initial('dirac', point=[1.0]), seed=2)
    result = picard_solve(cfg, max_iter=5, tol=1e-12)
    assert not result.converged
    assert result.fixed_iteration is None
    assert result.iterations == 5
    assert np.all(result.ratios < 1.0)
    assert result.distances[-1] < 1e-2 * result.distances[0]
    assert all(w <= d + 1e-15 for w, d in zip(result.weighted_distances, result.distances))

    print("✓ picard_solve contraction test passed")


def test_propagation_of_chaos():
    """W2 between independent runs shrinks as the number of particles grows."""
    print("\nTesting propagation of chaos...")

    coeffs = _granular(V='quadratic', V_scale=0.5, W='quadratic', W_scale=0.5, s=0.5)
    base = SimConfig(T=0.2, h=0.02, N=256, domain=Interval(-1, 1), coefficients=coeffs,
                     initial=make_initial('uniform'))
    gaps = []
    for N in (256, 1024, 4096):
        w = []
        for rep in range(8):
            a = simulate_mckean(base.replace(N=N, seed=100 + 2 * rep)).flow.terminal()
            b = simulate_mckean(base.replace(N=N, seed=101 + 2 * rep)).flow.terminal()
            w.append(wasserstein_k(2, a, b))
        gaps.append(np.mean(w))
    assert gaps[0] > gaps[1] > gaps[2]

    print("✓ propagation of chaos test passed")


def test_flow_csv():
    """Flow CSV round trip recovers steps from the times."""
    print("\nTesting MeasureFlow CSV...")

    import tempfile

    cfg = SimConfig(T=0.1, h=0.01, N=20, domain=Interval(0, 1), coefficients=_granular(),
                    initial=make_initial('uniform'), record_stride=2)
    flow = simulate_mckean(cfg).flow
    path = os.path.join(tempfile.mkdtemp(), 'flow.csv')
    flow.to_csv(path)
    loaded = MeasureFlow.from_csv(path, n_steps=cfg.n_steps)
    assert loaded.steps.tolist() == flow.steps.tolist()
    assert np.array_equal(loaded.positions, flow.positions)
    assert loaded.index_at_step(5) == flow.index_at_step(5) == 2

    print("✓ MeasureFlow CSV test passed")


def test_coupling_coincident_starts():
    """Coupling two copies of the same start costs nothing."""
    print("\nTesting couple_pair with x0 = y0...")

    cfg = SimConfig(T=1.0, h=0.01, N=10, domain=Interval(-50, 50), coefficients=_granular())
    record = couple_pair(cfg, [0.3], [0.3], t0=1.0, n_pairs=16)
    assert np.all(record.costs == 0.0)
    assert np.all(record.terminal_gaps == 0.0)
    assert np.isnan(record.cost_ratio())

    interacting = SimConfig(T=1.0, h=0.01, N=10, domain=Interval(-50, 50),
                            coefficients=_granular(W='quadratic'))
    with pytest.raises(ConfigError):
        couple_pair(interacting, [0.0], [1.0], t0=1.0)
    with pytest.raises(ConfigError):
        couple_pair(cfg, [0.0], [1.0], t0=2.0)

    print("✓ couple_pair with x0 = y0 test passed")


def test_coupling_gap_and_cost():
    """Gap follows gap0 e^{-Lt} xi_t / xi_0, closes at t0, and the cost ratio tends to 1/2 for small L."""
    print("\nTesting couple_pair gap and cost...")

    cfg = SimConfig(T=1.0, h=1e-3, N=10, domain=Interval(-50, 50), coefficients=_granular(), seed=12)
    record = couple_pair(cfg, [0.0], [1.0], t0=1.0, L=1.0, n_pairs=32)
    j = len(record.times) // 2
    assert record.mean_gap[j] == pytest.approx(exact_gap(record.times[j], 1.0, 1.0, 1.0), rel=1e-2)
    assert record.max_terminal_gap < 1e-10
    assert record.clamped_steps == 1

    small_rate = couple_pair(cfg, [0.0], [1.0], t0=1.0, L=1e-3, n_pairs=32)
    assert small_rate.cost_ratio() == pytest.approx(0.5, rel=1e-2)
    assert np.allclose(small_rate.costs, small_rate.costs[0])

    print("✓ couple_pair gap and cost test passed")


def run_all_tests():
    """Run all tests."""
    print("=" * 80)
    print("Running SDE tests")
    print("=" * 80)

    test_mean_field_drift()
    test_cubic_prefix_sums()
    test_step_without_noise()
    test_counter_rng()
    test_sim_config()
    test_reflected_brownian_motion()
    test_thread_count_invariance()
    test_exchangeability()
    test_linear_mean_field_oracle()
    test_apply_H_reproduces_particle_system()
    test_apply_H_measure_independent()
    test_picard_measure_independent()
    test_picard_contraction()
    test_propagation_of_chaos()
    test_flow_csv()
    test_coupling_coincident_starts()
    test_coupling_gap_and_cost()

    print("\n" + "=" * 80)
    print("All tests passed successfully! ✓")
    print("=" * 80)
    return True


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
