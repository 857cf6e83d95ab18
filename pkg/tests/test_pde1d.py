"""
Unit tests for the finite-volume Fokker-Planck solver, the weak-form residual and
the particle/density comparison.
"""

import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from mvreflect.geometry import Interval
from mvreflect.pde1d import (DensityGrid, NeumannFunction, check_neumann, compare_particle_pde, diffusion_coefficient,
                             face_velocities, fp_step, make_neumann_function, solve, stable_step, weak_form_residual)
from mvreflect.sde import (CoefficientSpec, ConstantDiffusion, GranularMedia, MeasureFlow, ScalarIsotropic,
                           SimConfig, StateDependentDiffusion, get_potential, make_initial, simulate_mckean)
from mvreflect.utils.errors import CFLError, ConfigError, GridMismatchError


def _coeffs(V='zero', W='zero', s=1.0, dim=1):
    drift = GranularMedia(get_potential(V, scale=0.5), get_potential(W, scale=0.5))
    return CoefficientSpec(drift, ScalarIsotropic(s, dim))


def _variance(grid):
    x = grid.centers[0]
    p = grid.values * grid.spacing[0]
    m = np.sum(p * x)
    return float(np.sum(p * (x - m) ** 2)), float(m)


def test_density_grid():
    """Construction, normalisation and histogramming."""
    print("Testing DensityGrid...")

    grid = DensityGrid.uniform([0.0], [2.0], 10)
    assert grid.shape == (10,)
    assert grid.mass() == pytest.approx(1.0)
    assert np.allclose(grid.values, 0.5)
    assert grid.integrate(lambda X: X[:, 0]) == pytest.approx(1.0)
    assert grid.l1_distance(grid.values) == 0.0

    bump = DensityGrid.bump([0.0, 0.0], [1.0, 1.0], [20, 10], center=[0.5, 0.5], width=0.1)
    assert bump.dim == 2 and bump.shape == (20, 10)
    assert bump.mass() == pytest.approx(1.0)

    hist = DensityGrid.from_samples(np.array([0.1, 0.1, 0.9, 0.6]), [0.0], [1.0], 2)
    assert np.allclose(hist.values, [1.0, 1.0])

    with pytest.raises(ValueError):
        DensityGrid([np.array([0.0, 0.1, 0.3])], np.array([5.0, 2.5]))
    with pytest.raises(ValueError):
        DensityGrid([np.array([0.0, 0.5, 1.0])], np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DensityGrid.uniform([0.0], [np.inf], 10)

    print("✓ DensityGrid test passed")


def test_stable_step():
    """Diffusive and positivity limits of the explicit step."""
    print("\nTesting stable_step...")

    grid = DensityGrid.uniform([0.0], [1.0], 100)
    D = diffusion_coefficient(_coeffs(s=1.0))
    assert D == 0.5
    velocities = face_velocities(grid, _coeffs(), 0.0)
    assert stable_step(grid, D, velocities) == pytest.approx(0.4 * 0.01 ** 2)

    with pytest.raises(ConfigError):
        diffusion_coefficient(CoefficientSpec(_coeffs().drift, ConstantDiffusion([[1.0, 0.0], [0.0, 2.0]])))
    with pytest.raises(ConfigError):
        diffusion_coefficient(CoefficientSpec(_coeffs().drift, StateDependentDiffusion('bounded_oscillating', 1)))

    with pytest.raises(CFLError):
        fp_step(grid, _coeffs(), 2.0 * 0.4 * 0.01 ** 2)

    print("✓ stable_step test passed")


def test_uniform_is_stationary():
    """Without drift the uniform density does not move."""
    print("\nTesting stationary uniform density...")

    for grid in (DensityGrid.uniform([0.0], [1.0], 50), DensityGrid.uniform([0.0, 0.0], [1.0, 2.0], [10, 20])):
        coeffs = _coeffs(dim=grid.dim)
        out = solve(grid, coeffs, 0.01)
        assert np.allclose(out.terminal().values, grid.values, rtol=0.0, atol=1e-12)
        assert out.terminal().time == pytest.approx(0.01)

    print("✓ stationary uniform density test passed")


def test_mass_and_positivity():
    """Mass is conserved and the density stays nonnegative with drift and interaction."""
    print("\nTesting mass conservation...")

    coeffs = _coeffs(V='quadratic', W='quadratic')
    grid = DensityGrid.bump([-2.0], [2.0], 80, center=[1.0], width=0.2)
    traj = solve(grid, coeffs, 0.5)
    for g in traj.grids:
        assert g.mass() == pytest.approx(1.0, abs=1e-9)
        assert np.all(g.values >= 0)
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.5)
    assert len(traj) <= 1001

    grid2 = DensityGrid.bump([-1.0, -1.0], [1.0, 1.0], [16, 16], center=[0.3, -0.2], width=0.2)
    traj2 = solve(grid2, _coeffs(V='quadratic', dim=2), 0.1)
    assert traj2.terminal().mass() == pytest.approx(1.0, abs=1e-9)

    print("✓ mass conservation test passed")


def test_heat_equation_variance():
    """Away from the boundary the variance grows like 2Dt."""
    print("\nTesting heat equation variance...")

    grid = DensityGrid.bump([0.0], [1.0], 200, center=[0.5], width=0.05)
    var0, mean0 = _variance(grid)
    traj = solve(grid, _coeffs(s=1.0), 0.01)
    var1, mean1 = _variance(traj.terminal())
    assert mean1 == pytest.approx(mean0, abs=1e-7)
    assert var1 - var0 == pytest.approx(2 * 0.5 * 0.01, rel=1e-3)

    print("✓ heat equation variance test passed")


def test_ornstein_uhlenbeck_stationary_density():
    """The reflected Ornstein-Uhlenbeck density relaxes to exp(-x^2) on [-2, 2]."""
    print("\nTesting stationary Ornstein-Uhlenbeck density...")

    grid = DensityGrid.uniform([-2.0], [2.0], 100)
    traj = solve(grid, _coeffs(V='quadratic', s=1.0), 5.0)
    target = DensityGrid.from_function([-2.0], [2.0], 100, lambda X: np.exp(-X[:, 0] ** 2))
    assert traj.terminal().l1_distance(target.values) < 0.1

    print("✓ stationary Ornstein-Uhlenbeck density test passed")


def test_weak_form_residual():
    """With every step recorded the left-point residual only sees spatial error."""
    print("\nTesting weak_form_residual...")

    grid = DensityGrid.bump([0.0], [1.0], 100, center=[0.3], width=0.08)
    coeffs = _coeffs(s=1.0)
    traj = solve(grid, coeffs, 0.02, record_stride=1)
    functions = [make_neumann_function(name, [0.0], [1.0]) for name in ('one', 'cos', 'poly_bump')]
    residuals = weak_form_residual(traj, coeffs, functions)
    assert [r.name for r in residuals] == ['one_x1', 'cos_x1', 'poly_bump_x1']
    assert residuals[0].residual < 1e-10
    assert residuals[1].residual < 1e-3
    assert all(r.neumann_defect < 1e-8 for r in residuals)

    trapezoid = weak_form_residual(traj, coeffs, functions[:2], quadrature='trapezoid')
    assert np.isfinite(trapezoid[1].residual)

    with pytest.raises(ConfigError):
        weak_form_residual(traj, coeffs, functions, quadrature='simpson')
    with pytest.raises(ConfigError):
        make_neumann_function('sin', [0.0], [1.0])

    linear = NeumannFunction('x', lambda X: X[:, 0], lambda X: np.ones_like(X), lambda X: np.zeros(len(X)))
    with pytest.raises(ConfigError):
        check_neumann(linear, grid)

    print("✓ weak_form_residual test passed")


def test_compare_particle_pde():
    """Particles of reflected Brownian motion from a uniform start match the uniform density."""
    print("\nTesting compare_particle_pde...")

    coeffs = _coeffs(s=1.0)
    cfg = SimConfig(T=0.1, h=1e-3, N=20000, domain=Interval(0, 1), coefficients=coeffs,
                    initial=make_initial('uniform'), seed=14)
    flow = simulate_mckean(cfg).flow
    traj = solve(DensityGrid.uniform([0.0], [1.0], 20), coeffs, 0.1)
    table = compare_particle_pde(flow, traj, times=[0.0, 0.1])
    assert table.max_l1 < 0.08
    assert [r['t'] for r in table.records()] == [0.0, 0.1]
    assert 'L1' in table.table()

    with pytest.raises(GridMismatchError):
        compare_particle_pde(flow, traj, times=[0.053])
    flat = MeasureFlow([0.0], [0], np.zeros((1, 5, 2)))
    with pytest.raises(GridMismatchError):
        compare_particle_pde(flat, traj)

    print("✓ compare_particle_pde test passed")


def run_all_tests():
    """Run all tests."""
    print("=" * 80)
    print("Running Fokker-Planck solver tests")
    print("=" * 80)

    test_density_grid()
    test_stable_step()
    test_uniform_is_stationary()
    test_mass_and_positivity()
    test_heat_equation_variance()
    test_ornstein_uhlenbeck_stationary_density()
    test_weak_form_residual()
    test_compare_particle_pde()

    print("\n" + "=" * 80)
    print("All tests passed successfully! ✓")
    print("=" * 80)
    return True


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
