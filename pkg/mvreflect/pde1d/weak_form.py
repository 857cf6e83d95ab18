"""
Weak formulation check: for f with zero normal derivative on the boundary,

    rho_t(f) = rho_0(f) + int_0^t rho_s(L_{s, rho_s} f) ds,   L f = D Lap f + <b, grad f>.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from mvreflect.utils.errors import ConfigError
from .solver import diffusion_coefficient

NEUMANN_TOL = 1e-8


class NeumannFunction:
    """ Test function with value, gradient and Laplacian, vectorised over rows (n, d). """

    def __init__(self, name, value, gradient, laplacian):
        self.name = name
        self.value = value
        self.gradient = gradient
        self.laplacian = laplacian


# profile on [0, 1] -> (g, g', g''); all satisfy g'(0) = g'(1) = 0
PROFILES = {
    'one': (lambda u: np.ones_like(u), lambda u: np.zeros_like(u), lambda u: np.zeros_like(u)),
    'cos': (lambda u: np.cos(np.pi * u), lambda u: -np.pi * np.sin(np.pi * u),
            lambda u: -np.pi ** 2 * np.cos(np.pi * u)),
    'poly_bump': (lambda u: u ** 2 * (1 - u) ** 2, lambda u: 2 * u - 6 * u ** 2 + 4 * u ** 3,
                  lambda u: 2 - 12 * u + 12 * u ** 2),
    'smoothstep': (lambda u: 3 * u ** 2 - 2 * u ** 3, lambda u: 6 * u - 6 * u ** 2, lambda u: 6 - 12 * u),
}


def make_neumann_function(name, lo, hi, axis=0):
    """ Profile `name` along coordinate `axis`, rescaled from [0, 1] to [lo[axis], hi[axis]]. """
    if name not in PROFILES:
        raise ConfigError('unknown test function "{}"; available: {}'.format(name, sorted(PROFILES)),
                          field='pde.test_functions')
    g, dg, ddg = PROFILES[name]
    a = float(np.atleast_1d(lo)[axis])
    length = float(np.atleast_1d(hi)[axis]) - a

    def value(X):
        return g((X[:, axis] - a) / length)

    def gradient(X):
        out = np.zeros_like(X)
        out[:, axis] = dg((X[:, axis] - a) / length) / length
        return out

    def laplacian(X):
        return ddg((X[:, axis] - a) / length) / length ** 2

    return NeumannFunction('{}_x{}'.format(name, axis + 1), value, gradient, laplacian)


def neumann_defect(fn, grid):
    """Largest |<grad f, n>| over boundary points of the grid box."""
    worst = 0.0
    for axis in range(grid.dim):
        for side in (grid.edges[axis][0], grid.edges[axis][-1]):
            coords = list(grid.centers)
            coords[axis] = np.array([side])
            mesh = np.meshgrid(*coords, indexing='ij')
            P = np.stack([m.ravel() for m in mesh], axis=1)
            worst = max(worst, float(np.max(np.abs(fn.gradient(P)[:, axis]))))
    return worst


def check_neumann(fn, grid, tol=NEUMANN_TOL):
    defect = neumann_defect(fn, grid)
    if defect > tol:
        raise ConfigError('test function {} has normal derivative {:.3g} on the boundary'.format(fn.name, defect),
                          field='pde.test_functions')
    return defect


def generator_values(fn, grid, coeffs, t):
    """L_{t, rho} f at the cell centers."""
    D = diffusion_coefficient(coeffs)
    X = grid.cell_points()
    weights = grid.cell_masses()
    b = coeffs.drift(t, X, X, weights / weights.sum())
    return D * fn.laplacian(X) + np.sum(b * fn.gradient(X), axis=1)


@dataclass
class WeakFormResidual:
    name: str
    residual: float
    neumann_defect: float
    lhs: np.ndarray
    rhs: np.ndarray


QUADRATURES = ('left', 'trapezoid')


def weak_form_residual(trajectory, coeffs, functions, quadrature='left'):
    """ max_t |rho_t(f) - rho_0(f) - int_0^t rho_s(L f) ds| per test function.

    'left' is the rule the explicit solver integrates exactly; with every step recorded the
    residual then measures the spatial consistency of the scheme alone.
    """
    if quadrature not in QUADRATURES:
        raise ConfigError('quadrature must be one of {}'.format(QUADRATURES), field='pde.quadrature')
    grids = trajectory.grids
    times = np.array([g.time for g in grids])
    out = []
    for fn in functions:
        defect = check_neumann(fn, grids[0])
        lhs = np.array([g.integrate(fn.value) for g in grids])
        gen = np.array([float(np.sum(g.cell_masses() * generator_values(fn, g, coeffs, g.time))) for g in grids])
        if quadrature == 'left':
            integral = np.concatenate([[0.0], np.cumsum(gen[:-1] * np.diff(times))])
        else:
            integral = cumulative_trapezoid(gen, times, initial=0.0)
        rhs = lhs[0] + integral
        out.append(WeakFormResidual(fn.name, float(np.max(np.abs(lhs - rhs))), defect, lhs, rhs))
    return out
