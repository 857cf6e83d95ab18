"""
Explicit finite-volume solver for the nonlinear Fokker-Planck equation with
zero-flux (Neumann) boundary

    d_t rho = D Lap rho - div(rho b_t(., rho)),   D = s^2 / 2 for sigma = s I,

on a 1D interval or a 2D box. Advection is upwinded, diffusion central, and the
total flux through every boundary face is zero, so mass is conserved exactly up
to rounding. The drift is evaluated at the interior faces by the same
coefficient objects as the particle system, against the atomic measure that puts
mass rho_i |cell_i| on each cell center.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from mvreflect.config import CFL_FACTOR
from mvreflect.utils.errors import CFLError, ConfigError, NegativeDensityError
from mvreflect.utils.fields import CsvTable, density_header
from .grid import NEGATIVE_TOL

logger = logging.getLogger(__name__)

STEP_MASS_TOL = 1e-10


def diffusion_coefficient(coeffs):
    """D = s^2/2 for an isotropic constant diffusion s I; anything else is rejected."""
    s = None if coeffs.diffusion.state_dependent else coeffs.diffusion.isotropic_scale()
    if s is None:
        raise ConfigError('the finite-volume solver supports isotropic constant diffusion only',
                          field='coefficients.diffusion')
    return 0.5 * s * s


def face_points(grid, axis):
    """Interior faces normal to `axis` as points (n_faces, d), in C order of the face array."""
    coords = list(grid.centers)
    coords[axis] = grid.edges[axis][1:-1]
    mesh = np.meshgrid(*coords, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1), mesh[0].shape


def face_velocities(grid, coeffs, t):
    """Normal drift component b_t(x_face, rho)[axis] on the interior faces of every axis."""
    atoms = grid.cell_points()
    weights = grid.cell_masses()
    weights = weights / weights.sum()
    velocities = []
    for axis in range(grid.dim):
        P, shape = face_points(grid, axis)
        b = coeffs.drift(t, P, atoms, weights)
        if not np.all(np.isfinite(b)):
            raise FloatingPointError('non-finite drift on the faces at t={}'.format(t))
        velocities.append(b[:, axis].reshape(shape))
    return velocities


def stable_step(grid, D, velocities):
    """ Largest stable step.

    Diffusion limit: h <= CFL_FACTOR min_a dx_a^2 / (a d) with a = s^2 = 2D.
    Positivity: h sum_a (2D/dx_a^2 + max|v_a|/dx_a) <= 1.
    """
    dxs = np.asarray(grid.spacing)
    vmax = np.array([np.max(np.abs(v)) if v.size else 0.0 for v in velocities])
    limits = []
    if D > 0:
        limits.append(CFL_FACTOR * float(np.min(dxs)) ** 2 / (2.0 * D * grid.dim))
    rate = float(np.sum(2.0 * D / dxs ** 2 + vmax / dxs))
    if rate > 0:
        limits.append(1.0 / rate)
    return min(limits) if limits else math.inf


def check_cfl(grid, D, velocities, h):
    limit = stable_step(grid, D, velocities)
    if h > limit * (1.0 + 1e-12):
        raise CFLError('time step {:.3g} violates the stability limit {:.3g} (dx={}, D={:g})'.format(
            h, limit, grid.spacing, D))


def fp_step(grid, coeffs, h, t=None):
    """ One explicit conservative update of the density.

    Args:
        grid: DensityGrid at time t.
        coeffs: CoefficientSpec with isotropic constant diffusion.
        h: time step; must satisfy the CFL and positivity limits.

    Returns:
        DensityGrid at time t + h.
    """
    t = grid.time if t is None else t
    D = diffusion_coefficient(coeffs)
    velocities = face_velocities(grid, coeffs, t)
    check_cfl(grid, D, velocities, h)
    rho = grid.values
    new = rho.copy()
    for axis, (v, dx) in enumerate(zip(velocities, grid.spacing)):
        r = np.moveaxis(rho, axis, 0)
        v0 = np.moveaxis(v, axis, 0)
        left, right = r[:-1], r[1:]
        flux = np.maximum(v0, 0.0) * left + np.minimum(v0, 0.0) * right - D * (right - left) / dx
        zero = np.zeros_like(flux[:1])
        # zero total flux through the boundary faces
        full = np.concatenate([zero, flux, zero], axis=0)
        new -= h / dx * np.moveaxis(np.diff(full, axis=0), 0, axis)
    if np.any(new < -NEGATIVE_TOL):
        raise NegativeDensityError('density {:.3g} below zero after a step at t={:g}'.format(float(new.min()), t))
    new = np.maximum(new, 0.0)
    out = grid.with_values(new, t + h)
    assert abs(out.mass() - grid.mass()) <= STEP_MASS_TOL, 'mass not conserved by the finite-volume step'
    return out


@dataclass
class PdeTrajectory:
    grids: list
    h: float

    @property
    def times(self):
        return np.array([g.time for g in self.grids])

    def __len__(self):
        return len(self.grids)

    def at_time(self, t):
        return self.grids[int(np.argmin(np.abs(self.times - t)))]

    def terminal(self):
        return self.grids[-1]

    def to_csv(self, path):
        dim = self.grids[0].dim
        CsvTable.write(path, density_header(dim), np.vstack([g.rows() for g in self.grids]))


def solve(grid, coeffs, T, h=None, record_stride=None, max_records=1000, progress=False):
    """ Integrate the density from grid.time to grid.time + T.

    Args:
        h: time step; defaults to 0.9 times the stability limit at the initial density
            (shrunk so that T is a whole number of steps).
        record_stride: keep every record_stride-th step (1 keeps all); by default at most
            `max_records` grids are kept. The terminal grid is always kept.

    Returns:
        PdeTrajectory.
    """
    if T <= 0:
        raise ConfigError('PDE horizon must be positive', field='pde.T')
    D = diffusion_coefficient(coeffs)
    if h is None:
        h = 0.9 * stable_step(grid, D, face_velocities(grid, coeffs, grid.time))
    M = max(1, int(math.ceil(T / h - 1e-12 * T / h)))
    h = T / M
    stride = record_stride or max(1, int(math.ceil(M / max_records)))
    t0 = grid.time
    grids = [grid]
    logger.info('fp solve: cells={} M={} h={:.3g} D={:g}'.format(grid.shape, M, h, D))
    bar = tqdm(total=M, ncols=75, desc='Fokker-Planck', disable=not progress)
    current = grid
    for m in range(M):
        current = fp_step(current, coeffs, h, t0 + T * m / M)
        current.time = t0 + T * (m + 1) / M
        if (m + 1) % stride == 0 or m + 1 == M:
            grids.append(current)
        bar.update(1)
    bar.close()
    return PdeTrajectory(grids=grids, h=h)
