"""
L1 distance between particle histograms and finite-volume densities.
"""
from dataclasses import dataclass

import numpy as np

from mvreflect.utils.base_utils import get_distance_table
from mvreflect.utils.errors import GridMismatchError
from .grid import DensityGrid

TIME_TOL = 1e-9


@dataclass
class ComparisonTable:
    times: np.ndarray
    l1: np.ndarray

    def table(self):
        return get_distance_table(self.times, self.l1, header='L1')

    def records(self):
        return [{'t': float(t), 'l1': float(d)} for t, d in zip(self.times, self.l1)]

    @property
    def max_l1(self):
        return float(np.max(self.l1))


def compare_particle_pde(flow, trajectory, times=None):
    """ Histogram the particles on the PDE grid and report the L1 distance at each time.

    Args:
        flow: MeasureFlow of the particle system.
        trajectory: PdeTrajectory on the same domain.
        times: comparison times; default all PDE recording times. Each must be a
            recording time of both the flow and the trajectory.

    Returns:
        ComparisonTable.
    """
    if flow.dim != trajectory.grids[0].dim:
        raise GridMismatchError('particles in dimension {} against a {}-dimensional density'.format(
            flow.dim, trajectory.grids[0].dim))
    pde_times = trajectory.times
    times = pde_times if times is None else np.asarray(times, dtype=float)
    scale = max(1.0, float(pde_times[-1]))
    distances = []
    for t in times:
        i = int(np.argmin(np.abs(pde_times - t)))
        j = flow.index_at_time(t)
        if abs(pde_times[i] - t) > TIME_TOL * scale or abs(flow.times[j] - t) > TIME_TOL * scale:
            raise GridMismatchError('time {:g} is not recorded by both the particle flow and the density'.format(t))
        grid = trajectory.grids[i]
        hist = DensityGrid.from_samples(flow.positions[j], grid.lo, grid.hi, grid.shape)
        distances.append(grid.l1_distance(hist.values))
    return ComparisonTable(np.asarray(times, dtype=float), np.asarray(distances))
