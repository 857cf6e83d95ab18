"""
Cell-averaged densities on regular 1D grids and 2D tensor grids.
"""
import numpy as np

from mvreflect.utils.fields import CsvTable, density_header

MASS_TOL = 1e-8
NEGATIVE_TOL = 1e-12


class DensityGrid:
    """ Density rho_t as cell averages on a regular grid.

    Args:
        edges: list with one array of equally spaced cell edges per axis (1 or 2 axes).
        values: density per cell, one array axis per grid axis.
        time: time of the snapshot.
    """

    def __init__(self, edges, values, time=0.0, check_mass=True):
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        if len(self.edges) not in (1, 2):
            raise ValueError('density grids support dimension 1 or 2, got {}'.format(len(self.edges)))
        self.spacing = []
        for e in self.edges:
            if len(e) < 3:
                raise ValueError('need at least two cells per axis')
            dx = e[1] - e[0]
            if not np.allclose(np.diff(e), dx, rtol=1e-9, atol=0.0) or dx <= 0:
                raise ValueError('cell edges must be increasing and equally spaced')
            self.spacing.append(float(dx))
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != self.shape:
            raise ValueError('values of shape {} for a grid of shape {}'.format(self.values.shape, self.shape))
        if np.any(self.values < -NEGATIVE_TOL):
            raise ValueError('density must be nonnegative')
        self.time = float(time)
        if check_mass and abs(self.mass() - 1.0) > MASS_TOL:
            raise ValueError('density has mass {!r}, expected 1'.format(self.mass()))

    @property
    def dim(self):
        return len(self.edges)

    @property
    def shape(self):
        return tuple(len(e) - 1 for e in self.edges)

    @property
    def centers(self):
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]

    @property
    def lo(self):
        return np.array([e[0] for e in self.edges])

    @property
    def hi(self):
        return np.array([e[-1] for e in self.edges])

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def mass(self):
        return float(self.values.sum() * self.cell_volume)

    def cell_points(self):
        """Cell centers as an (n_cells, d) array in C order of `values`."""
        mesh = np.meshgrid(*self.centers, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_masses(self):
        return self.values.ravel() * self.cell_volume

    def with_values(self, values, time):
        return DensityGrid(self.edges, values, time, check_mass=False)

    def l1_distance(self, other_values):
        return float(np.sum(np.abs(self.values - other_values)) * self.cell_volume)

    def integrate(self, f):
        """Midpoint quadrature of f (vectorised over rows) against rho."""
        return float(np.sum(self.cell_masses() * np.asarray(f(self.cell_points()), dtype=float)))

    def rows(self):
        """(t, center coordinates, value) per cell, for CSV output."""
        pts = self.cell_points()
        return np.column_stack([np.full(len(pts), self.time), pts, self.values.ravel()])

    def to_csv(self, path):
        CsvTable.write(path, density_header(self.dim), self.rows())

    # ------------------------------------------------------------------ constructors
    @staticmethod
    def regular_edges(lo, hi, cells):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        cells = np.broadcast_to(np.atleast_1d(cells), lo.shape)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError('density grids need a bounded box')
        return [np.linspace(a, b, int(n) + 1) for a, b, n in zip(lo, hi, cells)]

    @classmethod
    def from_function(cls, lo, hi, cells, f, time=0.0):
        """Density proportional to f at the cell centers, normalised to mass one."""
        edges = cls.regular_edges(lo, hi, cells)
        grid = cls(edges, np.ones(tuple(len(e) - 1 for e in edges)) / np.prod([e[-1] - e[0] for e in edges]),
                   time)
        values = np.asarray(f(grid.cell_points()), dtype=float).reshape(grid.shape)
        if np.any(values < 0) or values.sum() <= 0:
            raise ValueError('initial density must be nonnegative with positive mass')
        return cls(edges, values / (values.sum() * grid.cell_volume), time)

    @classmethod
    def uniform(cls, lo, hi, cells, time=0.0):
        return cls.from_function(lo, hi, cells, lambda X: np.ones(len(X)), time)

    @classmethod
    def bump(cls, lo, hi, cells, center, width, time=0.0):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        return cls.from_function(lo, hi, cells,
                                 lambda X: np.exp(-0.5 * np.sum((X - center) ** 2, axis=1) / width ** 2), time)

    @classmethod
    def from_samples(cls, points, lo, hi, cells, weights=None, time=0.0):
        """Histogram density of particles on the grid."""
        edges = cls.regular_edges(lo, hi, cells)
        points = np.asarray(points, dtype=float).reshape(len(points), -1)
        counts, _ = np.histogramdd(points, bins=edges, weights=weights)
        vol = np.prod([e[1] - e[0] for e in edges])
        return cls(edges, counts / (counts.sum() * vol), time, check_mass=False)
