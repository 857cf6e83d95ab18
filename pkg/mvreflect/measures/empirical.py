"""
Atomic probability measures on the closed domain.
"""
import numpy as np

from mvreflect.utils.base_utils import as_points
from mvreflect.utils.fields import CsvTable, measure_header, ATOM_ID, WEIGHT

WEIGHT_TOL = 1e-12


class EmpiricalMeasure:
    """ Weighted atoms x_i with weights w_i >= 0 summing to one.

    Args:
        atoms: array of shape (n, d) (a 1D array is read as n points on the line).
        weights: optional array of shape (n,); uniform 1/n when omitted.
        domain: optional Domain; when given every atom must lie in its closure.
    """

    def __init__(self, atoms, weights=None, domain=None):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        self.atoms = as_points(atoms)
        n = len(self.atoms)
        if n == 0:
            raise ValueError('an empirical measure needs at least one atom')
        if weights is None:
            self.weights = np.full(n, 1.0 / n)
            self.uniform = True
        else:
            weights = np.asarray(weights, dtype=float).ravel()
            if weights.shape != (n,):
                raise ValueError('expected {} weights, got {}'.format(n, weights.shape[0]))
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError('weights must be finite and nonnegative')
            if abs(weights.sum() - 1.0) > WEIGHT_TOL:
                raise ValueError('weights must sum to 1, got {!r}'.format(weights.sum()))
            self.weights = weights
            self.uniform = bool(np.all(weights == weights[0]))
        if domain is not None and not np.all(domain.contains(self.atoms)):
            raise ValueError('atoms outside the domain: {}'.format(self.atoms[~domain.contains(self.atoms)][:5]))

    @classmethod
    def dirac(cls, point):
        return cls(as_points(point))

    @property
    def n(self):
        return len(self.atoms)

    @property
    def dim(self):
        return self.atoms.shape[1]

    def mean(self):
        return self.weights @ self.atoms

    def expectation(self, f):
        """Integral of f (vectorised over rows of shape (n, d)) against the measure."""
        return float(self.weights @ np.asarray(f(self.atoms), dtype=float))

    def translate(self, v):
        return EmpiricalMeasure(self.atoms + np.asarray(v, dtype=float), None if self.uniform else self.weights)

    def to_csv(self, path):
        block = np.column_stack([np.arange(self.n), self.atoms, self.weights])
        CsvTable.write(path, measure_header(self.dim), block)

    @classmethod
    def from_csv(cls, path):
        header, columns = CsvTable.load(path)
        coords = [name for name in header if name not in (ATOM_ID, WEIGHT)]
        atoms = np.column_stack([columns[name] for name in coords])
        weights = columns[WEIGHT] if WEIGHT in columns else None
        if weights is not None:
            weights = weights / weights.sum()
        return cls(atoms, weights)

    def __repr__(self):
        return 'EmpiricalMeasure(n={}, dim={})'.format(self.n, self.dim)


def merged_support(mu, nu):
    """ Common support of two atomic measures.

    Returns:
        (Z, p, q): distinct points Z of shape (m, d) and the masses of mu and nu on them.
    """
    if mu.dim != nu.dim:
        raise ValueError('measures of different dimension ({} vs {})'.format(mu.dim, nu.dim))
    Z, inverse = np.unique(np.vstack([mu.atoms, nu.atoms]), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    p = np.zeros(len(Z))
    q = np.zeros(len(Z))
    np.add.at(p, inverse[:mu.n], mu.weights)
    np.add.at(q, inverse[mu.n:], nu.weights)
    return Z, p, q


def moment_norm(k, mu):
    """(sum_i w_i |x_i|^k)^(1/k) for k > 0; 1 for k = 0."""
    if k < 0:
        raise ValueError('moment index must be nonnegative')
    if k == 0:
        return 1.0
    r = np.linalg.norm(mu.atoms, axis=1)
    return float((mu.weights @ r ** k) ** (1.0 / k))


def psi_moment(psi, mu):
    return float(mu.weights @ psi.value(np.linalg.norm(mu.atoms, axis=1)))


__all__ = ['EmpiricalMeasure', 'merged_support', 'moment_norm', 'psi_moment']
