"""
Histogram densities and relative entropy between them (d <= 2).
"""
import numpy as np
from scipy import stats

from mvreflect.utils.errors import EntropyError

HIST_METHODS = ['auto', 'fd', 'doane', 'scott', 'stone', 'rice', 'sturges', 'sqrt']


class Histogram:
    """ Bin probabilities on a regular grid.

    Args:
        edges: list with one array of bin edges per axis (1 or 2 axes).
        counts: array of bin masses with one axis per edge array.
    """

    def __init__(self, edges, counts):
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        if len(self.edges) not in (1, 2):
            raise ValueError('histograms support dimension 1 or 2, got {}'.format(len(self.edges)))
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise EntropyError('histogram has no mass inside its bins')
        self.counts = counts
        self.prob = counts / total

    @property
    def dim(self):
        return len(self.edges)

    def same_binning(self, other):
        return self.dim == other.dim and all(a.shape == b.shape and np.array_equal(a, b)
                                             for a, b in zip(self.edges, other.edges))

    def density(self):
        widths = [np.diff(e) for e in self.edges]
        cell = widths[0] if self.dim == 1 else np.outer(widths[0], widths[1])
        return self.prob / cell


def check_hist_params(bins):
    if bins is None:
        return 'fd'
    if isinstance(bins, str) and bins not in HIST_METHODS:
        raise ValueError('Method for calculating bins width must be one of {}'.format(HIST_METHODS))
    return bins


def common_edges(samples, bins='fd', bounds=None):
    """ Regular bin edges shared by several samples.

    Args:
        samples: list of arrays of shape (n_i, d) with d in {1, 2}.
        bins: number of bins per axis or a numpy rule name (default Freedman-Diaconis),
            evaluated on the pooled samples.
        bounds: optional (lo, hi) arrays; defaults to the pooled sample range.

    Returns:
        list of edge arrays, one per axis.
    """
    bins = check_hist_params(bins)
    pooled = np.vstack([np.atleast_2d(np.asarray(s, dtype=float).reshape(len(s), -1)) for s in samples])
    d = pooled.shape[1]
    if d not in (1, 2):
        raise ValueError('entropy estimation supports d <= 2, got {}'.format(d))
    if bounds is None:
        lo, hi = pooled.min(axis=0), pooled.max(axis=0)
    else:
        lo, hi = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
    edges = []
    for axis in range(d):
        a, b = float(lo[axis]), float(hi[axis])
        if b <= a:
            b = a + 1.0
        edges.append(np.histogram_bin_edges(pooled[:, axis], bins=bins, range=(a, b)))
    return edges


def histogram(points, edges, weights=None):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != len(edges):
        raise ValueError('points of dimension {} for {}-axis binning'.format(points.shape[1], len(edges)))
    if len(edges) == 1:
        counts, _ = np.histogram(points[:, 0], bins=edges[0], weights=weights)
    else:
        counts, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=edges, weights=weights)
    return Histogram(edges, counts)


def measure_histogram(mu, edges):
    return histogram(mu.atoms, edges, mu.weights)


def relative_entropy(nu_hist, mu_hist):
    """ Ent(nu | mu) = sum_i nu_i log(nu_i / mu_i) with 0 log 0 = 0.

    Returns +inf when some bin has mu_i = 0 < nu_i.
    """
    if not nu_hist.same_binning(mu_hist):
        raise EntropyError('relative entropy needs identical binning')
    return float(stats.entropy(nu_hist.prob.ravel(), mu_hist.prob.ravel()))


def hist_total_variation(nu_hist, mu_hist):
    if not nu_hist.same_binning(mu_hist):
        raise EntropyError('total variation needs identical binning')
    return float(np.sum(np.abs(nu_hist.prob - mu_hist.prob)))


def pinsker_holds(nu_hist, mu_hist, ent=None):
    """ 1/2 ||nu - mu||_var^2 <= Ent(nu | mu), with a 1e-12 slack for rounding. """
    ent = relative_entropy(nu_hist, mu_hist) if ent is None else ent
    tv = hist_total_variation(nu_hist, mu_hist)
    return bool(0.5 * tv ** 2 <= ent + 1e-12)
