"""
Exact optimal transport between atomic measures.

Dispatch:
  - 1D with a convex cost (|x-y|^k, k >= 1): quantile (sorted) coupling, any weights.
  - equal sizes with uniform weights: assignment problem (scipy linear_sum_assignment).
  - otherwise: transport linear program (scipy linprog, HiGHS) for at most LP_MAX_N atoms per side.
"""
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog

from mvreflect.config import ASSIGNMENT_MAX_N, LP_MAX_N
from mvreflect.utils.errors import TransportError
from .empirical import merged_support


def pairwise_distance(X, Y):
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def assignment_cost(C):
    """Mean cost of the optimal permutation for a square cost matrix."""
    if C.shape[0] > ASSIGNMENT_MAX_N:
        raise TransportError('assignment limited to {} atoms, got {}'.format(ASSIGNMENT_MAX_N, C.shape[0]))
    row_ind, col_ind = linear_sum_assignment(C)
    return float(C[row_ind, col_ind].mean())


def lp_cost(C, p, q):
    """ Optimal value of min <C, pi> over couplings pi of p and q.
    The last marginal constraint is redundant and dropped.
    """
    m, n = C.shape
    if max(m, n) > LP_MAX_N:
        raise TransportError('general-weight transport limited to {} atoms per side, got {}x{}'.format(
            LP_MAX_N, m, n))
    rows = sp.kron(sp.identity(m), np.ones((1, n)))
    cols = sp.kron(np.ones((1, m)), sp.identity(n))
    A_eq = sp.vstack([rows, cols]).tocsr()[:-1]
    b_eq = np.concatenate([p, q])[:-1]
    result = linprog(C.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method='highs')
    if result.status != 0:
        raise TransportError('transport LP failed: {}'.format(result.message))
    return float(result.fun)


def quantile_cost_1d(x, wx, y, wy, k):
    """ Cost of the monotone coupling on the line, exact for convex costs |x-y|^k (k >= 1). """
    ix = np.argsort(x, kind='stable')
    iy = np.argsort(y, kind='stable')
    xs, wxs = x[ix], wx[ix]
    ys, wys = y[iy], wy[iy]
    Fx = np.cumsum(wxs)
    Fy = np.cumsum(wys)
    Fx[-1] = 1.0
    Fy[-1] = 1.0
    u = np.union1d(Fx, Fy)
    du = np.diff(np.concatenate([[0.0], u]))
    mid = u - 0.5 * du
    qx = xs[np.minimum(np.searchsorted(Fx, mid), len(xs) - 1)]
    qy = ys[np.minimum(np.searchsorted(Fy, mid), len(ys) - 1)]
    return float(np.sum(du * np.abs(qx - qy) ** k))


def transport_cost(cost, mu, nu):
    """ Optimal transport cost for c(x, y) = cost(|x - y|). """
    if mu.dim != nu.dim:
        raise TransportError('measures of different dimension ({} vs {})'.format(mu.dim, nu.dim))
    C = cost(pairwise_distance(mu.atoms, nu.atoms))
    if mu.n == nu.n and mu.uniform and nu.uniform:
        return assignment_cost(C)
    return lp_cost(C, mu.weights, nu.weights)


def total_variation(mu, nu):
    """ sum_z |mu(z) - nu(z)| on the merged support (the norm in Pinsker's inequality). """
    _, p, q = merged_support(mu, nu)
    return float(np.sum(np.abs(p - q)))


def wasserstein_k(k, mu, nu):
    """ W_k(mu, nu) = (inf_pi int |x-y|^k dpi)^(1/max(1,k)); k = 0 gives half the total variation.

    Args:
        k: nonnegative order.
        mu, nu: EmpiricalMeasure.

    Returns:
        float, the exact optimal value.
    """
    if k < 0:
        raise TransportError('Wasserstein order must be nonnegative, got {}'.format(k))
    if k == 0:
        return 0.5 * total_variation(mu, nu)
    if mu.dim != nu.dim:
        raise TransportError('measures of different dimension ({} vs {})'.format(mu.dim, nu.dim))
    if mu.dim == 1 and k >= 1:
        cost = quantile_cost_1d(mu.atoms[:, 0], mu.weights, nu.atoms[:, 0], nu.weights, k)
    else:
        cost = transport_cost(lambda r: r ** k, mu, nu)
    return max(cost, 0.0) ** (1.0 / max(1.0, k))


def wasserstein_psi(psi, mu, nu):
    """ W_psi(mu, nu) = inf_pi int psi(|x-y|) dpi, without an outer root.
    Only a quasi-metric unless psi is concave.
    """
    return max(transport_cost(psi.value, mu, nu), 0.0)


def weighted_var_norm(k, mu, nu):
    """ ||mu - nu||_{k,var} = sum_z |mu(z) - nu(z)| (1 + |z|^k), exact for atomic measures. """
    if k <= 0:
        raise TransportError('weighted variation norm needs k > 0, got {}'.format(k))
    Z, p, q = merged_support(mu, nu)
    return float(np.sum(np.abs(p - q) * (1.0 + np.linalg.norm(Z, axis=1) ** k)))
