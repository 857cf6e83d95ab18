"""
Drift b_t(x, mu) and diffusion sigma_t(x) of the reflecting McKean-Vlasov SDE.

Drifts are evaluated on a batch of states X (n, d) against an atomic measure
given as atoms (m, d) with weights (m,). The same objects serve the particle
system (atoms = particles) and the finite-volume solver (atoms = cell centers
weighted by cell mass).
"""
import numpy as np

from mvreflect.config import CHUNK_SIZE
from mvreflect.utils.errors import ConfigError

MEASURE_MODES = ('empirical', 'frozen_flow')


# ---------------------------------------------------------------------------- potentials

class Potential:
    """Radial potential; `grad` acts on the last axis of its argument."""
    name = None

    def __init__(self, scale=1.0):
        self.scale = float(scale)

    def value(self, X):
        raise NotImplementedError

    def grad(self, X):
        raise NotImplementedError

    def describe(self):
        return {'name': self.name, 'scale': self.scale}


class ZeroPotential(Potential):
    name = 'zero'

    def value(self, X):
        return np.zeros(X.shape[:-1])

    def grad(self, X):
        return np.zeros_like(X)


class QuadraticPotential(Potential):
    """scale * |x|^2; scale 0.5 gives |x|^2/2."""
    name = 'quadratic'

    def value(self, X):
        return self.scale * np.sum(X * X, axis=-1)

    def grad(self, X):
        return 2.0 * self.scale * X


class CubicPotential(Potential):
    """scale * |x|^3 with gradient 3 scale |x| x (zero at the origin)."""
    name = 'cubic'

    def value(self, X):
        return self.scale * np.linalg.norm(X, axis=-1) ** 3

    def grad(self, X):
        return 3.0 * self.scale * np.linalg.norm(X, axis=-1, keepdims=True) * X


class DoubleWellPotential(Potential):
    """scale * (|x|^4/4 - |x|^2/2)."""
    name = 'double_well'

    def value(self, X):
        r2 = np.sum(X * X, axis=-1)
        return self.scale * (0.25 * r2 ** 2 - 0.5 * r2)

    def grad(self, X):
        r2 = np.sum(X * X, axis=-1, keepdims=True)
        return self.scale * (r2 - 1.0) * X


POTENTIAL_REGISTRY = {
    ZeroPotential.name: ZeroPotential,
    QuadraticPotential.name: QuadraticPotential,
    CubicPotential.name: CubicPotential,
    DoubleWellPotential.name: DoubleWellPotential,
}


def get_potential(name, **params):
    if name not in POTENTIAL_REGISTRY:
        raise ConfigError('unknown potential "{}"; available: {}'.format(name, sorted(POTENTIAL_REGISTRY)),
                          field='coefficients.drift')
    return POTENTIAL_REGISTRY[name](**params)


def interaction_gradient(W, X, atoms, weights):
    """ sum_j w_j grad W(x - z_j) for every row x of X.

    Quadratic kernels reduce to the weighted mean, 1D cubic kernels to prefix sums
    over the sorted atoms; everything else is a direct sum over fixed-size blocks.
    """
    if isinstance(W, ZeroPotential):
        return np.zeros_like(X)
    if isinstance(W, QuadraticPotential):
        return 2.0 * W.scale * (X - weights @ atoms)
    if isinstance(W, CubicPotential) and X.shape[1] == 1:
        return _cubic_1d(W.scale, X, atoms[:, 0], weights)
    out = np.zeros_like(X)
    for i in range(0, len(X), CHUNK_SIZE):
        Xc = X[i:i + CHUNK_SIZE]
        acc = np.zeros_like(Xc)
        for j in range(0, len(atoms), CHUNK_SIZE):
            G = W.grad(Xc[:, None, :] - atoms[None, j:j + CHUNK_SIZE, :])
            acc += np.einsum('j,ijd->id', weights[j:j + CHUNK_SIZE], G)
        out[i:i + CHUNK_SIZE] = acc
    return out


def _cubic_1d(scale, X, z, w):
    # sum_j w_j 3 s |x - z_j| (x - z_j) = 3 s (sum_{z_j < x} w_j (x - z_j)^2 - sum_{z_j > x} w_j (x - z_j)^2)
    order = np.argsort(z, kind='stable')
    zs, ws = z[order], w[order]
    cw = np.concatenate([[0.0], np.cumsum(ws)])
    c1 = np.concatenate([[0.0], np.cumsum(ws * zs)])
    c2 = np.concatenate([[0.0], np.cumsum(ws * zs * zs)])
    x = X[:, 0]
    j = np.searchsorted(zs, x, side='left')
    left = x * x * cw[j] - 2.0 * x * c1[j] + c2[j]
    right = x * x * (cw[-1] - cw[j]) - 2.0 * x * (c1[-1] - c1[j]) + (c2[-1] - c2[j])
    return (3.0 * scale * (left - right))[:, None]


# ---------------------------------------------------------------------------- drifts

class Drift:
    depends_on_measure = True
    locally_bounded = True

    def __call__(self, t, X, atoms, weights):
        raise NotImplementedError

    def describe(self):
        return {'kind': type(self).__name__}


class GranularMedia(Drift):
    """b(x, mu) = -grad V(x) - (grad W * mu)(x)."""

    def __init__(self, V, W):
        self.V = V
        self.W = W
        self.depends_on_measure = not isinstance(W, ZeroPotential)

    def __call__(self, t, X, atoms, weights):
        return -self.V.grad(X) - interaction_gradient(self.W, X, atoms, weights)

    def describe(self):
        return {'kind': 'granular_media', 'V': self.V.describe(), 'W': self.W.describe()}


class LinearMeanField(Drift):
    """b(x, mu) = A x + B mean(mu)."""

    def __init__(self, A, B):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.A.shape != self.B.shape or self.A.shape[0] != self.A.shape[1]:
            raise ConfigError('A and B must be square matrices of equal size', field='coefficients.drift')
        self.depends_on_measure = bool(np.any(self.B != 0))

    def __call__(self, t, X, atoms, weights):
        return X @ self.A.T + self.B @ (weights @ atoms)

    def describe(self):
        return {'kind': 'linear_mean_field', 'A': self.A.tolist(), 'B': self.B.tolist()}


def _constant(t, X, atoms, weights, vector=(1.0,)):
    return np.tile(np.asarray(vector, dtype=float), (len(X), 1))


def _tanh_mean(t, X, atoms, weights, alpha=1.0, theta=1.0):
    return -theta * X + alpha * np.tanh(weights @ atoms)


def _indicator_push(t, X, atoms, weights, axis=0, threshold=0.5, strength=1.0):
    out = np.zeros_like(X)
    out[:, axis] = strength * (X[:, axis] < threshold)
    return out


def _inverse_sqrt(t, X, atoms, weights, center=0.0):
    V = X - center
    r = np.linalg.norm(V, axis=1, keepdims=True)
    return V / r ** 1.5


# name -> (function, depends on measure, locally bounded)
CUSTOM_DRIFTS = {
    'constant': (_constant, False, True),
    'tanh_mean': (_tanh_mean, True, True),
    'indicator_push': (_indicator_push, False, True),
    'inverse_sqrt': (_inverse_sqrt, False, False),
}


class CustomDrift(Drift):

    def __init__(self, name, **params):
        if name not in CUSTOM_DRIFTS:
            raise ConfigError('unknown custom drift "{}"; available: {}'.format(name, sorted(CUSTOM_DRIFTS)),
                              field='coefficients.drift.name')
        self.name = name
        self.params = params
        self.fn, self.depends_on_measure, self.locally_bounded = CUSTOM_DRIFTS[name]

    def __call__(self, t, X, atoms, weights):
        return self.fn(t, X, atoms, weights, **self.params)

    def describe(self):
        return {'kind': 'custom', 'name': self.name, 'params': self.params}


# ---------------------------------------------------------------------------- diffusions

class Diffusion:
    state_dependent = False

    def __init__(self, dim):
        self.dim = int(dim)

    def matrix(self, t, X):
        """sigma_t(x) for every row, shape (n, d, d)."""
        raise NotImplementedError

    def apply(self, t, X, Z):
        return np.einsum('nij,nj->ni', self.matrix(t, X), Z)

    def isotropic_scale(self):
        """s when sigma = s I is constant, otherwise None."""
        return None

    def inverse_norm2(self, t, X, V):
        """|sigma^*(sigma sigma^*)^{-1}(x) v|^2 row by row; sigma is square and invertible here."""
        S = self.matrix(t, X)
        U = np.linalg.solve(S, V[:, :, None])[:, :, 0]
        return np.sum(U * U, axis=1)


class ConstantDiffusion(Diffusion):

    def __init__(self, sigma):
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1]:
            raise ConfigError('diffusion matrix must be square', field='coefficients.diffusion.sigma')
        super().__init__(sigma.shape[0])
        self.sigma = sigma

    def matrix(self, t, X):
        return np.broadcast_to(self.sigma, (len(X), self.dim, self.dim))

    def apply(self, t, X, Z):
        return Z @ self.sigma.T

    def isotropic_scale(self):
        s = self.sigma[0, 0]
        if np.allclose(self.sigma, s * np.eye(self.dim), rtol=0.0, atol=0.0):
            return float(s)
        return None

    def inverse_norm2(self, t, X, V):
        U = np.linalg.solve(self.sigma, V.T).T
        return np.sum(U * U, axis=1)


class ScalarIsotropic(Diffusion):

    def __init__(self, s, dim):
        super().__init__(dim)
        self.s = float(s)

    def matrix(self, t, X):
        return np.broadcast_to(self.s * np.eye(self.dim), (len(X), self.dim, self.dim))

    def apply(self, t, X, Z):
        return self.s * Z

    def isotropic_scale(self):
        return self.s

    def inverse_norm2(self, t, X, V):
        return np.sum(V * V, axis=1) / self.s ** 2


def _bounded_oscillating(X, amplitude=0.5, scale=1.0):
    return scale * (1.0 + amplitude * np.sin(X[:, 0]))


def _one_sided(X, scale=1.0):
    return scale * np.maximum(X[:, 0], 0.0)


# name -> scalar field f with sigma(x) = f(x) I
STATE_DIFFUSIONS = {
    'bounded_oscillating': _bounded_oscillating,
    'one_sided': _one_sided,
}


class StateDependentDiffusion(Diffusion):
    state_dependent = True

    def __init__(self, name, dim, **params):
        if name not in STATE_DIFFUSIONS:
            raise ConfigError('unknown state-dependent diffusion "{}"; available: {}'.format(
                name, sorted(STATE_DIFFUSIONS)), field='coefficients.diffusion.name')
        super().__init__(dim)
        self.name = name
        self.params = params
        self.field = STATE_DIFFUSIONS[name]

    def factor(self, X):
        return self.field(X, **self.params)

    def matrix(self, t, X):
        return self.factor(X)[:, None, None] * np.eye(self.dim)

    def apply(self, t, X, Z):
        return self.factor(X)[:, None] * Z

    def inverse_norm2(self, t, X, V):
        return np.sum(V * V, axis=1) / self.factor(X) ** 2


# ---------------------------------------------------------------------------- specification

class CoefficientSpec:
    """ Drift, diffusion and the law the drift is evaluated against.

    Args:
        drift: a Drift.
        diffusion: a Diffusion.
        measure_mode: 'empirical' (interacting particles) or 'frozen_flow' (given law flow).
    """

    def __init__(self, drift, diffusion, measure_mode='empirical'):
        if measure_mode not in MEASURE_MODES:
            raise ConfigError('measure_mode must be one of {}'.format(MEASURE_MODES),
                              field='coefficients.measure_mode')
        self.drift = drift
        self.diffusion = diffusion
        self.measure_mode = measure_mode

    @property
    def dim(self):
        return self.diffusion.dim

    def validate(self, domain, rng, n_samples=256):
        """ Reject coefficients the scheme cannot handle.

        Checks: locally bounded drift, positive definite sigma sigma^* and finite drift at
        states sampled from the domain (window 1 for unbounded domains).
        """
        if not self.drift.locally_bounded:
            raise ConfigError('drift "{}" is not locally bounded and cannot be discretised'.format(
                getattr(self.drift, 'name', type(self.drift).__name__)), field='coefficients.drift')
        if domain.dim != self.dim:
            raise ConfigError('diffusion dimension {} does not match domain dimension {}'.format(
                self.dim, domain.dim), field='coefficients.diffusion')
        X = domain.sample_interior(n_samples, rng)
        S = self.diffusion.matrix(0.0, X)
        a = np.einsum('nij,nkj->nik', S, S)
        eig = np.linalg.eigvalsh(a)
        if not np.all(eig > 1e-12):
            raise ConfigError('sigma sigma^* is not positive definite at sampled states (min eigenvalue {:.3g})'.format(
                float(eig.min())), field='coefficients.diffusion')
        weights = np.full(len(X), 1.0 / len(X))
        b = self.drift(0.0, X, X, weights)
        if not np.all(np.isfinite(b)):
            raise ConfigError('drift is not finite at sampled states', field='coefficients.drift')
        return True

    def describe(self):
        diffusion = {'kind': type(self.diffusion).__name__}
        if self.diffusion.isotropic_scale() is not None:
            diffusion['scale'] = self.diffusion.isotropic_scale()
        return {'drift': self.drift.describe(), 'diffusion': diffusion, 'measure_mode': self.measure_mode}


def mean_field_drift(coeffs, x, mu, t=0.0):
    """ b_t(x, mu) at a single point x for an EmpiricalMeasure mu. """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    b = coeffs.drift(t, X, mu.atoms, mu.weights)
    if not np.all(np.isfinite(b)):
        raise FloatingPointError('non-finite drift at {}'.format(X[0]))
    return b[0]
