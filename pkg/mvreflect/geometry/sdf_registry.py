"""
Built-in signed distance functions for SdfDomain.

Each entry maps points of shape (n, 2) to a signed distance that is positive
inside the domain, and provides its gradient (pointing into the domain). Only
these named shapes can be selected from a config file.
"""
import numpy as np


class SignedDistance:
    name = None
    convex = True
    dim = 2

    def value(self, X):
        raise NotImplementedError

    def gradient(self, X):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError


class UnitDisk(SignedDistance):
    name = 'unit_disk'

    def value(self, X):
        return 1.0 - np.linalg.norm(X, axis=1)

    def gradient(self, X):
        rho = np.linalg.norm(X, axis=1, keepdims=True)
        rho = np.where(rho > 0, rho, 1.0)
        return -X / rho

    def bounding_box(self):
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])


class Ellipse(SignedDistance):
    """Ellipse with semi-axes (a, b). The level function min(a,b)*(1-r) is exact on
    the boundary and has the right sign, but is only an approximate distance away from it."""
    name = 'ellipse'

    def __init__(self, a=2.0, b=1.0):
        assert a > 0 and b > 0, 'ellipse semi-axes must be positive'
        self.a = float(a)
        self.b = float(b)
        self.scale = min(self.a, self.b)

    def _radius(self, X):
        return np.sqrt((X[:, 0] / self.a) ** 2 + (X[:, 1] / self.b) ** 2)

    def value(self, X):
        return self.scale * (1.0 - self._radius(X))

    def gradient(self, X):
        r = self._radius(X)
        r = np.where(r > 0, r, 1.0)
        g = np.stack([X[:, 0] / self.a ** 2, X[:, 1] / self.b ** 2], axis=1)
        return -self.scale * g / r[:, None]

    def bounding_box(self):
        return np.array([-self.a, -self.b]), np.array([self.a, self.b])


class RoundedSquare(SignedDistance):
    """Square [-s, s]^2 with corners rounded to radius rho (exact distance)."""
    name = 'rounded_square'

    def __init__(self, half_side=1.0, corner_radius=0.25):
        assert 0 <= corner_radius < half_side, 'corner radius must lie in [0, half_side)'
        self.s = float(half_side)
        self.rho = float(corner_radius)

    def value(self, X):
        q = np.abs(X) - (self.s - self.rho)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return -(outside + inside - self.rho)

    def gradient(self, X):
        q = np.abs(X) - (self.s - self.rho)
        sign = np.where(X >= 0, 1.0, -1.0)
        qp = np.maximum(q, 0.0)
        norm = np.linalg.norm(qp, axis=1, keepdims=True)
        g_out = qp / np.where(norm > 0, norm, 1.0)
        g_in = np.zeros_like(X)
        axis = np.argmax(q, axis=1)
        g_in[np.arange(len(X)), axis] = 1.0
        g = np.where((norm > 0), g_out, g_in)
        return -sign * g

    def bounding_box(self):
        return np.array([-self.s, -self.s]), np.array([self.s, self.s])


SDF_REGISTRY = {
    UnitDisk.name: UnitDisk,
    Ellipse.name: Ellipse,
    RoundedSquare.name: RoundedSquare,
}


def get_sdf(name, **params):
    if name not in SDF_REGISTRY:
        raise KeyError('unknown signed distance "{}"; available: {}'.format(name, sorted(SDF_REGISTRY)))
    return SDF_REGISTRY[name](**params)
