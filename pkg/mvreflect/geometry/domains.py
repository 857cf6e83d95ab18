"""
Closed domains D̄ with signed distance, inward normals and projection.

All methods accept either a single point (shape (d,), or a scalar in 1D) or a
batch of shape (n, d). Batched internals (`_sd`, `_normal`, `_project`) work
on (n, d) arrays only.
"""
import numpy as np

from mvreflect.config import EPS_GEO, NEWTON_MAX_ITER, NEWTON_TOL
from mvreflect.utils.errors import GeometryError, ProjectionError
from .predicates import build_predicate
from .sdf_registry import get_sdf

SCHEMES = ('project', 'fold')
MAX_FOLDS = 10000


class Domain:
    kind = None
    convex = True
    supports_fold = False
    default_scheme = 'project'
    boundary_tol = EPS_GEO

    def __init__(self, dim, r0=None, tilde=None, scheme=None):
        self.dim = int(dim)
        if self.dim < 1:
            raise GeometryError('domain dimension must be positive')
        if r0 is not None and r0 <= 0:
            raise GeometryError('interior-cone constant r0 must be positive, got {}'.format(r0))
        self.r0 = r0
        self.tilde = build_predicate(tilde)
        self.tilde_set = tilde is not None
        scheme = self.default_scheme if scheme is None else scheme
        if scheme not in SCHEMES:
            raise GeometryError('unknown reflection scheme "{}"; use one of {}'.format(scheme, SCHEMES))
        if scheme == 'fold' and not self.supports_fold:
            raise GeometryError('the fold scheme is only available for HalfSpace and Interval, not {}'.format(
                self.kind))
        self.scheme = scheme

    # ------------------------------------------------------------------ input handling
    def _as_batch(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            if self.dim != 1:
                raise GeometryError('dimension mismatch: scalar point for a {}-dimensional domain'.format(self.dim))
            return arr.reshape(1, 1), True
        if arr.ndim == 1:
            if arr.shape[0] == self.dim:
                return arr.reshape(1, -1), True
            if self.dim == 1:
                return arr.reshape(-1, 1), False
            raise GeometryError('dimension mismatch: point of length {} for a {}-dimensional domain'.format(
                arr.shape[0], self.dim))
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise GeometryError('dimension mismatch: array of shape {} for a {}-dimensional domain'.format(
                arr.shape, self.dim))
        return arr, False

    @staticmethod
    def _out(values, single):
        return values[0] if single else values

    # ------------------------------------------------------------------ public interface
    def contains(self, x):
        X, single = self._as_batch(x)
        inside = self._sd(X) >= -EPS_GEO
        return bool(inside[0]) if single else inside

    def signed_distance(self, x):
        X, single = self._as_batch(x)
        sd = self._sd(X)
        return float(sd[0]) if single else sd

    def on_boundary(self, X):
        sd = self._sd(X)
        scale = 1.0 + np.max(np.abs(X), axis=1)
        return np.abs(sd) <= self.boundary_tol * scale

    def inward_normal(self, x):
        X, single = self._as_batch(x)
        if not np.all(self.on_boundary(X)):
            raise GeometryError('inward_normal requires boundary points; signed distance {}'.format(
                self._sd(X)[~self.on_boundary(X)][:5]))
        return self._out(self._normal(X), single)

    def project(self, x):
        X, single = self._as_batch(x)
        return self._out(self._project(X), single)

    def fold(self, Y, predicate=None):
        raise GeometryError('{} does not support the fold scheme'.format(self.kind))

    def is_tilde(self, P):
        return np.asarray(self.tilde(P), dtype=bool)

    @property
    def bounded(self):
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    @property
    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def describe(self):
        return {'kind': self.kind, 'dim': self.dim, 'r0': self.r0, 'convex': self.convex,
                'scheme': self.scheme, 'tilde': self.tilde.name}

    def __repr__(self):
        return '{}(dim={}, scheme={!r})'.format(type(self).__name__, self.dim, self.scheme)

    # ------------------------------------------------------------------ kind specific
    def _sd(self, X):
        raise NotImplementedError

    def _normal(self, X):
        raise NotImplementedError

    def _project(self, X):
        raise NotImplementedError

    def bounding_box(self, window=None):
        raise NotImplementedError

    def sample_boundary(self, n, rng, window=1.0):
        raise NotImplementedError

    def sample_interior(self, n, rng, window=1.0):
        raise NotImplementedError


class HalfSpace(Domain):
    """{x : <n, x> >= offset} with n the (normalised) inward normal."""
    kind = 'halfspace'
    supports_fold = True
    default_scheme = 'fold'

    def __init__(self, normal, offset=0.0, **kwargs):
        normal = np.asarray(normal, dtype=float).ravel()
        norm = np.linalg.norm(normal)
        if norm == 0 or not np.isfinite(norm):
            raise GeometryError('half-space normal must be a finite nonzero vector')
        super().__init__(len(normal), **kwargs)
        self.normal = normal / norm
        self.offset = float(offset)

    def _sd(self, X):
        return X @ self.normal - self.offset

    def _normal(self, X):
        return np.tile(self.normal, (len(X), 1))

    def _project(self, X):
        depth = np.maximum(0.0, -self._sd(X))
        return X + depth[:, None] * self.normal

    def fold(self, Y, predicate=None):
        predicate = predicate or self.tilde
        depth = np.maximum(0.0, -self._sd(Y))
        contact = Y + depth[:, None] * self.normal
        P = Y + 2.0 * depth[:, None] * self.normal
        tilde = depth * predicate(contact)
        return P, depth, tilde

    def bounding_box(self, window=None):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        axes = np.flatnonzero(self.normal)
        if len(axes) == 1:
            i = axes[0]
            if self.normal[i] > 0:
                lo[i] = self.offset / self.normal[i]
            else:
                hi[i] = self.offset / self.normal[i]
        return _fill_window(lo, hi, window)

    def sample_boundary(self, n, rng, window=1.0):
        base = self.offset * self.normal
        t = rng.uniform(-window, window, size=(n, self.dim))
        t -= (t @ self.normal)[:, None] * self.normal
        return base + t

    def sample_interior(self, n, rng, window=1.0):
        return self.sample_boundary(n, rng, window) + rng.uniform(0.0, window, size=(n, 1)) * self.normal


class Interval(Domain):
    """[a, b] in one dimension; either endpoint may be infinite."""
    kind = 'interval'
    supports_fold = True
    default_scheme = 'fold'

    def __init__(self, a, b, **kwargs):
        super().__init__(1, **kwargs)
        self.a = float(a)
        self.b = float(b)
        if not self.a < self.b:
            raise GeometryError('interval needs a < b, got [{}, {}]'.format(a, b))

    def _sd(self, X):
        x = X[:, 0]
        return np.minimum(x - self.a, self.b - x)

    def _normal(self, X):
        x = X[:, 0]
        tol = self.boundary_tol * (1.0 + np.abs(x))
        at_a = np.abs(x - self.a) <= tol
        at_b = np.abs(self.b - x) <= tol
        if not np.all(at_a | at_b):
            raise GeometryError('point is not an endpoint of [{}, {}]'.format(self.a, self.b))
        return np.where(at_a, 1.0, -1.0)[:, None]

    def _project(self, X):
        return np.clip(X, self.a, self.b)

    def fold(self, Y, predicate=None):
        predicate = predicate or self.tilde
        tilde_a = np.isfinite(self.a) and bool(predicate(np.array([[self.a]]))[0])
        tilde_b = np.isfinite(self.b) and bool(predicate(np.array([[self.b]]))[0])
        x = Y[:, 0].copy()
        inc = np.zeros(len(x))
        tilde = np.zeros(len(x))
        for _ in range(MAX_FOLDS):
            below = x < self.a
            above = x > self.b
            if not (below.any() or above.any()):
                break
            depth = self.a - x[below]
            x[below] = self.a + depth
            inc[below] += depth
            if tilde_a:
                tilde[below] += depth
            depth = x[above] - self.b
            x[above] = self.b - depth
            inc[above] += depth
            if tilde_b:
                tilde[above] += depth
        else:
            raise GeometryError('specular folding did not terminate after {} folds'.format(MAX_FOLDS))
        return x[:, None], inc, tilde

    def bounding_box(self, window=None):
        return _fill_window(np.array([self.a]), np.array([self.b]), window)

    def sample_boundary(self, n, rng, window=1.0):
        ends = [e for e in (self.a, self.b) if np.isfinite(e)]
        if not ends:
            raise GeometryError('the real line has no boundary to sample')
        return np.asarray(ends)[rng.integers(0, len(ends), size=n)][:, None]

    def sample_interior(self, n, rng, window=1.0):
        lo, hi = self.bounding_box(window)
        return rng.uniform(lo[0], hi[0], size=(n, 1))


class Box(Domain):
    kind = 'box'

    def __init__(self, lo, hi, **kwargs):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape or not np.all(lo < hi) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
            raise GeometryError('box needs finite lo < hi per axis')
        super().__init__(len(lo), **kwargs)
        self.lo = lo
        self.hi = hi

    def _sd(self, X):
        clipped = np.clip(X, self.lo, self.hi)
        d_out = np.linalg.norm(X - clipped, axis=1)
        d_in = np.minimum(np.min(X - self.lo, axis=1), np.min(self.hi - X, axis=1))
        return np.where(d_out > 0, -d_out, d_in)

    def _normal(self, X):
        tol = self.boundary_tol * (1.0 + np.abs(X))
        N = (np.abs(X - self.lo) <= tol).astype(float) - (np.abs(self.hi - X) <= tol).astype(float)
        norm = np.linalg.norm(N, axis=1)
        if np.any(norm == 0):
            raise GeometryError('empty normal cone: point is not on a face of the box')
        # corners: normalised sum of the adjacent face normals
        return N / norm[:, None]

    def _project(self, X):
        return np.clip(X, self.lo, self.hi)

    def corners(self):
        grid = np.array(np.meshgrid(*[[0, 1]] * self.dim, indexing='ij')).reshape(self.dim, -1).T
        return np.where(grid == 0, self.lo, self.hi)

    def bounding_box(self, window=None):
        return self.lo.copy(), self.hi.copy()

    def sample_boundary(self, n, rng, window=1.0):
        P = rng.uniform(self.lo, self.hi, size=(n, self.dim))
        axis = rng.integers(0, self.dim, size=n)
        side = rng.integers(0, 2, size=n)
        rows = np.arange(n)
        P[rows, axis] = np.where(side == 0, self.lo[axis], self.hi[axis])
        corners = self.corners()
        if self.dim <= 4 and n >= 2 * len(corners):
            P[:len(corners)] = corners
        return P

    def sample_interior(self, n, rng, window=1.0):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))


def _fill_window(lo, hi, window):
    """Replace infinite box sides by a window of the given width next to the finite side."""
    if window is None:
        return lo, hi
    lo_fin, hi_fin = np.isfinite(lo), np.isfinite(hi)
    new_lo = np.where(lo_fin, lo, np.where(hi_fin, hi - window, -window))
    new_hi = np.where(hi_fin, hi, np.where(lo_fin, lo + window, window))
    return new_lo, new_hi


def _unit_directions(n, dim, rng):
    G = rng.standard_normal((n, dim))
    norm = np.linalg.norm(G, axis=1, keepdims=True)
    return G / np.where(norm > 0, norm, 1.0)


class Ball(Domain):
    kind = 'ball'

    def __init__(self, center, radius, **kwargs):
        center = np.asarray(center, dtype=float).ravel()
        if radius <= 0:
            raise GeometryError('ball radius must be positive')
        super().__init__(len(center), **kwargs)
        self.center = center
        self.radius = float(radius)

    def _sd(self, X):
        return self.radius - np.linalg.norm(X - self.center, axis=1)

    def _normal(self, X):
        V = X - self.center
        return -V / np.linalg.norm(V, axis=1, keepdims=True)

    def _project(self, X):
        V = X - self.center
        rho = np.linalg.norm(V, axis=1)
        out = rho > self.radius
        P = X.copy()
        P[out] = self.center + self.radius * V[out] / rho[out, None]
        return P

    def bounding_box(self, window=None):
        return self.center - self.radius, self.center + self.radius

    def sample_boundary(self, n, rng, window=1.0):
        return self.center + self.radius * _unit_directions(n, self.dim, rng)

    def sample_interior(self, n, rng, window=1.0):
        r = self.radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / self.dim)
        return self.center + r * _unit_directions(n, self.dim, rng)


class Annulus(Domain):
    """{r_in <= |x - center| <= r_out}; not convex, interior-cone constant r_in by default."""
    kind = 'annulus'
    convex = False

    def __init__(self, center, r_in, r_out, r0=None, **kwargs):
        center = np.asarray(center, dtype=float).ravel()
        if not 0 < r_in < r_out:
            raise GeometryError('annulus needs 0 < r_in < r_out')
        if len(center) < 2:
            raise GeometryError('annulus needs dimension >= 2; use Interval in 1D')
        super().__init__(len(center), r0=r_in if r0 is None else r0, **kwargs)
        self.center = center
        self.r_in = float(r_in)
        self.r_out = float(r_out)

    def _radial(self, X):
        V = X - self.center
        rho = np.linalg.norm(V, axis=1)
        U = np.zeros_like(V)
        U[:, 0] = 1.0
        nz = rho > 0
        U[nz] = V[nz] / rho[nz, None]
        return rho, U

    def _sd(self, X):
        rho = np.linalg.norm(X - self.center, axis=1)
        return np.minimum(rho - self.r_in, self.r_out - rho)

    def _normal(self, X):
        rho, U = self._radial(X)
        tol = self.boundary_tol * (1.0 + np.abs(X).max(axis=1))
        inner = np.abs(rho - self.r_in) <= tol
        outer = np.abs(self.r_out - rho) <= tol
        if not np.all(inner | outer):
            raise GeometryError('point is on neither circle of the annulus')
        return np.where(inner[:, None], U, -U)

    def _project(self, X):
        rho, U = self._radial(X)
        P = X.copy()
        below = rho < self.r_in
        above = rho > self.r_out
        P[below] = self.center + self.r_in * U[below]
        P[above] = self.center + self.r_out * U[above]
        return P

    def bounding_box(self, window=None):
        return self.center - self.r_out, self.center + self.r_out

    def sample_boundary(self, n, rng, window=1.0):
        w_in = self.r_in ** (self.dim - 1)
        w_out = self.r_out ** (self.dim - 1)
        radius = np.where(rng.uniform(size=n) < w_in / (w_in + w_out), self.r_in, self.r_out)
        return self.center + radius[:, None] * _unit_directions(n, self.dim, rng)

    def sample_interior(self, n, rng, window=1.0):
        u = rng.uniform(size=(n, 1))
        r = (self.r_in ** self.dim + u * (self.r_out ** self.dim - self.r_in ** self.dim)) ** (1.0 / self.dim)
        return self.center + r * _unit_directions(n, self.dim, rng)


class SdfDomain(Domain):
    """Domain given by a registered signed distance function.

    Projection uses damped Newton steps x <- x - sd(x) grad/|grad|^2 until the
    point lies on the zero level set (|sd| <= NEWTON_TOL) and inside the closed
    domain (sd >= -EPS_GEO).
    """
    kind = 'sdf'
    boundary_tol = NEWTON_TOL

    def __init__(self, name, params=None, **kwargs):
        self.sdf = get_sdf(name, **(params or {}))
        self.convex = self.sdf.convex
        self.name = name
        super().__init__(self.sdf.dim, **kwargs)

    def _sd(self, X):
        return self.sdf.value(X)

    def _normal(self, X):
        G = self.sdf.gradient(X)
        norm = np.linalg.norm(G, axis=1)
        if np.any(norm == 0):
            raise GeometryError('empty normal cone: signed distance gradient vanishes on the boundary')
        return G / norm[:, None]

    def _newton(self, X):
        X = X.copy()
        sd = self.sdf.value(X)
        step = np.ones(len(X))
        active = (np.abs(sd) > NEWTON_TOL) | (sd < -EPS_GEO)
        iterations = 0
        while active.any() and iterations < NEWTON_MAX_ITER:
            iterations += 1
            idx = np.flatnonzero(active)
            G = self.sdf.gradient(X[idx])
            g2 = np.sum(G * G, axis=1)
            if np.any(g2 == 0):
                raise ProjectionError('signed distance gradient vanished during projection',
                                      {'points': X[idx][g2 == 0], 'iterations': iterations})
            trial = X[idx] - (step[idx] * sd[idx] / g2)[:, None] * G
            sd_trial = self.sdf.value(trial)
            done = (np.abs(sd_trial) <= NEWTON_TOL) & (sd_trial >= -EPS_GEO)
            accept = done | (np.abs(sd_trial) < np.abs(sd[idx]))
            X[idx[accept]] = trial[accept]
            sd[idx[accept]] = sd_trial[accept]
            step[idx[~accept]] *= 0.5
            active = (np.abs(sd) > NEWTON_TOL) | (sd < -EPS_GEO)
        if active.any():
            raise ProjectionError('Newton projection onto "{}" did not converge in {} iterations'.format(
                self.name, NEWTON_MAX_ITER),
                {'points': X[active], 'signed_distance': sd[active], 'iterations': iterations})
        return X

    def _project(self, X):
        P = X.copy()
        outside = self.sdf.value(X) < 0
        if outside.any():
            P[outside] = self._newton(X[outside])
        return P

    def bounding_box(self, window=None):
        return self.sdf.bounding_box()

    def sample_boundary(self, n, rng, window=1.0):
        lo, hi = self.bounding_box()
        return self._newton(rng.uniform(lo, hi, size=(n, self.dim)))

    def sample_interior(self, n, rng, window=1.0):
        lo, hi = self.bounding_box()
        out = np.zeros((0, self.dim))
        while len(out) < n:
            cand = rng.uniform(lo, hi, size=(2 * n, self.dim))
            out = np.vstack([out, cand[self.sdf.value(cand) >= 0]])
        return out[:n]

    def describe(self):
        info = super().describe()
        info['name'] = self.name
        return info


DOMAIN_KINDS = {
    'halfspace': HalfSpace,
    'interval': Interval,
    'box': Box,
    'ball': Ball,
    'annulus': Annulus,
    'sdf': SdfDomain,
}


def make_domain(kind, **params):
    if kind not in DOMAIN_KINDS:
        raise GeometryError('unknown domain kind "{}"; available: {}'.format(kind, sorted(DOMAIN_KINDS)))
    return DOMAIN_KINDS[kind](**params)
