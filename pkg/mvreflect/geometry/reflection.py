"""
One-step Skorokhod resolution with local-time accounting, and sampled
certification of the interior-cone condition.
"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from mvreflect.config import EPS_GEO
from mvreflect.utils.errors import GeometryError
from mvreflect.utils.rng import CounterRNG

ReflectionBatch = namedtuple('ReflectionBatch', ['positions', 'increments', 'tilde_increments', 'hit'])


@dataclass
class ReflectionOutcome:
    position: np.ndarray
    local_time_increment: float
    tilde_local_time_increment: float
    hit_boundary: bool


def reflect_batch(domain, X, dX):
    """ Resolve the steps X -> X + dX for a batch of points already in the closed domain.

    Steps that stay in the domain are accepted with zero local time. The others are
    folded (scheme 'fold', HalfSpace/Interval) or projected to the nearest point of
    the domain, and the local-time increment is the excursion depth or the norm of the
    projection correction. The restricted increment is the part resolved on the
    boundary subset selected by `domain.tilde`.

    Args:
        domain: a geometry Domain.
        X: positions of shape (n, d).
        dX: displacements of shape (n, d).

    Returns:
        ReflectionBatch of positions (n, d), increments (n,), tilde increments (n,), hit flags (n,).
    """
    X = np.asarray(X, dtype=float)
    dX = np.asarray(dX, dtype=float)
    if not np.all(np.isfinite(dX)):
        raise GeometryError('non-finite displacement passed to reflection')
    Y = X + dX
    n = len(Y)
    increments = np.zeros(n)
    tilde = np.zeros(n)
    outside = domain._sd(Y) < -EPS_GEO
    positions = Y
    if outside.any():
        positions = Y.copy()
        Yo = Y[outside]
        if domain.scheme == 'fold':
            P, inc, tinc = domain.fold(Yo, domain.tilde)
        else:
            P = domain._project(Yo)
            inc = np.linalg.norm(P - Yo, axis=1)
            tinc = inc * domain.is_tilde(P)
        positions[outside] = P
        increments[outside] = inc
        tilde[outside] = tinc
    return ReflectionBatch(positions, increments, tilde, outside)


def reflect_step(domain, x, displacement):
    """Single-point view of `reflect_batch`; `x` must lie in the closed domain."""
    X, _ = domain._as_batch(x)
    D = np.asarray(displacement, dtype=float).reshape(1, domain.dim)
    if not domain.contains(X)[0]:
        raise GeometryError('reflect_step starts outside the domain at {}'.format(X[0]))
    batch = reflect_batch(domain, X, D)
    return ReflectionOutcome(position=batch.positions[0],
                             local_time_increment=float(batch.increments[0]),
                             tilde_local_time_increment=float(batch.tilde_increments[0]),
                             hit_boundary=bool(batch.hit[0]))


@dataclass
class CertificationReport:
    passed: bool
    r0: float
    n_samples: int
    worst_margin: float
    worst_pair: tuple
    convex_checked: bool = False
    worst_convexity: float = None
    details: dict = field(default_factory=dict)


def certify_interior_cone(domain, n_samples, r0, seed=0, window=1.0):
    """ Sample the interior-cone inequality <y-x, n(x)> >= -|y-x|^2/(2 r0).

    Boundary points x are paired with uniform points y of the domain and with points
    near x at scales between 1e-3 and 1 times the domain diameter (projected back
    into the domain). The certificate is empirical: it reports the worst sampled
    margin, never a proof.

    Args:
        domain: a geometry Domain.
        n_samples: number of boundary points.
        r0: interior-cone constant to certify.
        seed: seed of the sampling stream.
        window: sampling width for unbounded domains.

    Returns:
        CertificationReport; for convex domains <y-x, n(x)> >= -EPS_GEO is also required.
    """
    if n_samples < 1:
        raise ValueError('n_samples must be at least 1')
    if r0 <= 0:
        raise ValueError('r0 must be positive')
    rng = CounterRNG(seed, 'certify').generator(0)
    Xb = domain.sample_boundary(n_samples, rng, window)
    normals = domain._normal(Xb)

    Y_global = domain.sample_interior(n_samples, rng, window)
    scale = domain.diameter if np.isfinite(domain.diameter) else window
    radii = scale * 10.0 ** rng.uniform(-3.0, 0.0, size=(n_samples, 1))
    G = rng.standard_normal((n_samples, domain.dim))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    Y_local = domain._project(Xb + radii * G)

    X_all = np.vstack([Xb, Xb])
    Y_all = np.vstack([Y_global, Y_local])
    N_all = np.vstack([normals, normals])
    diff = Y_all - X_all
    inner = np.sum(diff * N_all, axis=1)
    margins = inner + np.sum(diff * diff, axis=1) / (2.0 * r0)

    worst = int(np.argmin(margins))
    passed = bool(margins[worst] >= -EPS_GEO)
    report = CertificationReport(passed=passed, r0=float(r0), n_samples=int(n_samples),
                                 worst_margin=float(margins[worst]),
                                 worst_pair=(X_all[worst], Y_all[worst]))
    if domain.convex:
        worst_inner = float(np.min(inner))
        report.convex_checked = True
        report.worst_convexity = worst_inner
        report.passed = passed and worst_inner >= -EPS_GEO
    report.details = {'kind': domain.kind, 'global_worst': float(margins[:n_samples].min()),
                      'local_worst': float(margins[n_samples:].min())}
    return report
