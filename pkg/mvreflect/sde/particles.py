"""
Particle ensembles and one Euler-Maruyama step with end-of-step reflection.
"""
from dataclasses import dataclass, replace

import numpy as np

from mvreflect.config import EPS_GEO, PARTICLE_CHUNK
from mvreflect.geometry.reflection import reflect_batch
from mvreflect.measures.empirical import EmpiricalMeasure


@dataclass
class ParticleEnsemble:
    """ Positions X_t with local times l_t and restricted local times l~_t.

    Rows are kept in increasing particle id, so relabelling the initial points
    together with their ids reproduces the same computation.
    """
    time: float
    positions: np.ndarray
    local_time: np.ndarray
    tilde_local_time: np.ndarray
    ids: np.ndarray
    step: int = 0

    @classmethod
    def from_points(cls, points, ids=None, time=0.0):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        n = len(points)
        ids = np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64)
        if sorted(ids.tolist()) != list(range(n)):
            raise ValueError('particle ids must be a permutation of 0..N-1')
        order = np.argsort(ids)
        return cls(time=float(time), positions=points[order].copy(), local_time=np.zeros(n),
                   tilde_local_time=np.zeros(n), ids=ids[order])

    @property
    def n(self):
        return len(self.positions)

    def measure(self):
        return EmpiricalMeasure(self.positions)

    def check(self, domain):
        assert np.all(domain.signed_distance(self.positions) >= -EPS_GEO), 'particle left the closed domain'
        assert np.all(self.tilde_local_time <= self.local_time + 1e-15), 'restricted local time exceeds local time'


def _step_rows(rows, X, ids, t, coeffs, domain, h, noise, atoms, weights):
    Xc = X[rows]
    b = coeffs.drift(t, Xc, atoms, weights)
    dX = b * h + coeffs.diffusion.apply(t, Xc, noise[rows]) * np.sqrt(h)
    return reflect_batch(domain, Xc, dX)


def step_particles(ens, coeffs, domain, h, rng, measure=None, executor=None):
    """ Advance every particle by one explicit step.

    X <- reflect(X + b_t(X, mu) h + sigma_t(X) sqrt(h) xi), where mu is the pre-step
    empirical law of the ensemble (or `measure`, a frozen EmpiricalMeasure) and xi is
    the block of `rng` at counter `ens.step`, row `id` for particle `id`.

    Args:
        ens: ParticleEnsemble.
        coeffs: CoefficientSpec.
        domain: geometry Domain.
        h: step size.
        rng: CounterRNG of the "step" stream.
        measure: optional frozen law the drift is evaluated against.
        executor: optional concurrent.futures executor for particle chunks.

    Returns:
        the advanced ParticleEnsemble.
    """
    if h <= 0:
        raise ValueError('step size must be positive')
    X = ens.positions
    if measure is None:
        atoms, weights = X, np.full(ens.n, 1.0 / ens.n)
    else:
        atoms, weights = measure.atoms, measure.weights
    noise = rng.normals(ens.step, ens.ids, X.shape[1])

    chunks = [slice(i, min(i + PARTICLE_CHUNK, ens.n)) for i in range(0, ens.n, PARTICLE_CHUNK)]
    args = (X, ens.ids, ens.time, coeffs, domain, h, noise, atoms, weights)
    if executor is None or len(chunks) == 1:
        results = [_step_rows(rows, *args) for rows in chunks]
    else:
        results = list(executor.map(lambda rows: _step_rows(rows, *args), chunks))

    positions = np.concatenate([r.positions for r in results])
    increments = np.concatenate([r.increments for r in results])
    tilde = np.concatenate([r.tilde_increments for r in results])
    assert np.all(increments >= 0), 'negative local-time increment'
    new = replace(ens, time=ens.time + h, positions=positions, local_time=ens.local_time + increments,
                  tilde_local_time=ens.tilde_local_time + tilde, step=ens.step + 1)
    new.check(domain)
    return new
