"""
Interacting particle simulation of the reflecting McKean-Vlasov SDE, the frozen-flow
map H^gamma and its Picard iteration.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from mvreflect.config import Config
from mvreflect.measures.empirical import EmpiricalMeasure
from mvreflect.measures.transport import wasserstein_k, weighted_var_norm
from mvreflect.utils.errors import ConfigError, GridMismatchError
from mvreflect.utils.fields import (CsvTable, LOCAL_TIME, PARTICLE_ID, TILDE_LOCAL_TIME, TIME, coord_names,
                                    flow_header)
from mvreflect.utils.rng import CounterRNG
from .initial import Dirac
from .particles import ParticleEnsemble, step_particles

logger = logging.getLogger(__name__)

# relative slack when comparing time grids
GRID_RTOL = 1e-12


@dataclass
class SimConfig:
    """ Everything a run depends on. Identical configs give bit-identical flows.

    `record_stride` defaults to the smallest stride keeping at most
    Config.record_max_snapshots snapshots; the terminal step is always recorded.
    """
    T: float
    h: float
    N: int
    domain: object
    coefficients: object
    seed: int = 1234
    k: float = 2.0
    initial: object = None
    record_stride: int = None
    threads: int = 1
    progress: bool = False

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError('horizon must be positive, got {}'.format(self.T), field='sim.T')
        if not self.h > 0:
            raise ConfigError('step size must be positive, got {}'.format(self.h), field='sim.h')
        if self.h > self.T:
            raise ConfigError('step size {} exceeds the horizon {}'.format(self.h, self.T), field='sim.h')
        if int(self.N) < 1:
            raise ConfigError('need at least one particle, got {}'.format(self.N), field='sim.N')
        if self.k < 0:
            raise ConfigError('moment index must be nonnegative', field='sim.k')
        if self.record_stride is not None and int(self.record_stride) < 1:
            raise ConfigError('record stride must be >= 1', field='sim.record_stride')
        if int(self.threads) < 1:
            raise ConfigError('threads must be >= 1', field='sim.threads')
        if self.domain.dim != self.coefficients.dim:
            raise ConfigError('diffusion dimension {} does not match domain dimension {}'.format(
                self.coefficients.dim, self.domain.dim), field='coefficients.diffusion')
        self.N = int(self.N)
        self.threads = int(self.threads)
        if self.initial is None:
            self.initial = Dirac(np.zeros(self.domain.dim))

    @property
    def n_steps(self):
        return max(1, int(math.ceil(self.T / self.h - GRID_RTOL * self.T / self.h)))

    @property
    def step_size(self):
        """Actual step T/M, at most h."""
        return self.T / self.n_steps

    @property
    def stride(self):
        if self.record_stride is not None:
            return int(self.record_stride)
        return max(1, int(math.ceil(self.n_steps / Config().record_max_snapshots)))

    def record_steps(self):
        steps = list(range(0, self.n_steps + 1, self.stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.asarray(steps, dtype=np.int64)

    def time_of(self, step):
        return self.T * step / self.n_steps

    def replace(self, **changes):
        params = {name: getattr(self, name) for name in self.__dataclass_fields__}
        params.update(changes)
        return SimConfig(**params)

    def describe(self):
        return {'T': self.T, 'h': self.h, 'N': self.N, 'seed': self.seed, 'k': self.k,
                'n_steps': self.n_steps, 'record_stride': self.stride, 'threads': self.threads,
                'domain': self.domain.describe(), 'coefficients': self.coefficients.describe()}


class MeasureFlow:
    """ Recorded particle snapshots mu_{t_0}, ..., mu_{t_K}.

    Args:
        times: (K,) strictly increasing recording times, starting at 0.
        steps: (K,) step indices of the recordings.
        positions: (K, N, d) particle positions, rows ordered by `ids`.
        local_time, tilde_local_time: (K, N) local times at the recordings.
        ids: (N,) particle ids.
    """

    def __init__(self, times, steps, positions, local_time=None, tilde_local_time=None, ids=None):
        self.times = np.asarray(times, dtype=float)
        self.steps = np.asarray(steps, dtype=np.int64)
        self.positions = np.asarray(positions, dtype=float)
        K, N = self.positions.shape[:2]
        if self.times.shape != (K,) or self.steps.shape != (K,):
            raise ValueError('times and steps need one entry per snapshot')
        if K > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError('snapshot times must be strictly increasing')
        self.local_time = np.zeros((K, N)) if local_time is None else np.asarray(local_time, dtype=float)
        self.tilde_local_time = (np.zeros((K, N)) if tilde_local_time is None
                                 else np.asarray(tilde_local_time, dtype=float))
        self.ids = np.arange(N) if ids is None else np.asarray(ids, dtype=np.int64)

    def __len__(self):
        return len(self.times)

    @property
    def n(self):
        return self.positions.shape[1]

    @property
    def dim(self):
        return self.positions.shape[2]

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def n_steps(self):
        return int(self.steps[-1])

    def measure(self, j):
        return EmpiricalMeasure(self.positions[j])

    def measures(self):
        return [self.measure(j) for j in range(len(self))]

    def initial(self):
        return self.measure(0)

    def terminal(self):
        return self.measure(len(self) - 1)

    def index_at_step(self, m):
        """Index of the latest snapshot recorded at or before step m."""
        j = int(np.searchsorted(self.steps, m, side='right')) - 1
        if j < 0:
            raise GridMismatchError('no snapshot at or before step {}'.format(m))
        return j

    def at_step(self, m):
        return self.measure(self.index_at_step(m))

    def index_at_time(self, t):
        """Index of the recorded time nearest to t."""
        return int(np.argmin(np.abs(self.times - t)))

    def mean(self):
        return self.positions.mean(axis=1)

    @classmethod
    def constant(cls, gamma, cfg):
        """The flow t -> gamma on the recording grid of cfg."""
        steps = cfg.record_steps()
        atoms = gamma.atoms
        return cls([cfg.time_of(m) for m in steps], steps, np.repeat(atoms[None], len(steps), axis=0))

    def to_csv(self, path):
        header = flow_header(self.dim)
        K, N = len(self), self.n
        block = np.column_stack([
            np.repeat(self.times, N),
            np.tile(self.ids, K),
            self.positions.reshape(K * N, self.dim),
            self.local_time.reshape(-1),
            self.tilde_local_time.reshape(-1),
        ])
        CsvTable.write(path, header, block)

    @classmethod
    def from_csv(cls, path, n_steps=None):
        """ Read a flow CSV. Step indices are recovered from the times when `n_steps` is given,
        otherwise recordings are numbered 0..K-1.
        """
        header, cols = CsvTable.load(path)
        dim = len([name for name in header if name.startswith('x')])
        if header != flow_header(dim):
            raise ValueError('{} is not a flow file (header {})'.format(path, header))
        times = np.unique(cols[TIME])
        K = len(times)
        N = len(cols[TIME]) // K
        if N * K != len(cols[TIME]):
            raise ValueError('{}: snapshots have different particle counts'.format(path))
        X = np.column_stack([cols[name] for name in coord_names(dim)]).reshape(K, N, dim)
        ids = cols[PARTICLE_ID][:N].astype(np.int64)
        if n_steps is None:
            steps = np.arange(K)
        else:
            steps = np.rint(times / times[-1] * n_steps).astype(np.int64)
        return cls(times, steps, X, cols[LOCAL_TIME].reshape(K, N), cols[TILDE_LOCAL_TIME].reshape(K, N), ids)


@dataclass
class SimulationResult:
    flow: MeasureFlow
    sup_abs: np.ndarray
    local_time: np.ndarray
    tilde_local_time: np.ndarray
    ensemble: ParticleEnsemble
    config: SimConfig


def initial_points(cfg, gamma=None):
    """ N starting positions: gamma's atoms when it has exactly N uniform atoms, otherwise
    N draws from gamma (or from cfg.initial) on the "init" stream of the seed.
    """
    if gamma is None:
        return cfg.initial.measure(cfg.N, cfg.domain, cfg.seed).atoms
    if gamma.dim != cfg.domain.dim:
        raise ConfigError('initial measure of dimension {} for a {}-dimensional domain'.format(
            gamma.dim, cfg.domain.dim), field='sim.initial')
    if gamma.n == cfg.N and gamma.uniform:
        return gamma.atoms.copy()
    rng = CounterRNG(cfg.seed, 'init').generator(0)
    return gamma.atoms[rng.choice(gamma.n, size=cfg.N, p=gamma.weights)]


def _run(cfg, points, frozen=None, observers=None, desc='Simulate'):
    domain, coeffs = cfg.domain, cfg.coefficients
    if not np.all(domain.contains(points)):
        raise ConfigError('initial particles outside the domain', field='sim.initial')
    observers = observers or []
    rng = CounterRNG(cfg.seed, 'step')
    h = cfg.step_size
    M = cfg.n_steps
    record = set(cfg.record_steps().tolist())

    ens = ParticleEnsemble.from_points(points)
    sup_abs = np.linalg.norm(ens.positions, axis=1)
    times, steps, snaps, lts, tlts = [], [], [], [], []

    def snapshot():
        times.append(cfg.time_of(ens.step))
        steps.append(ens.step)
        snaps.append(ens.positions.copy())
        lts.append(ens.local_time.copy())
        tlts.append(ens.tilde_local_time.copy())

    snapshot()
    for obs in observers:
        obs.start(ens)
    executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    progress = tqdm(total=M, ncols=75, desc=desc, disable=not cfg.progress)
    try:
        for m in range(M):
            measure = None if frozen is None else frozen.at_step(m)
            prev = ens
            ens = step_particles(ens, coeffs, domain, h, rng, measure=measure, executor=executor)
            # time from the step index so recordings land exactly on the grid
            ens.time = cfg.time_of(ens.step)
            np.maximum(sup_abs, np.linalg.norm(ens.positions, axis=1), out=sup_abs)
            for obs in observers:
                obs.update(prev, ens, h)
            if ens.step in record:
                snapshot()
            progress.update(1)
    finally:
        progress.close()
        if executor is not None:
            executor.shutdown()

    flow = MeasureFlow(times, steps, np.stack(snaps), np.stack(lts), np.stack(tlts), ens.ids)
    return SimulationResult(flow=flow, sup_abs=sup_abs, local_time=ens.local_time.copy(),
                            tilde_local_time=ens.tilde_local_time.copy(), ensemble=ens, config=cfg)


def simulate_mckean(cfg, gamma=None, observers=None):
    """ Run the N-particle system with the drift evaluated against the current empirical law.

    Args:
        cfg: SimConfig.
        gamma: optional initial EmpiricalMeasure; defaults to cfg.initial.
        observers: objects with start(ens) and update(prev, ens, h), called at t=0 and after every step.

    Returns:
        SimulationResult with the recorded flow and per-particle sup|X|, l_T and l~_T.
    """
    logger.info('simulate_mckean: N={} M={} h={:.3g} T={:g} seed={}'.format(
        cfg.N, cfg.n_steps, cfg.step_size, cfg.T, cfg.seed))
    return _run(cfg, initial_points(cfg, gamma), observers=observers)


def check_grid(flow, cfg):
    if flow.dim != cfg.domain.dim:
        raise GridMismatchError('flow of dimension {} for a {}-dimensional domain'.format(flow.dim, cfg.domain.dim))
    if flow.n_steps != cfg.n_steps or abs(flow.horizon - cfg.T) > GRID_RTOL * max(1.0, cfg.T) * 10:
        raise GridMismatchError('flow grid (T={:g}, {} steps) does not match the run grid (T={:g}, {} steps)'.format(
            flow.horizon, flow.n_steps, cfg.T, cfg.n_steps))
    if flow.steps[0] != 0:
        raise GridMismatchError('flow does not start at t=0')


def apply_H(flow, cfg, gamma=None, observers=None):
    """ H^gamma(mu): law flow of independent particles whose drift is frozen to `flow`.

    At step m the drift uses the latest snapshot of `flow` recorded at or before m. With
    stride 1, the seed of cfg and the McKean-Vlasov flow as input, the output equals
    simulate_mckean(cfg) bit for bit.

    Args:
        flow: MeasureFlow on the grid of cfg.
        cfg: SimConfig.
        gamma: initial EmpiricalMeasure; defaults to the first snapshot of `flow`.

    Returns:
        SimulationResult whose flow starts at gamma.
    """
    check_grid(flow, cfg)
    if gamma is None:
        gamma = flow.initial()
    return _run(cfg, initial_points(cfg, gamma), frozen=flow, observers=observers, desc='Frozen flow')


@dataclass
class PicardResult:
    flow: MeasureFlow
    converged: bool
    iterations: int
    distances: list = field(default_factory=list)
    weighted_distances: list = field(default_factory=list)
    var_distances: list = field(default_factory=list)
    lam: float = 0.0

    @property
    def fixed_iteration(self):
        """Index of the first iterate already within tol of its image (None if not converged)."""
        return self.iterations - 1 if self.converged else None

    @property
    def ratios(self):
        """Successive distance ratios d_{m+1}/d_m (nan when d_m = 0)."""
        d = np.asarray(self.distances, dtype=float)
        if len(d) < 2:
            return np.zeros(0)
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(d[:-1] > 0, d[1:] / d[:-1], np.nan)

    def records(self):
        return [{'iteration': i + 1, 'sup_wk': d, 'sup_weighted_wk': w, 'sup_var': v}
                for i, (d, w, v) in enumerate(zip(self.distances, self.weighted_distances, self.var_distances))]


def flow_distance(a, b, k, lam=0.0):
    """ (sup_t W_k, sup_t e^{-lam t} W_k, sup_t ||.||_{k,var}) between two flows on one grid. """
    wk = np.array([wasserstein_k(k, a.measure(j), b.measure(j)) for j in range(len(a))])
    var = np.array([weighted_var_norm(max(k, 1e-12), a.measure(j), b.measure(j)) for j in range(len(a))])
    return float(wk.max()), float(np.max(np.exp(-lam * a.times) * wk)), float(var.max())


def picard_solve(cfg, gamma=None, max_iter=10, tol=1e-2, lam=0.0):
    """ Fixed point of H^gamma by Picard iteration from the constant flow at gamma.

    Every iteration reuses the seed of cfg, so successive iterates share their noise.
    Stops once sup_t W_k between successive iterates falls below `tol`.
    """
    if max_iter < 1:
        raise ConfigError('max_iter must be >= 1', field='picard.max_iter')
    if gamma is None:
        gamma = EmpiricalMeasure(initial_points(cfg))
    current = MeasureFlow.constant(EmpiricalMeasure(initial_points(cfg, gamma)), cfg)
    result = PicardResult(flow=current, converged=False, iterations=0, lam=lam)
    for it in range(max_iter):
        nxt = apply_H(current, cfg, gamma).flow
        d, dw, dv = flow_distance(nxt, current, cfg.k, lam)
        result.distances.append(d)
        result.weighted_distances.append(dw)
        result.var_distances.append(dv)
        result.iterations = it + 1
        result.flow = nxt
        logger.info('picard iteration {}: sup W_k {:.6g}, weighted {:.6g}'.format(it + 1, d, dw))
        current = nxt
        if d < tol:
            result.converged = True
            break
    if not result.converged:
        logger.warning('picard iteration did not reach tol {} in {} iterations'.format(tol, max_iter))
    return result
