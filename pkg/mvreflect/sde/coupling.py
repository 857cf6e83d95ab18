"""
Coupling by change of measure for the log-Harnack inequality.

Under the shifted noise the pair solves

    dX = {b_t(X, mu_t) - (X - Y)/xi_t} dt + sigma_t(X) dW + n(X) dl^X,
    dY = b_t(Y, nu_t) dt + sigma_t(Y) dW + n(Y) dl^Y,

with xi_t = (1 - e^{L(t - t0)})/L, which forces X_{t0} = Y_{t0}. The price of the
shift is the Girsanov cost 1/2 int_0^{t0} |sigma^*(sigma sigma^*)^{-1}(X)(X - Y)|^2 / xi_t^2 dt.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from mvreflect.config import Config
from mvreflect.geometry.reflection import reflect_batch
from mvreflect.utils.base_utils import as_points
from mvreflect.utils.errors import ConfigError
from mvreflect.utils.rng import CounterRNG

logger = logging.getLogger(__name__)


def xi(t, t0, L):
    """xi_t = (1 - e^{L(t - t0)})/L, and t0 - t in the limit L -> 0."""
    t = np.asarray(t, dtype=float)
    if L == 0:
        return t0 - t
    return -np.expm1(L * (t - t0)) / L


def exact_gap(t, gap0, t0, L):
    """|X_t - Y_t| for b = 0, constant sigma and no boundary contact: gap0 e^{-Lt} xi_t / xi_0."""
    return gap0 * np.exp(-L * np.asarray(t, dtype=float)) * xi(t, t0, L) / xi(0.0, t0, L)


@dataclass
class CouplingRecord:
    times: np.ndarray
    mean_gap: np.ndarray
    terminal_gaps: np.ndarray
    costs: np.ndarray
    initial_gap: float
    t0: float
    L: float
    clamped_steps: int
    local_time_x: np.ndarray
    local_time_y: np.ndarray

    @property
    def mean_cost(self):
        return float(self.costs.mean())

    @property
    def max_terminal_gap(self):
        return float(self.terminal_gaps.max())

    def cost_ratio(self):
        """mean cost * t0 / W_2(delta_x0, delta_y0)^2, nan for coincident starts."""
        if self.initial_gap == 0:
            return float('nan')
        return self.mean_cost * self.t0 / self.initial_gap ** 2

    def records(self):
        return [{'t': float(t), 'mean_gap': float(g)} for t, g in zip(self.times, self.mean_gap)]


def _frozen(flow, t, fallback):
    if flow is None:
        return fallback, np.full(len(fallback), 1.0 / len(fallback))
    mu = flow.measure(flow.index_at_time(t))
    return mu.atoms, mu.weights


def couple_pair(cfg, x0, y0, t0, L=None, mu_flow=None, nu_flow=None, n_pairs=None):
    """ Simulate `n_pairs` independent copies of the coupled pair on [0, t0].

    Both components share their Gaussian increments (the "coupling" stream of the seed);
    xi is floored at the step size, which binds on the last step only.

    Args:
        cfg: SimConfig providing domain, coefficients, h and seed.
        x0, y0: starting points in the closed domain.
        t0: coupling time, 0 < t0 <= cfg.T.
        L: rate in xi_t; defaults to Config.coupling_rate.
        mu_flow, nu_flow: MeasureFlow of the laws the drifts are frozen to; required when
            the drift depends on the measure.
        n_pairs: number of replicate pairs; defaults to Config.coupling_pairs.

    Returns:
        CouplingRecord.
    """
    defaults = Config()
    L = defaults.coupling_rate if L is None else float(L)
    n_pairs = defaults.coupling_pairs if n_pairs is None else int(n_pairs)
    if not 0 < t0 <= cfg.T:
        raise ConfigError('coupling time must lie in (0, T], got {}'.format(t0), field='couple.t0')
    if L <= 0:
        raise ConfigError('coupling rate L must be positive', field='couple.L')
    if n_pairs < 1:
        raise ConfigError('need at least one coupled pair', field='couple.n_pairs')
    domain, coeffs = cfg.domain, cfg.coefficients
    if coeffs.drift.depends_on_measure and (mu_flow is None or nu_flow is None):
        raise ConfigError('drift depends on the measure: frozen flows for both laws are required',
                          field='couple.flows')
    x0 = as_points(x0, domain.dim)[0]
    y0 = as_points(y0, domain.dim)[0]
    if not (domain.contains(x0) and domain.contains(y0)):
        raise ConfigError('coupling starts outside the domain', field='couple.x0')

    M = max(1, int(math.ceil(t0 / cfg.h - 1e-12 * t0 / cfg.h)))
    h = t0 / M
    ids = np.arange(n_pairs)
    rng = CounterRNG(cfg.seed, 'coupling')
    X = np.tile(x0, (n_pairs, 1))
    Y = np.tile(y0, (n_pairs, 1))
    lx = np.zeros(n_pairs)
    ly = np.zeros(n_pairs)
    cost = np.zeros(n_pairs)
    mean_gap = np.zeros(M + 1)
    mean_gap[0] = np.linalg.norm(x0 - y0)
    clamped = 0
    for m in range(M):
        t = m * h
        xi_t = float(xi(t, t0, L))
        if xi_t < h:
            xi_t = h
            clamped += 1
        Z = rng.normals(m, ids, domain.dim)
        D = X - Y
        cost += 0.5 * h * coeffs.diffusion.inverse_norm2(t, X, D) / xi_t ** 2
        bx = coeffs.drift(t, X, *_frozen(mu_flow, t, X))
        by = coeffs.drift(t, Y, *_frozen(nu_flow, t, Y))
        sqh = math.sqrt(h)
        rx = reflect_batch(domain, X, (bx - D / xi_t) * h + coeffs.diffusion.apply(t, X, Z) * sqh)
        ry = reflect_batch(domain, Y, by * h + coeffs.diffusion.apply(t, Y, Z) * sqh)
        X, Y = rx.positions, ry.positions
        lx += rx.increments
        ly += ry.increments
        mean_gap[m + 1] = np.linalg.norm(X - Y, axis=1).mean()

    record = CouplingRecord(times=np.linspace(0.0, t0, M + 1), mean_gap=mean_gap,
                            terminal_gaps=np.linalg.norm(X - Y, axis=1), costs=cost,
                            initial_gap=float(np.linalg.norm(x0 - y0)), t0=float(t0), L=L,
                            clamped_steps=clamped, local_time_x=lx, local_time_y=ly)
    logger.info('couple_pair: t0={:g} L={:g} pairs={} mean cost {:.6g}, max terminal gap {:.3g}, '
                'clamped steps {}'.format(t0, L, n_pairs, record.mean_cost, record.max_terminal_gap, clamped))
    return record
