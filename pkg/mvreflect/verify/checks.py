"""
Statistical checks of moment bounds, local-time integrability, Wasserstein
contraction, log-Harnack and gradient estimates on simulated particle systems.

Every check returns a VerificationReport whose pass flag depends on the point
estimate and the stated rule only. Constants are fitted from the simulation,
never compared with reference values. Comparisons between two initial laws
always reuse the seed of the run, so both systems see the same noise.
"""
import logging
import math

import numpy as np
from scipy import stats

from mvreflect.config import Config
from mvreflect.measures.empirical import EmpiricalMeasure
from mvreflect.measures.entropy import common_edges, histogram, pinsker_holds, relative_entropy
from mvreflect.measures.psi import PsiFunction, get_psi
from mvreflect.measures.transport import wasserstein_k
from mvreflect.sde.simulator import simulate_mckean
from mvreflect.utils.base_utils import as_points
from mvreflect.utils.errors import ConfigError
from .observables import get_observable
from .report import PassRule, VerificationReport, bootstrap_ci, run_metadata

logger = logging.getLogger(__name__)


def levy_local_time_oracle(k, T=1.0):
    """ E e^{k l_T} for Brownian motion reflected at 0 and started there: 2 e^{k^2 T/2} Phi(k sqrt(T)). """
    return float(2.0 * math.exp(0.5 * k * k * T) * stats.norm.cdf(k * math.sqrt(T)))


def stability_ratio(constants):
    """ max c / min c over the positive constants; 1 when none is positive. """
    c = np.asarray(constants, dtype=float)
    if not np.all(np.isfinite(c)):
        return float('inf')
    positive = c[c > 0]
    if positive.size == 0:
        return 1.0
    return float(positive.max() / positive.min())


def terminal_only(cfg, **changes):
    """cfg with `changes` that records the initial and terminal snapshots only."""
    new = cfg.replace(**changes)
    return new.replace(record_stride=new.n_steps)


def _dirac(x, dim):
    return EmpiricalMeasure(as_points(x, dim))


def _constant_stability_report(name, cfg, samples, norms, tolerance, stream, details):
    norms = np.asarray(norms, dtype=float)

    def statistic(*s):
        return stability_ratio([si.mean() / ni for si, ni in zip(s, norms)])

    means = np.array([s.mean() for s in samples])
    constants = means / norms
    estimate = stability_ratio(constants)
    ci = bootstrap_ci(samples, statistic, cfg.seed, stream, Config().n_bootstrap)
    details.update({'moments': means.tolist(), 'constants': constants.tolist(),
                    'fitted_c': float(np.max(constants)) if np.all(np.isfinite(constants)) else float('inf')})
    tolerance = Config().moment_ratio_tol if tolerance is None else tolerance
    return VerificationReport(name, estimate, ci[0], ci[1], PassRule.at_most(tolerance), run_metadata(cfg), details)


def check_moment_bound(cfg, points, k=None, tolerance=None):
    """ E sup_{t<=T} |X_t^x|^k <= c (1 + |x|^k).

    Estimate: ratio of the largest to the smallest positive fitted constant
    E sup|X^x|^k / (1 + |x|^k) over the starting points; pass iff at most `tolerance` (2).
    """
    k = cfg.k if k is None else float(k)
    if k < 1:
        raise ConfigError('moment bound needs k >= 1, got {}'.format(k), field='verify.k')
    points = [as_points(x, cfg.domain.dim)[0] for x in points]
    samples, norms = [], []
    for x in points:
        result = simulate_mckean(terminal_only(cfg), _dirac(x, cfg.domain.dim))
        samples.append(result.sup_abs ** k)
        norms.append(1.0 + np.linalg.norm(x) ** k)
    details = {'k': k, 'points': [x.tolist() for x in points]}
    return _constant_stability_report('moment_bound', cfg, samples, norms, tolerance, 'moment_bound', details)


def check_psi_moment(cfg, psi, points, tolerance=None):
    """ E sup_{t<=T} psi(|X_t^x|) <= c (1 + psi(|x|)), stability of the fitted c across x. """
    if not isinstance(psi, PsiFunction):
        psi = get_psi(psi)
    points = [as_points(x, cfg.domain.dim)[0] for x in points]
    samples, norms = [], []
    for x in points:
        result = simulate_mckean(terminal_only(cfg), _dirac(x, cfg.domain.dim))
        # psi is increasing, so sup psi(|X|) = psi(sup |X|)
        samples.append(psi(result.sup_abs))
        norms.append(1.0 + float(psi(np.linalg.norm(x))))
    details = {'psi': repr(psi), 'points': [x.tolist() for x in points]}
    return _constant_stability_report('psi_moment', cfg, samples, norms, tolerance, 'psi_moment', details)


def check_two_point_moment(cfg, pairs, k=None, tolerance=None):
    """ E sup_t |X_t^x - X_t^y|^k <= c |x - y|^k with both systems driven by the same noise.
    The supremum runs over the recorded times.
    """
    k = cfg.k if k is None else float(k)
    dim = cfg.domain.dim
    samples, norms, starts = [], [], []
    for x, y in pairs:
        x, y = as_points(x, dim)[0], as_points(y, dim)[0]
        gap = np.linalg.norm(x - y)
        if gap == 0:
            raise ConfigError('two-point moment needs distinct starting points', field='verify.pairs')
        fx = simulate_mckean(cfg, _dirac(x, dim)).flow
        fy = simulate_mckean(cfg, _dirac(y, dim)).flow
        sup_gap = np.max(np.linalg.norm(fx.positions - fy.positions, axis=2), axis=0)
        samples.append(sup_gap ** k)
        norms.append(gap ** k)
        starts.append([x.tolist(), y.tolist()])
    details = {'k': k, 'pairs': starts}
    return _constant_stability_report('two_point_moment', cfg, samples, norms, tolerance, 'two_point_moment',
                                      details)


def check_local_time_moments(cfg, k_list=(1.0,), refinements=2, oracle=None, gamma=None, tolerance=None):
    """ E exp(k l~_T) for each k at step sizes h, h/2, ... (`refinements` of them).

    Estimate: the largest ratio max(a/b, b/a) between estimates at consecutive step sizes;
    pass iff at most `tolerance` (1.5). An overflowing exponential gives an infinite
    estimate and the l~_T quantiles in the details. With one step size the estimate is the
    largest moment itself, which only has to be finite.

    Args:
        oracle: optional exact value, dict k -> value or function (k, T) -> value; the
            relative error of the finest estimate is reported in the details.
    """
    if refinements < 1:
        raise ConfigError('refinements must be >= 1', field='verify.refinements')
    if not cfg.domain.bounded and not cfg.domain.tilde_set:
        raise ConfigError('local-time moments on an unbounded {} need an explicit boundary predicate'.format(
            cfg.domain.kind), field='domain.tilde')
    k_list = [float(k) for k in k_list]
    steps = [cfg.h / 2 ** j for j in range(refinements)]
    tilde = []
    for h in steps:
        result = simulate_mckean(terminal_only(cfg, h=h), gamma)
        tilde.append(result.tilde_local_time)
    with np.errstate(over='ignore'):
        samples = [np.exp(k * lt) for lt in tilde for k in k_list]
    n_k = len(k_list)

    def statistic(*s):
        means = np.array([v.mean() for v in s]).reshape(refinements, n_k)
        if not np.all(np.isfinite(means)):
            return float('inf')
        if refinements == 1:
            return float(means.max())
        r = means[1:] / means[:-1]
        return float(np.max(np.maximum(r, 1.0 / r)))

    with np.errstate(over='ignore'):
        estimate = statistic(*samples)
        moments = np.array([v.mean() for v in samples]).reshape(refinements, n_k)
    details = {'k': k_list, 'h': steps, 'moments': moments.tolist()}
    if not math.isfinite(estimate):
        details['overflow'] = True
        details['l_tilde_quantiles'] = {q: float(np.quantile(tilde[-1], q)) for q in (0.5, 0.9, 0.99, 1.0)}
        ci = (float('inf'), float('inf'))
    else:
        ci = bootstrap_ci(samples, statistic, cfg.seed, 'local_time_moments', Config().n_bootstrap)
    if oracle is not None:
        if callable(oracle):
            exact = {k: float(oracle(k, cfg.T)) for k in k_list}
        elif isinstance(oracle, dict):
            exact = {k: float(oracle[k]) for k in k_list}
        else:
            exact = {k: float(oracle) for k in k_list}
        details['oracle'] = exact
        details['oracle_rel_err'] = {k: abs(moments[-1, i] - exact[k]) / exact[k] for i, k in enumerate(k_list)}
    if refinements == 1:
        rule = PassRule.finite()
    else:
        rule = PassRule.at_most(Config().refinement_ratio_tol if tolerance is None else tolerance)
    return VerificationReport('local_time_moments', estimate, ci[0], ci[1], rule, run_metadata(cfg), details)


W2_MODES = ('bounded', 'monotone', 'oracle')


def check_w2_contraction(cfg, mu0, nu0, t_grid, mode='bounded', rate=1.0, tolerance=None):
    """ W_2(mu_t, nu_t) / W_2(mu_0, nu_0) on t_grid under common noise.

    Modes:
        bounded: estimate is the fitted C = max ratio^2; pass iff finite.
        monotone: estimate is the largest increase of the ratio between grid points;
            pass iff at most `tolerance` (0.02).
        oracle: estimate is max |ratio - e^{-rate t}|; pass iff at most `tolerance` (0.1).
    """
    if mode not in W2_MODES:
        raise ConfigError('w2 contraction mode must be one of {}'.format(W2_MODES), field='verify.mode')
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    d0 = wasserstein_k(2, mu0, nu0)
    fm = simulate_mckean(cfg, mu0).flow
    fn = simulate_mckean(cfg, nu0).flow
    idx = [fm.index_at_time(t) for t in t_grid]
    times = fm.times[idx]
    Xm = [fm.positions[j] for j in idx]
    Xn = [fn.positions[j] for j in idx]

    def ratios_of(*s):
        half = len(s) // 2
        d = np.array([wasserstein_k(2, EmpiricalMeasure(a), EmpiricalMeasure(b)) for a, b in zip(s[:half], s[half:])])
        return d / d0 if d0 > 0 else np.zeros_like(d)

    def statistic(*s):
        r = ratios_of(*s)
        if mode == 'bounded':
            return float(np.max(r) ** 2)
        if mode == 'monotone':
            return float(max(0.0, np.max(np.diff(r)))) if len(r) > 1 else 0.0
        return float(np.max(np.abs(r - np.exp(-rate * times))))

    samples = Xm + Xn
    ratios = ratios_of(*samples)
    estimate = statistic(*samples)
    if cfg.domain.dim == 1:
        ci = bootstrap_ci(samples, statistic, cfg.seed, 'w2_contraction', Config().n_bootstrap)
    else:
        # no resampling beyond d = 1
        ci = (estimate, estimate)
    if mode == 'bounded':
        rule = PassRule.finite()
    elif mode == 'monotone':
        rule = PassRule.at_most(0.02 if tolerance is None else tolerance)
    else:
        rule = PassRule.at_most(0.1 if tolerance is None else tolerance)
    details = {'mode': mode, 'w2_initial': d0, 'times': times.tolist(), 'ratios': ratios.tolist(),
               'fitted_C': float(np.max(ratios) ** 2)}
    return VerificationReport('w2_contraction', estimate, ci[0], ci[1], rule, run_metadata(cfg), details)


def _entropy_bounds(domain):
    lo, hi = domain.bounding_box()
    if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
        return lo, hi
    return None


def _entropies(domain, pairs, bins):
    ents, pinsker = [], []
    bounds = _entropy_bounds(domain)
    for Xn, Xm in pairs:
        edges = common_edges([Xn, Xm], bins=bins, bounds=bounds)
        hn, hm = histogram(Xn, edges), histogram(Xm, edges)
        ent = relative_entropy(hn, hm)
        ents.append(ent)
        pinsker.append(pinsker_holds(hn, hm, ent) if math.isfinite(ent) else True)
    return np.array(ents), np.array(pinsker)


def _fit_slope(times, ents, mask):
    use = mask & np.isfinite(ents) & (ents > 0)
    if use.sum() < 2:
        return float('nan')
    slope, _ = np.polyfit(np.log(times[use]), np.log(ents[use]), 1)
    return float(slope)


def check_log_harnack(cfg, mu0, nu0, t_grid, fit_t_max=None, bins=None, slope_range=None):
    """ Entropy-cost form of the log-Harnack inequality, Ent(nu_t | mu_t) <= C W_2(mu_0, nu_0)^2 / t.

    Relative entropies come from histograms on common bins. The estimate is the
    least-squares slope of log Ent against log t over grid points with t <= fit_t_max;
    pass iff it lies in `slope_range` (-1.6, -0.4). An infinite entropy (empty bin)
    or a violated Pinsker inequality anywhere on the grid makes the estimate nan.
    """
    if cfg.domain.dim > 2:
        raise ConfigError('entropy estimation supports d <= 2', field='domain')
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if len(t_grid) < 3 or t_grid[-1] < 10 * t_grid[0]:
        raise ConfigError('log-Harnack grid needs at least 3 times spanning a decade', field='verify.t_grid')
    bins = Config().hist_bins if bins is None else bins
    slope_range = Config().slope_range if slope_range is None else slope_range
    w2 = wasserstein_k(2, mu0, nu0)
    fm = simulate_mckean(cfg, mu0).flow
    fn = simulate_mckean(cfg, nu0).flow
    idx = [fm.index_at_time(t) for t in t_grid]
    times = fm.times[idx]
    mask = np.ones(len(times), dtype=bool) if fit_t_max is None else times <= fit_t_max + 1e-12

    def statistic(*s):
        ents, pinsker = _entropies(cfg.domain, list(zip(s[::2], s[1::2])), bins)
        if not (np.all(np.isfinite(ents)) and np.all(pinsker)):
            return float('nan')
        return _fit_slope(times, ents, mask)

    samples = []
    for j in idx:
        samples += [fn.positions[j], fm.positions[j]]
    ents, pinsker = _entropies(cfg.domain, list(zip(samples[::2], samples[1::2])), bins)
    estimate = statistic(*samples)
    ci = bootstrap_ci(samples, statistic, cfg.seed, 'log_harnack', Config().n_bootstrap)
    with np.errstate(divide='ignore', invalid='ignore'):
        constant = float(np.max(times * ents) / w2 ** 2) if w2 > 0 else float('nan')
    details = {'times': times.tolist(), 'entropy': ents.tolist(), 'pinsker': pinsker.tolist(),
               'w2_initial': w2, 'fit_t_max': fit_t_max, 'fitted_constant': constant}
    if not np.all(np.isfinite(ents)):
        details['empty_bins'] = 'infinite relative entropy: increase N or the bin width'
        logger.warning('log_harnack: infinite relative entropy on the grid')
    return VerificationReport('log_harnack', estimate, ci[0], ci[1], PassRule.within(*slope_range),
                              run_metadata(cfg), details)


def check_log_harnack_functional(cfg, mu0, nu0, t, functions=('shifted_cos', 'bump', 'exp')):
    """ P_t log f(nu) <= log P_t f(mu) + C W_2(mu, nu)^2 / t for positive f.

    The estimate is the smallest C >= 0 making every tested inequality hold; pass iff finite.
    """
    funcs = [get_observable(f) for f in functions]
    w2 = wasserstein_k(2, mu0, nu0)
    fm = simulate_mckean(cfg, mu0).flow
    fn = simulate_mckean(cfg, nu0).flow
    j = fm.index_at_time(t)
    t = float(fm.times[j])
    if t <= 0:
        raise ConfigError('log-Harnack needs t > 0', field='verify.t')
    samples = []
    for f in funcs:
        vm, vn = f(fm.positions[j]), f(fn.positions[j])
        if np.any(vm <= 0) or np.any(vn <= 0):
            raise ConfigError('observable "{}" is not positive on the samples'.format(f.name), field='verify.functions')
        samples += [vm, vn]

    def gaps_of(*s):
        return np.array([np.mean(np.log(vn)) - np.log(np.mean(vm)) for vm, vn in zip(s[::2], s[1::2])])

    def statistic(*s):
        g = np.maximum(gaps_of(*s), 0.0)
        if w2 == 0:
            return 0.0 if np.all(g == 0) else float('inf')
        return float(np.max(g) * t / w2 ** 2)

    gaps = gaps_of(*samples)
    estimate = statistic(*samples)
    ci = bootstrap_ci(samples, statistic, cfg.seed, 'log_harnack_functional', Config().n_bootstrap)
    details = {'t': t, 'w2_initial': w2, 'functions': [f.name for f in funcs], 'gaps': gaps.tolist()}
    return VerificationReport('log_harnack_functional', estimate, ci[0], ci[1], PassRule.at_least(0.0),
                              run_metadata(cfg), details)


def check_gradient_estimate(cfg, f, nu0, t_grid, eps=0.05, directions=None, tolerance=None, eps_tol=None):
    """ Finite-difference gradient estimate |P_t f(nu^eps) - P_t f(nu)| / W_2(nu^eps, nu).

    nu^eps is nu translated by eps along each direction. The estimate is the spread
    max/min over t_grid of ratio * sqrt(t) / ||f||_inf (1 when every ratio vanishes);
    pass iff at most `tolerance` (2). When the ratios at eps and eps/2 differ by more than
    `eps_tol` (20%) anywhere, the finite difference is not resolved and the estimate is nan.
    """
    obs = get_observable(f)
    dim = cfg.domain.dim
    eps_tol = Config().gradient_eps_tol if eps_tol is None else eps_tol
    tolerance = Config().moment_ratio_tol if tolerance is None else tolerance
    if directions is None:
        directions = [np.eye(dim)[0]]
    directions = [as_points(e, dim)[0] / np.linalg.norm(e) for e in directions]
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if np.any(t_grid <= 0):
        raise ConfigError('gradient estimate needs t > 0', field='verify.t_grid')

    base = simulate_mckean(cfg, nu0).flow
    idx = [base.index_at_time(t) for t in t_grid]
    times = base.times[idx]
    base_vals = [obs(base.positions[j]) for j in idx]
    sup = obs.sup_on(base.positions[idx].reshape(-1, dim))

    ratios = {}
    shifted_vals = {}
    for d_i, e in enumerate(directions):
        for step in (eps, eps / 2.0):
            nu_e = nu0.translate(step * e)
            if not np.all(cfg.domain.contains(nu_e.atoms)):
                raise ConfigError('translated initial law leaves the domain; reduce eps', field='verify.eps')
            w = wasserstein_k(2, nu_e, nu0)
            if w == 0:
                raise ConfigError('perturbation has zero W_2 size', field='verify.eps')
            flow = simulate_mckean(cfg, nu_e).flow
            vals = [obs(flow.positions[j]) for j in idx]
            ratios[d_i, step] = np.array([abs(v.mean() - b.mean()) / w for v, b in zip(vals, base_vals)])
            if step == eps:
                shifted_vals[d_i] = (vals, w)

    def spread(r):
        return stability_ratio(r * np.sqrt(times) / sup)

    main = np.max([ratios[d_i, eps] for d_i in range(len(directions))], axis=0)
    half = np.max([ratios[d_i, eps / 2.0] for d_i in range(len(directions))], axis=0)
    with np.errstate(divide='ignore', invalid='ignore'):
        eps_err = np.where(half > 0, np.abs(main - half) / half, np.where(main > 0, np.inf, 0.0))
    eps_err = float(np.max(eps_err))

    def statistic(*s):
        n_t = len(times)
        b = s[:n_t]
        r = np.zeros(n_t)
        for d_i in range(len(directions)):
            sh = s[n_t * (d_i + 1): n_t * (d_i + 2)]
            w = shifted_vals[d_i][1]
            r = np.maximum(r, np.array([abs(v.mean() - bb.mean()) / w for v, bb in zip(sh, b)]))
        return spread(r)

    samples = list(base_vals)
    for d_i in range(len(directions)):
        samples += shifted_vals[d_i][0]
    estimate = spread(main) if eps_err <= eps_tol else float('nan')
    ci = bootstrap_ci(samples, statistic, cfg.seed, 'gradient_estimate', Config().n_bootstrap)
    details = {'f': obs.name, 'eps': eps, 'times': times.tolist(), 'ratios': main.tolist(),
               'scaled': (main * np.sqrt(times) / sup).tolist(), 'eps_rel_diff': eps_err, 'sup_norm': sup}
    return VerificationReport('gradient_estimate', estimate, ci[0], ci[1], PassRule.at_most(tolerance),
                              run_metadata(cfg), details)


class OccupationObserver:
    """Accumulates h * f(X) at the start of every step, per particle."""

    def __init__(self, f):
        self.f = f
        self.total = None

    def start(self, ens):
        self.total = np.zeros(ens.n)

    def update(self, prev, ens, h):
        self.total += h * self.f(prev.positions)


def occupation_integral(cfg, f, gamma=None, expected=None, tolerance=0.05):
    """ E int_0^T f(X_s) ds by left-point time quadrature.

    Pass iff the estimate is within `tolerance` of `expected`, or finite when no value is expected.
    """
    obs = get_observable(f)
    observer = OccupationObserver(obs)
    simulate_mckean(terminal_only(cfg), gamma, observers=[observer])
    values = observer.total
    estimate = float(values.mean())
    ci = bootstrap_ci([values], lambda v: float(v.mean()), cfg.seed, 'occupation_integral', Config().n_bootstrap)
    if expected is None:
        rule = PassRule.finite()
    else:
        rule = PassRule.within(expected - tolerance, expected + tolerance)
    details = {'f': obs.name, 'expected': expected}
    return VerificationReport('occupation_integral', estimate, ci[0], ci[1], rule, run_metadata(cfg), details)


CHECKS = {
    'moment_bound': check_moment_bound,
    'psi_moment': check_psi_moment,
    'two_point_moment': check_two_point_moment,
    'local_time_moments': check_local_time_moments,
    'w2_contraction': check_w2_contraction,
    'log_harnack': check_log_harnack,
    'log_harnack_functional': check_log_harnack_functional,
    'gradient_estimate': check_gradient_estimate,
    'occupation_integral': occupation_integral,
}
