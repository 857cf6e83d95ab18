"""
Verification reports, pass rules and bootstrap confidence intervals.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from mvreflect.config import BOOTSTRAP_RESAMPLES, CI_LEVEL
from mvreflect.utils.rng import CounterRNG

RULE_KINDS = ('upper', 'lower', 'range', 'finite')


@dataclass(frozen=True)
class PassRule:
    """ Decision on a point estimate: estimate <= upper, >= lower, within [lower, upper], or finite.
    A non-finite estimate fails every rule.
    """
    kind: str
    lower: float = None
    upper: float = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError('pass rule must be one of {}'.format(RULE_KINDS))
        if self.kind in ('upper', 'range') and self.upper is None:
            raise ValueError('{} rule needs an upper bound'.format(self.kind))
        if self.kind in ('lower', 'range') and self.lower is None:
            raise ValueError('{} rule needs a lower bound'.format(self.kind))

    @classmethod
    def at_most(cls, upper):
        return cls('upper', upper=float(upper))

    @classmethod
    def at_least(cls, lower):
        return cls('lower', lower=float(lower))

    @classmethod
    def within(cls, lower, upper):
        return cls('range', lower=float(lower), upper=float(upper))

    @classmethod
    def finite(cls):
        return cls('finite')

    def evaluate(self, estimate):
        if estimate is None or not math.isfinite(estimate):
            return False
        if self.kind == 'upper':
            return estimate <= self.upper
        if self.kind == 'lower':
            return estimate >= self.lower
        if self.kind == 'range':
            return self.lower <= estimate <= self.upper
        return True

    def describe(self):
        if self.kind == 'upper':
            return '<= {:g}'.format(self.upper)
        if self.kind == 'lower':
            return '>= {:g}'.format(self.lower)
        if self.kind == 'range':
            return 'in [{:g}, {:g}]'.format(self.lower, self.upper)
        return 'finite'


@dataclass
class VerificationReport:
    """ Outcome of one check.

    `passed` is computed from the estimate and the rule only; the CI is widened
    when needed so that it always contains the estimate.
    """
    name: str
    estimate: float
    ci_low: float
    ci_high: float
    rule: PassRule
    metadata: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.estimate = float(self.estimate)
        lo = float(self.ci_low) if self.ci_low is not None else self.estimate
        hi = float(self.ci_high) if self.ci_high is not None else self.estimate
        if math.isfinite(self.estimate):
            lo = min(lo, self.estimate) if math.isfinite(lo) else self.estimate
            hi = max(hi, self.estimate) if math.isfinite(hi) else self.estimate
        self.ci_low, self.ci_high = lo, hi
        self.passed = self.rule.evaluate(self.estimate)

    def tolerance_str(self):
        return self.rule.describe()

    def to_record(self):
        record = {'check': self.name, 'estimate': self.estimate, 'ci_low': self.ci_low, 'ci_high': self.ci_high,
                  'tolerance': self.tolerance_str(), 'passed': self.passed}
        for key in ('N', 'h', 'T', 'seed'):
            record[key] = self.metadata.get(key)
        return record


def run_metadata(cfg):
    return {'N': cfg.N, 'h': cfg.h, 'T': cfg.T, 'seed': cfg.seed}


def bootstrap_ci(samples, statistic, seed, stream, n_resamples=BOOTSTRAP_RESAMPLES, level=CI_LEVEL):
    """ Percentile bootstrap interval of statistic(*samples).

    All samples are indexed by the same resampled rows, so paired samples stay paired.
    Rows are drawn from the "bootstrap/<stream>" stream of `seed`.

    Args:
        samples: list of arrays with equal first dimension.
        statistic: function of resampled arrays returning a float.

    Returns:
        (low, high); (nan, nan) when every resampled statistic is non-finite.
    """
    samples = [np.asarray(s) for s in samples]
    n = len(samples[0])
    gen = CounterRNG(seed, 'bootstrap/{}'.format(stream)).generator(0)
    values = np.empty(n_resamples)
    with np.errstate(all='ignore'):
        for b in range(n_resamples):
            idx = gen.integers(0, n, size=n)
            values[b] = statistic(*[s[idx] for s in samples])
    values = values[np.isfinite(values)]
    if values.size == 0:
        return float('nan'), float('nan')
    alpha = 1.0 - level
    return float(np.quantile(values, alpha / 2.0)), float(np.quantile(values, 1.0 - alpha / 2.0))


def bootstrap_ci_mean(values, seed, stream, n_resamples=BOOTSTRAP_RESAMPLES, level=CI_LEVEL):
    return bootstrap_ci([values], lambda v: float(v.mean()), seed, stream, n_resamples, level)
