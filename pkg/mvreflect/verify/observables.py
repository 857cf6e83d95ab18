"""
Named observables f(X) acting on the first coordinate of a batch (n, d).
"""
import numpy as np

from mvreflect.utils.errors import ConfigError


def _sin(X):
    return np.sin(X[:, 0])


def _cos_pi(X):
    return np.cos(np.pi * X[:, 0])


def _indicator_left_half(X):
    return (X[:, 0] <= 0.5).astype(float)


def _constant(X):
    return np.ones(len(X))


def _identity(X):
    return X[:, 0].copy()


def _exp(X):
    return np.exp(X[:, 0])


def _shifted_cos(X):
    return 2.0 + np.cos(np.pi * X[:, 0])


def _bump(X):
    return 1.0 + np.exp(-np.sum((X - 0.5) ** 2, axis=1) / 0.02)


# name -> (function, sup norm on the domain or None when unbounded, strictly positive)
OBSERVABLES = {
    'sin': (_sin, 1.0, False),
    'cos_pi': (_cos_pi, 1.0, False),
    'indicator_left_half': (_indicator_left_half, 1.0, False),
    'constant': (_constant, 1.0, True),
    'identity': (_identity, None, False),
    'exp': (_exp, None, True),
    'shifted_cos': (_shifted_cos, 3.0, True),
    'bump': (_bump, 2.0, True),
}


class Observable:
    """ An observable with its sup norm (estimated on samples when not known). """
    def __init__(self, fn, name=None, sup_norm=None, positive=False):
        self.fn = fn
        self.name = name or getattr(fn, '__name__', 'f')
        self.sup_norm = sup_norm
        self.positive = positive

    def __call__(self, X):
        return np.asarray(self.fn(np.atleast_2d(X)), dtype=float)

    def sup_on(self, samples):
        if self.sup_norm is not None:
            return float(self.sup_norm)
        return float(np.max(np.abs(self(samples))))


def get_observable(f):
    """Accept a registry name, a Observable or a plain callable."""
    if isinstance(f, Observable):
        return f
    if callable(f):
        return Observable(f)
    if f not in OBSERVABLES:
        raise ConfigError('unknown observable "{}"; available: {}'.format(f, sorted(OBSERVABLES)),
                          field='verify.f')
    fn, sup, positive = OBSERVABLES[f]
    return Observable(fn, name=f, sup_norm=sup, positive=positive)
