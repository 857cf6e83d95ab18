"""
Initial laws gamma sampled into N particle positions inside the domain.
All sampling uses the "init" stream of the run seed.
"""
import numpy as np

from mvreflect.measures.empirical import EmpiricalMeasure
from mvreflect.utils.errors import ConfigError
from mvreflect.utils.rng import CounterRNG

MAX_REJECTION_ROUNDS = 1000


class InitialLaw:
    kind = None

    def sample(self, n, domain, rng):
        raise NotImplementedError

    def measure(self, n, domain, seed):
        """gamma as an EmpiricalMeasure of n atoms drawn from the init stream of `seed`."""
        rng = CounterRNG(seed, 'init').generator(0)
        return EmpiricalMeasure(self.sample(n, domain, rng))


class Dirac(InitialLaw):
    kind = 'dirac'

    def __init__(self, point=None):
        self.point = None if point is None else np.atleast_1d(np.asarray(point, dtype=float))

    def sample(self, n, domain, rng):
        if self.point is None:
            return np.zeros((n, domain.dim))
        if not domain.contains(self.point):
            raise ConfigError('Dirac initial point {} is outside the domain'.format(self.point.tolist()),
                              field='sim.initial.point')
        return np.tile(self.point, (n, 1))


def _rejection(draw, n, domain, rng):
    out = np.zeros((0, domain.dim))
    for _ in range(MAX_REJECTION_ROUNDS):
        cand = draw(max(n, 64))
        out = np.vstack([out, cand[domain.contains(cand)]])
        if len(out) >= n:
            return out[:n]
    raise ConfigError('initial law puts too little mass on the domain for rejection sampling', field='sim.initial')


class Uniform(InitialLaw):
    """Uniform on the domain, or on domain ∩ [lo, hi] when a window box is given."""
    kind = 'uniform'

    def __init__(self, lo=None, hi=None, window=1.0):
        self.lo = None if lo is None else np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = None if hi is None else np.atleast_1d(np.asarray(hi, dtype=float))
        self.window = float(window)

    def sample(self, n, domain, rng):
        if self.lo is None:
            lo, hi = domain.bounding_box(self.window)
        else:
            lo, hi = self.lo, self.hi
        return _rejection(lambda m: rng.uniform(lo, hi, size=(m, domain.dim)), n, domain, rng)


class Gaussian(InitialLaw):
    """N(mean, std^2 I) conditioned on the domain."""
    kind = 'gaussian'

    def __init__(self, mean, std=1.0):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.std = float(std)
        if self.std <= 0:
            raise ConfigError('gaussian std must be positive', field='sim.initial.std')

    def sample(self, n, domain, rng):
        return _rejection(lambda m: self.mean + self.std * rng.standard_normal((m, domain.dim)), n, domain, rng)


class Points(InitialLaw):
    """Explicit atoms; used as is when their number equals n, otherwise resampled with replacement."""
    kind = 'points'

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        self.points = pts[:, None] if pts.ndim == 1 else pts

    def sample(self, n, domain, rng):
        if not np.all(domain.contains(self.points)):
            raise ConfigError('initial points outside the domain', field='sim.initial.points')
        if len(self.points) == n:
            return self.points.copy()
        return self.points[rng.integers(0, len(self.points), size=n)]


class CsvPoints(Points):
    kind = 'csv'

    def __init__(self, path):
        self.path = path
        super().__init__(EmpiricalMeasure.from_csv(path).atoms)


INITIAL_LAWS = {
    Dirac.kind: Dirac,
    Uniform.kind: Uniform,
    Gaussian.kind: Gaussian,
    Points.kind: Points,
    CsvPoints.kind: CsvPoints,
}


def make_initial(kind, **params):
    if kind not in INITIAL_LAWS:
        raise ConfigError('unknown initial law "{}"; available: {}'.format(kind, sorted(INITIAL_LAWS)),
                          field='sim.initial.kind')
    return INITIAL_LAWS[kind](**params)
