"""
Cost profiles psi for the transport cost W_psi and the class Psi_kappa:
psi in C^2([0, inf)), psi(0) = 0, psi' > 0, sup psi' < inf and
r psi'(r) + r^2 (psi'')^+(r) <= kappa psi(r).
"""
from dataclasses import dataclass

import numpy as np


class PsiFunction:
    name = None

    def __init__(self, kappa=1.0):
        if kappa <= 0:
            raise ValueError('kappa must be positive')
        self.kappa = float(kappa)

    def value(self, r):
        raise NotImplementedError

    def d1(self, r):
        raise NotImplementedError

    def d2(self, r):
        raise NotImplementedError

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def __repr__(self):
        return '{}(kappa={})'.format(type(self).__name__, self.kappa)


class IdentityPsi(PsiFunction):
    name = 'identity'

    def value(self, r):
        return np.asarray(r, dtype=float)

    def d1(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def d2(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


class BoundedExpPsi(PsiFunction):
    """psi(r) = 1 - exp(-r)."""
    name = 'bounded_exp'

    def value(self, r):
        return -np.expm1(-np.asarray(r, dtype=float))

    def d1(self, r):
        return np.exp(-np.asarray(r, dtype=float))

    def d2(self, r):
        return -np.exp(-np.asarray(r, dtype=float))


class ShiftedPowerPsi(PsiFunction):
    """psi(r) = ((1 + r)^k - 1) / k for 0 < k <= 1; concave, bounded derivative, kappa = 1 works."""
    name = 'shifted_power'

    def __init__(self, k=0.5, kappa=1.0):
        super().__init__(kappa)
        if not 0 < k <= 1:
            raise ValueError('shifted power needs 0 < k <= 1')
        self.k = float(k)

    def value(self, r):
        return np.expm1(self.k * np.log1p(np.asarray(r, dtype=float))) / self.k

    def d1(self, r):
        return (1.0 + np.asarray(r, dtype=float)) ** (self.k - 1.0)

    def d2(self, r):
        return (self.k - 1.0) * (1.0 + np.asarray(r, dtype=float)) ** (self.k - 2.0)


class PowerPsi(PsiFunction):
    """psi(r) = r^k. Outside the class unless k = 1 (unbounded psi' at 0 or at infinity)."""
    name = 'power'

    def __init__(self, k=2.0, kappa=1.0):
        super().__init__(kappa)
        if k <= 0:
            raise ValueError('power must be positive')
        self.k = float(k)

    def value(self, r):
        return np.asarray(r, dtype=float) ** self.k

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide='ignore'):
            return self.k * r ** (self.k - 1.0)

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide='ignore'):
            return self.k * (self.k - 1.0) * r ** (self.k - 2.0)


PSI_REGISTRY = {
    IdentityPsi.name: IdentityPsi,
    BoundedExpPsi.name: BoundedExpPsi,
    ShiftedPowerPsi.name: ShiftedPowerPsi,
    PowerPsi.name: PowerPsi,
}


def get_psi(name, **params):
    if name not in PSI_REGISTRY:
        raise KeyError('unknown psi "{}"; available: {}'.format(name, sorted(PSI_REGISTRY)))
    return PSI_REGISTRY[name](**params)


@dataclass
class PsiClassReport:
    passed: bool
    zero_ok: bool
    positive_ok: bool
    bounded_ok: bool
    inequality_ok: bool
    worst_excess: float
    derivative_sup: float
    concave: bool
    n_grid: int


def psi_class_check(psi, r_max=1e6, n_grid=2000, r_min=1e-8):
    """ Grid check of membership in Psi_kappa.

    psi' counts as bounded when its supremum over the first and last decade of the
    logarithmic grid exceeds the supremum over the interior by at most 1%; a
    derivative that blows up at 0 or at infinity fails this. The defining inequality
    is checked with relative tolerance 1e-12.

    Args:
        psi: a PsiFunction.
        r_max: right end of the grid on (0, r_max].
        n_grid: number of grid points (at least 1000).
        r_min: left end of the logarithmic grid.

    Returns:
        PsiClassReport.
    """
    if n_grid < 1000:
        raise ValueError('the class check needs at least 1000 grid points')
    r = np.logspace(np.log10(r_min), np.log10(r_max), n_grid)
    value = psi.value(r)
    d1 = psi.d1(r)
    d2 = psi.d2(r)

    zero_ok = bool(abs(float(psi.value(np.array([0.0]))[0])) <= 1e-15)
    positive_ok = bool(np.all(np.isfinite(d1)) and np.all(d1 > 0))

    low = r <= r_min * 10.0
    high = r >= r_max / 10.0
    interior = ~(low | high)
    with np.errstate(invalid='ignore'):
        inner_sup = np.max(d1[interior])
        edge_sup = max(np.max(d1[low]), np.max(d1[high]))
    bounded_ok = bool(np.isfinite(edge_sup) and edge_sup <= 1.01 * inner_sup)

    lhs = r * d1 + r ** 2 * np.maximum(d2, 0.0)
    rhs = psi.kappa * value
    excess = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    worst = float(np.max(excess))
    inequality_ok = bool(worst <= 1e-12)

    return PsiClassReport(passed=zero_ok and positive_ok and bounded_ok and inequality_ok,
                          zero_ok=zero_ok, positive_ok=positive_ok, bounded_ok=bounded_ok,
                          inequality_ok=inequality_ok, worst_excess=worst,
                          derivative_sup=float(np.max(d1)), concave=bool(np.all(d2 <= 0)),
                          n_grid=int(n_grid))
