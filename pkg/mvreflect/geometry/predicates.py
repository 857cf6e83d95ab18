"""
Predicates selecting the boundary subset on which the restricted local time grows.
A predicate maps boundary points of shape (n, d) to a boolean mask.
"""
import numpy as np


class BoundaryPredicate:
    name = None

    def __call__(self, P):
        raise NotImplementedError


class AllBoundary(BoundaryPredicate):
    name = 'all'

    def __call__(self, P):
        return np.ones(len(P), dtype=bool)


class NoBoundary(BoundaryPredicate):
    name = 'none'

    def __call__(self, P):
        return np.zeros(len(P), dtype=bool)


class CoordinateSide(BoundaryPredicate):
    """Boundary points with x[axis] <= value (side 'lower') or >= value (side 'upper')."""
    name = 'coordinate'

    def __init__(self, axis=0, side='lower', value=0.0):
        assert side in ('lower', 'upper'), 'side must be "lower" or "upper"'
        self.axis = int(axis)
        self.side = side
        self.value = float(value)

    def __call__(self, P):
        coord = P[:, self.axis]
        return coord <= self.value if self.side == 'lower' else coord >= self.value


class HalfSpaceSide(BoundaryPredicate):
    name = 'halfspace'

    def __init__(self, normal, offset=0.0):
        self.normal = np.asarray(normal, dtype=float)
        self.offset = float(offset)

    def __call__(self, P):
        return P @ self.normal >= self.offset


class CallablePredicate(BoundaryPredicate):
    name = 'callable'

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, P):
        return np.asarray([bool(self.fn(p)) for p in P], dtype=bool)


PREDICATE_REGISTRY = {
    AllBoundary.name: AllBoundary,
    NoBoundary.name: NoBoundary,
    CoordinateSide.name: CoordinateSide,
    HalfSpaceSide.name: HalfSpaceSide,
}


def build_predicate(spec=None):
    """ Build a boundary predicate.

    Args:
        spec: None (whole boundary), a predicate instance, a plain callable on single points,
            a registered name, or a dict {"name": ..., **params} naming a registered predicate.
    """
    if spec is None:
        return AllBoundary()
    if isinstance(spec, str):
        spec = {'name': spec}
    if isinstance(spec, BoundaryPredicate):
        return spec
    if callable(spec):
        return CallablePredicate(spec)
    params = dict(spec)
    name = params.pop('name', 'all')
    if name not in PREDICATE_REGISTRY:
        raise KeyError('unknown boundary predicate "{}"; available: {}'.format(name, sorted(PREDICATE_REGISTRY)))
    return PREDICATE_REGISTRY[name](**params)
