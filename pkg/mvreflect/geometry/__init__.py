from .domains import Domain, HalfSpace, Interval, Box, Ball, Annulus, SdfDomain, make_domain, DOMAIN_KINDS
from .predicates import build_predicate, PREDICATE_REGISTRY
from .reflection import (ReflectionOutcome, ReflectionBatch, CertificationReport, reflect_step, reflect_batch,
                         certify_interior_cone)
from .sdf_registry import SDF_REGISTRY, get_sdf


def contains(domain, x):
    return domain.contains(x)


def signed_distance(domain, x):
    return domain.signed_distance(x)


def inward_normal(domain, x):
    return domain.inward_normal(x)
