"""
Pydantic models for the JSON run configuration and builders turning them into runtime objects.
"""
import json
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from mvreflect.geometry.domains import DOMAIN_KINDS, SCHEMES, make_domain
from mvreflect.sde.coefficients import (CUSTOM_DRIFTS, MEASURE_MODES, POTENTIAL_REGISTRY, STATE_DIFFUSIONS,
                                        CoefficientSpec, ConstantDiffusion, CustomDrift, GranularMedia,
                                        LinearMeanField, ScalarIsotropic, StateDependentDiffusion, get_potential)
from mvreflect.sde.initial import INITIAL_LAWS, make_initial
from mvreflect.sde.simulator import SimConfig
from .errors import ConfigError, GeometryError

DRIFT_KINDS = ('granular_media', 'linear_mean_field', 'custom')
DIFFUSION_KINDS = ('constant', 'isotropic', 'state_dependent')
PDE_INITIAL_KINDS = ('uniform', 'bump', 'particles')


class _Model(BaseModel):
    model_config = ConfigDict(extra='forbid')


class DomainModel(_Model):
    """Closed domain of the reflected dynamics"""
    kind: str = Field(..., description="One of halfspace, interval, box, ball, annulus, sdf")
    params: Dict[str, Any] = Field(default_factory=dict, description="Constructor arguments of the domain kind")
    r0: Optional[float] = Field(None, description="Interior-cone constant, when known", gt=0)
    tilde: Optional[Union[str, Dict[str, Any]]] = Field(
        None, description="Boundary subset carrying the restricted local time: a predicate name or {name, ...}")
    scheme: Optional[str] = Field(
        None, description="Reflection scheme: fold (default for halfspace and interval) or project (default otherwise)")

    @field_validator('kind')
    @classmethod
    def known_kind(cls, v):
        if v not in DOMAIN_KINDS:
            raise ValueError('unknown domain kind "{}"; available: {}'.format(v, sorted(DOMAIN_KINDS)))
        return v

    @field_validator('scheme')
    @classmethod
    def known_scheme(cls, v):
        if v is not None and v not in SCHEMES:
            raise ValueError('scheme must be one of {}'.format(SCHEMES))
        return v


class PotentialModel(_Model):
    name: str = Field('zero', description="Registered potential: zero, quadratic, cubic, double_well")
    scale: float = Field(1.0, description="Multiplicative scale of the potential")

    @field_validator('name')
    @classmethod
    def known_potential(cls, v):
        if v not in POTENTIAL_REGISTRY:
            raise ValueError('unknown potential "{}"; available: {}'.format(v, sorted(POTENTIAL_REGISTRY)))
        return v


class DriftModel(_Model):
    """Drift b_t(x, mu)"""
    kind: str = Field(..., description="granular_media, linear_mean_field or custom")
    V: Optional[PotentialModel] = Field(None, description="Confinement potential (granular_media)")
    W: Optional[PotentialModel] = Field(None, description="Interaction kernel (granular_media)")
    A: Optional[List[List[float]]] = Field(None, description="State matrix (linear_mean_field)")
    B: Optional[List[List[float]]] = Field(None, description="Mean-field matrix (linear_mean_field)")
    name: Optional[str] = Field(None, description="Registered custom drift")
    params: Dict[str, Any] = Field(default_factory=dict, description="Parameters of the custom drift")

    @model_validator(mode='after')
    def check_kind(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError('drift kind must be one of {}'.format(DRIFT_KINDS))
        if self.kind == 'linear_mean_field' and (self.A is None or self.B is None):
            raise ValueError('linear_mean_field needs A and B')
        if self.kind == 'custom':
            if self.name not in CUSTOM_DRIFTS:
                raise ValueError('unknown custom drift "{}"; available: {}'.format(self.name, sorted(CUSTOM_DRIFTS)))
            if not CUSTOM_DRIFTS[self.name][2]:
                raise ValueError('custom drift "{}" is not locally bounded'.format(self.name))
        return self


class DiffusionModel(_Model):
    """Diffusion sigma_t(x)"""
    kind: str = Field('isotropic', description="constant, isotropic or state_dependent")
    sigma: Optional[List[List[float]]] = Field(None, description="Constant square matrix (constant)")
    scale: float = Field(1.0, description="s in sigma = s I (isotropic)")
    name: Optional[str] = Field(None, description="Registered state-dependent diffusion")
    params: Dict[str, Any] = Field(default_factory=dict, description="Parameters of the state-dependent diffusion")

    @model_validator(mode='after')
    def check_kind(self):
        if self.kind not in DIFFUSION_KINDS:
            raise ValueError('diffusion kind must be one of {}'.format(DIFFUSION_KINDS))
        if self.kind == 'constant' and self.sigma is None:
            raise ValueError('constant diffusion needs sigma')
        if self.kind == 'state_dependent' and self.name not in STATE_DIFFUSIONS:
            raise ValueError('unknown state-dependent diffusion "{}"; available: {}'.format(
                self.name, sorted(STATE_DIFFUSIONS)))
        return self


class CoefficientsModel(_Model):
    drift: DriftModel = Field(..., description="Drift coefficient")
    diffusion: DiffusionModel = Field(default_factory=DiffusionModel, description="Diffusion coefficient")
    measure_mode: str = Field('empirical', description="empirical or frozen_flow")

    @field_validator('measure_mode')
    @classmethod
    def known_mode(cls, v):
        if v not in MEASURE_MODES:
            raise ValueError('measure_mode must be one of {}'.format(MEASURE_MODES))
        return v


class InitialModel(_Model):
    kind: str = Field('dirac', description="Initial law: dirac, uniform, gaussian, points or csv")
    params: Dict[str, Any] = Field(default_factory=dict, description="Parameters of the initial law")

    @field_validator('kind')
    @classmethod
    def known_law(cls, v):
        if v not in INITIAL_LAWS:
            raise ValueError('unknown initial law "{}"; available: {}'.format(v, sorted(INITIAL_LAWS)))
        return v


class SimModel(_Model):
    T: float = Field(..., description="Time horizon", gt=0)
    h: float = Field(..., description="Step size", gt=0)
    N: int = Field(..., description="Number of particles", ge=1)
    seed: int = Field(1234, description="Unsigned 64-bit seed", ge=0, lt=2 ** 64)
    k: float = Field(2.0, description="Moment index of the Wasserstein distances", ge=0)
    record_stride: Optional[int] = Field(None, description="Record every n-th step", ge=1)
    threads: int = Field(1, description="Worker threads for particle chunks", ge=1)
    progress: bool = Field(False, description="Show a progress bar")
    initial: InitialModel = Field(default_factory=InitialModel, description="Initial law gamma")
    frozen_flow: Optional[str] = Field(None, description="Flow CSV the drift is frozen to (frozen_flow mode)")

    @model_validator(mode='after')
    def step_within_horizon(self):
        if self.h > self.T:
            raise ValueError('h = {} exceeds T = {}'.format(self.h, self.T))
        return self


class CheckModel(_Model):
    name: str = Field(..., description="Registered verification check")
    params: Dict[str, Any] = Field(default_factory=dict, description="Keyword arguments of the check")


class VerifyModel(_Model):
    checks: List[CheckModel] = Field(default_factory=list, description="Checks run by the verify command")


class PicardModel(_Model):
    max_iter: int = Field(10, description="Maximal number of Picard iterations", ge=1)
    tol: float = Field(1e-2, description="Stop when sup_t W_k between iterates is below tol", gt=0)
    lam: float = Field(0.0, description="Weight e^{-lam t} of the reported distance", ge=0)


class CoupleModel(_Model):
    x0: List[float] = Field(..., description="Start of X")
    y0: List[float] = Field(..., description="Start of Y")
    t0: float = Field(..., description="Coupling time", gt=0)
    L: float = Field(1.0, description="Rate in xi_t", gt=0)
    n_pairs: int = Field(256, description="Replicate pairs", ge=1)


class PdeModel(_Model):
    cells: Union[int, List[int]] = Field(200, description="Cells per axis")
    lo: Optional[List[float]] = Field(None, description="Lower corner; defaults to the domain box")
    hi: Optional[List[float]] = Field(None, description="Upper corner; defaults to the domain box")
    h: Optional[float] = Field(None, description="Time step; defaults to 0.9 times the stability limit", gt=0)
    initial: str = Field('particles', description="uniform, bump or particles (histogram of the initial particles)")
    bump_center: Optional[List[float]] = Field(None, description="Center of the bump initial density")
    bump_width: float = Field(0.05, description="Width of the bump initial density", gt=0)
    test_functions: List[str] = Field(default_factory=lambda: ['one', 'cos'], description="Weak-form test functions")

    @field_validator('initial')
    @classmethod
    def known_initial(cls, v):
        if v not in PDE_INITIAL_KINDS:
            raise ValueError('pde initial must be one of {}'.format(PDE_INITIAL_KINDS))
        return v


class RunConfigModel(_Model):
    domain: DomainModel
    coefficients: CoefficientsModel
    sim: SimModel
    verify: VerifyModel = Field(default_factory=VerifyModel)
    picard: PicardModel = Field(default_factory=PicardModel)
    couple: Optional[CoupleModel] = None
    pde: PdeModel = Field(default_factory=PdeModel)


def load_config(path):
    with open(path) as f:
        return RunConfigModel.model_validate(json.load(f))


# ---------------------------------------------------------------------------- builders

def build_domain(model):
    params = dict(model.params)
    tilde = {'name': model.tilde} if isinstance(model.tilde, str) else model.tilde
    try:
        return make_domain(model.kind, r0=model.r0, tilde=tilde, scheme=model.scheme, **params)
    except GeometryError as e:
        raise ConfigError(str(e), field='domain')


def build_drift(model):
    if model.kind == 'granular_media':
        V = model.V or PotentialModel()
        W = model.W or PotentialModel()
        return GranularMedia(get_potential(V.name, scale=V.scale), get_potential(W.name, scale=W.scale))
    if model.kind == 'linear_mean_field':
        return LinearMeanField(model.A, model.B)
    return CustomDrift(model.name, **model.params)


def build_diffusion(model, dim):
    if model.kind == 'constant':
        diffusion = ConstantDiffusion(model.sigma)
        if diffusion.dim != dim:
            raise ConfigError('sigma is {0}x{0} for a {1}-dimensional domain'.format(diffusion.dim, dim),
                              field='coefficients.diffusion.sigma')
        return diffusion
    if model.kind == 'isotropic':
        return ScalarIsotropic(model.scale, dim)
    return StateDependentDiffusion(model.name, dim, **model.params)


def build_coefficients(model, dim):
    return CoefficientSpec(build_drift(model.drift), build_diffusion(model.diffusion, dim), model.measure_mode)


def build_initial_law(model):
    return make_initial(model.kind, **model.params)


def build_sim_config(run, domain=None, coefficients=None, seed=None, threads=None):
    """ SimConfig from a validated RunConfigModel; `seed` and `threads` override the document. """
    domain = build_domain(run.domain) if domain is None else domain
    coefficients = build_coefficients(run.coefficients, domain.dim) if coefficients is None else coefficients
    sim = run.sim
    return SimConfig(T=sim.T, h=sim.h, N=sim.N, domain=domain, coefficients=coefficients,
                     seed=sim.seed if seed is None else seed, k=sim.k, initial=build_initial_law(sim.initial),
                     record_stride=sim.record_stride, threads=sim.threads if threads is None else threads,
                     progress=sim.progress)
