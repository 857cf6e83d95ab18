from .coefficients import (CoefficientSpec, GranularMedia, LinearMeanField, CustomDrift, ConstantDiffusion,
                           ScalarIsotropic, StateDependentDiffusion, get_potential, mean_field_drift,
                           POTENTIAL_REGISTRY, CUSTOM_DRIFTS, STATE_DIFFUSIONS)
from .initial import make_initial, INITIAL_LAWS
from .particles import ParticleEnsemble, step_particles
from .simulator import (SimConfig, MeasureFlow, SimulationResult, PicardResult, simulate_mckean, apply_H,
                        picard_solve, flow_distance)
from .coupling import couple_pair, CouplingRecord, xi, exact_gap
