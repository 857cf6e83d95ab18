__version__ = "0.1.0"

from .pipeline import Pipeline, RunManifest, COMMANDS
from .sde import SimConfig, simulate_mckean, apply_H, picard_solve, couple_pair
from .geometry import make_domain
