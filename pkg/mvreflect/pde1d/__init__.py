from .grid import DensityGrid
from .solver import fp_step, solve, PdeTrajectory, diffusion_coefficient, stable_step, face_velocities
from .weak_form import (NeumannFunction, make_neumann_function, check_neumann, weak_form_residual, WeakFormResidual,
                        PROFILES)
from .compare import compare_particle_pde, ComparisonTable
