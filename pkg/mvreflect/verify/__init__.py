from .report import PassRule, VerificationReport, bootstrap_ci, bootstrap_ci_mean, run_metadata
from .observables import Observable, OBSERVABLES, get_observable
from .checks import (check_moment_bound, check_psi_moment, check_two_point_moment, check_local_time_moments,
                     check_w2_contraction, check_log_harnack, check_log_harnack_functional, check_gradient_estimate,
                     occupation_integral, levy_local_time_oracle, stability_ratio, CHECKS)
