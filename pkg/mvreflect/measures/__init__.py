from .empirical import EmpiricalMeasure, merged_support, moment_norm, psi_moment
from .transport import (wasserstein_k, wasserstein_psi, weighted_var_norm, total_variation, transport_cost,
                        quantile_cost_1d, assignment_cost, lp_cost)
from .psi import (PsiFunction, IdentityPsi, BoundedExpPsi, ShiftedPowerPsi, PowerPsi, PSI_REGISTRY, get_psi,
                  psi_class_check, PsiClassReport)
from .entropy import (Histogram, common_edges, histogram, measure_histogram, relative_entropy, hist_total_variation,
                      pinsker_holds)
