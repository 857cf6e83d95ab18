# tolerance for every geometric predicate (boundary membership, containment)
EPS_GEO = 1e-12

# damped Newton projection onto SdfDomain
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-10

# optimal transport solver limits
ASSIGNMENT_MAX_N = 2048
LP_MAX_N = 256

# verification harness
BOOTSTRAP_RESAMPLES = 200
CI_LEVEL = 0.95

# explicit finite volume stability factor
CFL_FACTOR = 0.4

# rows per block in direct-sum interaction kernels; fixed so results never depend on threads
CHUNK_SIZE = 1024

# particles per work item in a time step; fixed so results never depend on the thread count
PARTICLE_CHUNK = 8192

# version of the CSV layouts, recorded in every manifest
CSV_SCHEMA_VERSION = 1


class Config:
    def __init__(self):
        self.record_max_snapshots = 1000  # default stride keeps at most this many snapshots
        self.log_name = 'mvreflect.log'

        # verification defaults
        self.n_bootstrap = BOOTSTRAP_RESAMPLES
        self.moment_ratio_tol = 2.0  # fitted constants stable within this factor
        self.refinement_ratio_tol = 1.5  # estimates at h and h/2 within this factor
        self.slope_range = (-1.6, -0.4)  # log-log entropy slope window
        self.gradient_eps_tol = 0.2  # finite differences at eps and eps/2 within 20%
        self.hist_bins = 'fd'

        # coupling
        self.coupling_pairs = 256
        self.coupling_rate = 1.0  # L in xi_t
