
# Coefficient profiles
POSITIVITY_SAMPLES = 1000
QUAD_RTOL = 1e-12
QUAD_LIMIT = 200
LAMBDA_SLACK = 1e-12

# Initial conditions
MASS_TOL = 1e-6
MIN_GRID_POINTS = 16
UNIFORM_RTOL = 1e-9

# Heat kernel quadrature
GH_ORDER = 64
GH_MIN_ORDER = 8
GRID_CHUNK = 2048

# Grid auto-sizing (in standard deviations of ln v)
N_SIGMA = 9.0
BOUNDARY_RATIO = 1e-12
AUTO_GRID_POINTS = 2001
AUTO_GRID_RETRIES = 6
AUTO_GRID_GROWTH = 1.5
LAW_SAMPLES = 17

# PDE residual steps
H_Y = 1e-3
H_LAMBDA = 1e-4

# Crank-Nicolson oracle
FD_MIN_NODES = 64
FD_MIN_STEPS = 64
FD_NEGATIVE_FLOOR = 1e-10  # relative to the peak
FD_MASS_TOL = 1e-4

# Monte-Carlo
KS_ALPHA = 1e-3
MC_BLOCK_SIZE = 8192
EM_MIN_STEPS = 16
N_BINS = 100
SCHEMES = ['exact_gaussian', 'euler_maruyama']

# Moments
MAX_MOMENT = 8

# Threads for joblib (results never depend on it)
ENV_N_JOBS = 'FPCASCADE_N_JOBS'

# Exit codes - stable, asserted by tests
EXIT_OK = 0
EXIT_CODES = {
    'ScenarioError': 3,
    'DomainError': 4,
    'IntegrationRangeError': 5,
    'MassAuditError': 6,
    'NegativeDensityError': 7,
    'DegenerateMeasureError': 8,
    'UnsupportedOperationError': 9,
    'ContractError': 10,
    'KsRejectedError': 11,
}
EXIT_UNEXPECTED = 1
