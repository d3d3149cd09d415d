"""
Constants and default values for dackrr
"""

import math

# Kernel defaults
DEFAULT_LENGTHSCALE = 0.3  # Input-space units; data assumed on [0, 1]^d
DEFAULT_MATERN_ALPHA = 2.5
CLOSED_FORM_MATERN_ALPHAS = (0.5, 1.5, 2.5)  # Evaluated without Bessel functions

# Spectral diagnostics
EIGEN_CLAMP_TOL = 1e-10  # Negative eigenvalue estimates above -tol become 0
MIN_NYSTROM_SAMPLE = 32
EFFECTIVE_DIM_TAIL_TOL = 1e-6  # Tail bound relative to the partial sum
EFFECTIVE_DIM_MAX_TERMS = 2**24  # Hard cap on explicit summation
EFFECTIVE_DIM_CHUNK = 2**20

# Cholesky jitter ladder, in units of trace(K) / S
JITTER_START = 1e-12
JITTER_MAX = 1e-6
JITTER_FACTOR = 10.0

# Bootstrap and quadrature
DEFAULT_GRID_SIZE = 1024
DEFAULT_BOOTSTRAP_ITERATIONS = 1000
DEFAULT_BETA = 0.95
BOOTSTRAP_BATCH = 256  # Iterations evaluated per weight-matrix product
WEIGHT_SUM_TOL = 1e-12  # |sum(w) - 1|, independent of the grid size

# Simulation
TAU = 2.0 * math.pi  # Radians in a turn
DEFAULT_TRIALS = 200
WILSON_LEVEL = 0.95
UNDERSMOOTHING_RATIO = 2.0 / 3.0  # s = (2/3) s0
UNDERSMOOTHING_REL_TOL = 0.05

# Persistence
MODEL_FORMAT_VERSION = 1
SIDECAR_DTYPE = "<f8"  # Little-endian IEEE-754 doubles

# Output column order for coverage reports
COVERAGE_COLUMNS = (
    "P",
    "hits",
    "trials",
    "coverage",
    "wilson_lo",
    "wilson_hi",
    "mean_radius",
    "mean_rmse",
)
