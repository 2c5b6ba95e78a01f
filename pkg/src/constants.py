# constants.py
"""
Constants and default settings for the spacing toolkit
"""

TOOLKIT_NAME = "spacing-toolkit"
TOOLKIT_VERSION = "1.0.0"

# Process exit codes
EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

# Series and quadrature
GAUSS_PANEL_NODES = 32
GAUSS_PANEL_WIDTH = 1.0
JUNCTION_TOL = 1e-9
ORIGIN_VALUE_TOL = 1e-12
MIN_RADIUS_DEGREE = 8
MAX_BOUNDARY_DEGREE = 40

# Taylor continuation
DEFAULT_DEGREE = 35
DEFAULT_ORIGIN_DEGREE = 20
DEFAULT_STEP_FACTOR = 0.25
DEFAULT_MIN_SECOND_DERIV = 1e-10
DEFAULT_S_MAX = 20.0
MIN_STEP = 0.05
MAX_STEP = 1.0
STEP_UNDERFLOW = 1e-6
MAX_HALVINGS = 6
ORIGIN_RADIUS_FRACTION = 0.5
TRUNCATION_TOL = 1e-19
FIRST_INTEGRAL_TOL = 1e-10
RESIDUAL_TOL = 1e-8
RESIDUAL_GRID_POINTS = 512

# Fredholm determinants
DEFAULT_NYSTROM_ORDER = 64
MIN_NYSTROM_ORDER = 8
MAX_CONDITION = 1e12
DEFAULT_H_XI = 1e-3
MAX_CONDITIONED_COUNT = 3
FD_STEP_MIN = 1e-3
FD_STEP_SCALE = 1e-4
DEFAULT_N_FROM = 100
DEFAULT_N_TO = 138
DEFAULT_N_COUNT = 20

# Spacing curves
SMALL_S_SWITCH = 1e-2
REFERENCE_SMALL_S_LIMIT = 0.5
REFERENCE_LARGE_S_LIMIT = 5.0
DEFAULT_CURVE_S_MAX = 6.0
DEFAULT_CURVE_STEP = 0.02
DEFAULT_PLOT_STEP = 0.1
DENSITY_SLACK = 1e-3

# Zeros statistics, values for the height ~1.3e22 data set
LAMBDA = 1.57314
Q_OVER_LAMBDA = 1.4720
DEFAULT_WINDOW = 50
DEFAULT_TWO_POINT_BIN = 0.05
DEFAULT_TWO_POINT_S_MAX = 10.0
DEFAULT_SPACING_BIN = 0.02
DEFAULT_SPACING_S_MAX = 6.0
DEFAULT_LOCAL_BLOCK = 1_000_000
DEFAULT_CHUNK_SIZE = 1_000_000
THINNING_BLOCK = 65_536

# File formats
FORMAT_PLAIN = "plain"
FORMAT_BASE_OFFSET = "base-offset"
BASE_OFFSET_MARKER = "base"
METADATA_PREFIX = "#"
