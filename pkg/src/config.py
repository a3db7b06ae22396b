DEBUG = False
VERSION = '0.3.0'
LOG_FILE = 'jnb.log'
OUTPUT_DIR_PATH = None

# simulation
DEFAULT_BURN_IN = 100
SIMPLEX_TOLERANCE = 1e-12
FLOAT_FORMAT = "%.17g"

# default sweep grid
DEFAULT_ALPHAS = [round(0.25 * k, 2) for k in range(13)]
DEFAULT_NS = [10, 20, 50]
DEFAULT_CS = [12.0]
DEFAULT_ITERATIONS = 10000
DEFAULT_SEED_COUNT = 20
DEFAULT_BASE_SEED = 0

# empirical analysis
FIRST_WEEK_HOURS = 168
PROFILE_HOURS = 48
LIFECYCLE_PERCENT = 95
