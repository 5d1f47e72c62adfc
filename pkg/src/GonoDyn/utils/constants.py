import configparser

CONFIG_FILE = "config_dev.ini"
cfg_parser = configparser.ConfigParser()
cfg_parser.read(CONFIG_FILE)

# Iteration
TOL_FP = cfg_parser.getfloat("numerics", "tol_fp", fallback=1e-12)
DIV_THRESHOLD = cfg_parser.getfloat("numerics", "div_threshold", fallback=1e12)
BUDGET = cfg_parser.getint("numerics", "budget", fallback=10_000)
KEEP_ALL_ITERATES = cfg_parser.getint("numerics", "keep_all_iterates", fallback=1_000)
THIN_EVERY = cfg_parser.getint("numerics", "thin_every", fallback=10)

# Tensors
ROW_SUM_TOL = 1e-12
FILE_ROW_SUM_TOL = cfg_parser.getfloat("numerics", "file_row_sum_tol", fallback=1e-9)

# Spectral / Newton
HYPERBOLICITY_TOL = cfg_parser.getfloat("numerics", "hyperbolicity_tol", fallback=1e-8)
NEWTON_TOL = cfg_parser.getfloat("numerics", "newton_tol", fallback=1e-10)
NEWTON_MAX_STEPS = cfg_parser.getint("numerics", "newton_max_steps", fallback=200)
NEWTON_MAX_HALVINGS = cfg_parser.getint("numerics", "newton_max_halvings", fallback=40)
NEWTON_SINGULAR_RATIO = 1e-14
NEWTON_JITTER = 1e-8
DEDUP_RADIUS = cfg_parser.getfloat("numerics", "dedup_radius", fallback=1e-6)
NEWTON_SEEDS = cfg_parser.getint("sampling", "newton_seeds", fallback=1_000)
SEED_BOX = (
    cfg_parser.getfloat("sampling", "seed_box_low", fallback=-5.0),
    cfg_parser.getfloat("sampling", "seed_box_high", fallback=5.0),
)
MAX_EIGEN_SIZE = 32

# Invariant sets
SET_TOL = 1e-12
PROBE_BUDGET = cfg_parser.getint("numerics", "probe_budget", fallback=100)

# Normalized operator
ANNIHILATION_GUARD = 1e-300
SIMPLEX_TOL = 1e-12
BOUNDARY_REJECT = 1e-9
ESTIMATE_SLACK = 1e-12
FIXED_POINT_TOL = 1e-12
ESTIMATE_PROBE_STEPS = range(2, 21)
STATED_CONTRACTION = 13 / 24
CONTRACTION_BOUND = 7 / 10
LOAD_SLACK = 1e-12
SCAN_TOL = cfg_parser.getfloat("scan", "tol", fallback=1e-8)
SCAN_BUDGET = cfg_parser.getint("scan", "budget", fallback=500)

# Sampling
RNG_SEED = cfg_parser.getint("sampling", "rng_seed", fallback=42)
SAMPLES = cfg_parser.getint("sampling", "samples", fallback=10_000)
VERIFY_SAMPLES = cfg_parser.getint("sampling", "verify_samples", fallback=10_000)
FD_STEP = 1e-6
