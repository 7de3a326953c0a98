from reportlab.lib.pagesizes import A4
from reportlab.lib.units import cm

VERSION = "1.0.0"

# Penalty concavity defaults
SCAD_A = 3.7
MCP_A = 3.0

# Solver
CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000
NEWTON_MAX_ITER = 100
LLA_TOL = 1e-6
LLA_MAX_ITER = 20
PATH_LLA_MAX_ITER = 1000
KKT_TOL = 1e-6
LINE_SEARCH_SHRINK = 0.5
LINE_SEARCH_MAX_HALVINGS = 40
SEPARATION_ETA = 25.0
ARMIJO_SIGMA = 1e-4

# Pairwise design
PAIR_BUDGET = 200_000_000
PAIR_BLOCK_SIZE = 65_536
HESSIAN_MAX_DIM = 4_000
POWER_ITERATIONS = 50

# Cross-validation
CV_FOLDS = 5
N_LAMBDA = 100
LAMBDA_RATIO = 0.01

# Oracles
ORACLE_GRAD_TOL = 1e-10
ORACLE_MAX_ITER = 200
SUBSET_MAX_P = 15

# Simulation
SIM_N_LAMBDA = 50
SIM_MAX_EXCLUDED_FRACTION = 0.10

# Input / output
NA_MARKERS = ("", "NA")
FLOAT_FORMAT = "%.17g"
HEADER_SEPARATOR = "---"
REPORT_FORMATS = ("text", "json", "pdf")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

# PDF report geometry
PAGE_SIZE = A4
PAGE_WIDTH, PAGE_HEIGHT = A4

X_START = 2 * cm
Y_START = PAGE_HEIGHT - 2.5 * cm
Y_END = 2 * cm
TABLE_WIDTH = PAGE_WIDTH - 4 * cm

TITLE_FONT = ("Helvetica-Bold", 14)
HEADER_FONT = ("Helvetica-Bold", 9)
BODY_FONT = ("Helvetica", 9)
MONO_FONT = ("Courier", 8)

LINE_HEIGHT = 12
TITLE_GAP = 24
SECTION_GAP = 16
