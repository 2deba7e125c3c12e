import numpy as np

# Logging
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Variables de entorno
OUTPUT_DIR_ENV = "BISTABLE_FRONTS_OUTPUT_DIR"
JOBS_ENV = "BISTABLE_FRONTS_JOBS"
DEFAULT_OUTPUT_SUBDIR = ("data", "output")

#######################################################################################
# Cuasi-polinomios característicos
#######################################################################################

ROOT_RESIDUAL_TOL = 1e-11
NEWTON_MAX_ITER = 50
DOUBLE_ROOT_CHI_TOL = 1e-9
DOUBLE_ROOT_DCHI_TOL = 1e-7
BRACKET_MAX_DOUBLINGS = 200

# Conteo por principio del argumento
BOUNDARY_CLEARANCE = 1e-8
BOUNDARY_RETRIES = 5
WINDOW_INFLATION = 1.01
EDGE_INITIAL_POINTS = 256
EDGE_MAX_POINTS = 2**22
PHASE_STEP_LIMIT = 0.45 * np.pi

# Ventana compleja por defecto: re en [-30, max(5, 2*lambda1)], |im| <= 60/max(h, 0.1)
WINDOW_RE_MIN = -30.0
WINDOW_RE_MAX_FLOOR = 5.0
WINDOW_IM_SCALE = 60.0
WINDOW_H_FLOOR = 0.1

#######################################################################################
# Dominio de monotonía
#######################################################################################

TAU_SHARP_TOL = 1e-12
OMEGA_BRACKET = (-50.0, -2.0)
CLIN_C_MIN = 1e-8
CLIN_MAX_ITER = 200
CLIN_RESIDUAL_TOL = 1e-10
DOMAIN_BOUNDARY_RTOL = 1e-6
BOUNDARY_GRID_OFFSET = 1e-4
# Fracción de puntos dedicada al tramo [0, tau#] donde clin = inf
BOUNDARY_INF_FRACTION = 0.1

#######################################################################################
# Modelo de juguete
#######################################################################################

TOY_C_LO = 1e-6
TOY_SPEED_MAX_ITER = 120
TOY_SPEED_TOL = 1e-9
TOY_MIN_STEPS_PER_DELAY = 16
TOY_MAX_STEP = 0.01
TOY_T_MAX_MIN = 40.0
TOY_T_MAX_CAP = 400.0
TOY_ESCAPE_BOUND = 10.0
DEGENERATE_K_STAR_TOL = 1e-9

#######################################################################################
# Modelos y chequeo de hipótesis
#######################################################################################

STEADY_STATE_SCAN_POINTS = 2048
STEADY_STATE_XTOL = 1e-14
STEADY_STATE_RESIDUAL_TOL = 1e-10
HYPOTHESIS_GRID_POINTS = 400
PARTIALS_GRID_POINTS = 20
PARTIALS_FD_STEP = 1e-6
PARTIALS_RTOL = 1e-4
KAPPA_SPREAD_RTOL = 1e-6
QUADRATURE_EPSABS = 1e-10
SIGN_TOL = 1e-12

#######################################################################################
# Solver de perfiles y continuación
#######################################################################################

DEFAULT_L = 40.0
DEFAULT_N = 2000
MIN_N = 200
SOLVER_TOL = 1e-8
BOUNDARY_TOL_REL = 1e-6
PHASE_TOL = 1e-10
NEWTON_STEP_FLOOR = 1e-14
NEWTON_MAX_STEPS = 50
ARMIJO_FACTOR = 0.5
ARMIJO_MAX_BACKTRACKS = 30
ARMIJO_SLOPE = 1e-4
RHO_MAX_PASSES = 5
INITIAL_SPEED = 0.1

CONT_INITIAL_STEP = 0.05
CONT_MIN_STEP = 1e-5
CONT_MAX_STEP = 0.1
CONT_SUCCESSES_TO_GROW = 3
CONT_DOMAIN_OVERSHOOT = 0.5
CONT_SPEED_CEILING = 50.0
CONT_SPEED_FLOOR = 1e-3

#######################################################################################
# Verificación a posteriori
#######################################################################################

MONO_TOL_REL = 1e-9
TAIL_WINDOW_FRACTION = 0.25
FIT_NOISE_FLOOR = 1e-11
FIT_MIN_DECADES = 1.0
SIGN_CHANGE_FLOOR = 1e-10

#######################################################################################
# Simulación PDE
#######################################################################################

SIM_X_MAX = 400.0
SIM_NX = 4001
SIM_T_FINAL = 100.0
SIM_OUTPUT_INTERVAL = 0.5
SIM_DT_SAFETY = 0.4
SIM_FIT_FRACTION = 0.4
SIM_MARGIN_CELLS = 10
SIM_OSCILLATION_TOL = 1e-4
SIM_KAPPA_BAND_CELLS = 2

# Serialización
CSV_FLOAT_FORMAT = "%.17g"
