import os
from dotenv import load_dotenv

load_dotenv()

THREADS = max(1, int(os.getenv('KGM_THREADS', '1')))
LOG_LEVEL = os.getenv('KGM_LOG_LEVEL', 'INFO')

# electrostatic constraint
PHI_SOLVER = os.getenv('KGM_PHI_SOLVER', 'cg')
SOLVER_PHI_METHOD = os.getenv('KGM_SOLVER_PHI_METHOD', 'direct')
PHI_TOL = float(os.getenv('KGM_PHI_TOL', '1e-10'))
CG_ITER_FACTOR = int(os.getenv('KGM_CG_ITER_FACTOR', '10'))
PHI_REFINE_STEPS = int(os.getenv('KGM_PHI_REFINE_STEPS', '4'))

# critical point search
STOP_TOL = float(os.getenv('KGM_STOP_TOL', '1e-6'))
MAX_ITER = int(os.getenv('KGM_MAX_ITER', '500'))
ARMIJO_C = 1e-4
ARMIJO_BACKTRACK = 0.5
ARMIJO_INITIAL_STEP = 1.0
# round-off allowance in the sufficient-decrease test, relative to 1 + |I|
ARMIJO_SLACK = 1e-12
N_PATH = 64
SPHERE_DIRECTIONS = 32
GEOMETRY_BUMP_WIDTHS = 10

# bound certificates
PHI_BOUND_EPS = 1e-10
IDENTITY_RTOL = 1e-8
LEVEL_RTOL = 1e-6
# level chain c_{λ,n} ≤ c0, checked to within 1%
LEVEL_CHAIN_RTOL = 1e-2
H_FLOOR = -1e-10
RESIDUAL_RTOL = 1e-6
