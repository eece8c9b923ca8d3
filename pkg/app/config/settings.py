"""
Configuration settings for the resonance finder.
Loads environment variables and provides solver defaults, output paths and logging.
"""
import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Determine base directory - RESONANCE_DATA_DIR overrides the repository root
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DATA_DIR = os.getenv('RESONANCE_DATA_DIR', BASE_DIR)

# Determine log directory
LOG_DIR = os.path.join(DATA_DIR, 'logs')
if not os.path.exists(LOG_DIR):
    os.makedirs(LOG_DIR)

# Default directory for solve/sweep/scan output files
RESULTS_DIR = os.path.join(DATA_DIR, 'results')
if not os.path.exists(RESULTS_DIR):
    os.makedirs(RESULTS_DIR)

# Solver settings
SOLVER_THREADS = int(os.getenv('RESONANCE_SOLVER_THREADS', 0))  # sweep worker processes: 0 = one per CPU, 1 = in-process
TOL = float(os.getenv('RESONANCE_TOL', 1e-12))
MAX_ITER = int(os.getenv('RESONANCE_MAX_ITER', 200))
NEWTON_MAX_ITER = int(os.getenv('RESONANCE_NEWTON_MAX_ITER', 50))
EPS_MAX = float(os.getenv('RESONANCE_EPS_MAX', 0.5))

# Hankel function settings
HANKEL_SPLIT = float(os.getenv('RESONANCE_HANKEL_SPLIT', 6.0))
HANKEL_DPS = int(os.getenv('RESONANCE_HANKEL_DPS', 40))

# Scan defaults
SCAN_MIN = 1e-6
SCAN_MAX = 10.0
GRID_N = 100_000

LOG_LEVEL = os.getenv('RESONANCE_LOG_LEVEL', 'INFO').upper()

# Configure logging
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.path.join(LOG_DIR, 'resonances.log'), encoding='utf-8'),
        logging.StreamHandler()
    ]
)

# Get logger instance
logger = logging.getLogger(__name__)
