"""
Configuration settings for the HOM interference simulator
"""

import os
import math

# ----------------------------------------------------------------------
# Units: angular frequency in rad/ps, time in ps, wavelength in nm
# ----------------------------------------------------------------------
SPEED_OF_LIGHT_NM_PER_PS = 299792.458
PM_PER_NM = 1000.0
SECONDS_PER_MINUTE = 60.0
PULSES_PER_MHZ_SECOND = 1.0e6
NS_PER_MICROSECOND = 1000.0

# Transform-limited time-bandwidth product of a Gaussian pulse (FWHM x FWHM)
GAUSSIAN_TBP = 0.441
MIN_TIME_BANDWIDTH_PRODUCT = 0.3

# np.sinc(SINC_FWHM_SCALE * x)**2 == 0.5 at x = 0.5, so a unit argument width is the FWHM.
# SINC_FWHM_SCALE = 2 * 1.3915573782 / pi, the root of sin(y)/y = 1/sqrt(2)
SINC_FWHM_SCALE = 0.8858929413
GAUSSIAN_FWHM_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # 2.3548...

# ----------------------------------------------------------------------
# Frequency grids
# ----------------------------------------------------------------------
MIN_GRID_POINTS = 128
DEFAULT_GRID_POINTS = 512
GRID_SPAN_FACTOR = 8.0  # grid span in units of the widest filter bandwidth
JITTER_QUADRATURE_NODES = 48

# ----------------------------------------------------------------------
# Sources and effective duration
# ----------------------------------------------------------------------
MU_WARN_THRESHOLD = 0.05  # pairs per pulse
DURATION_RULES = ('quadrature', 'linear')
DEFAULT_DURATION_RULE = 'quadrature'
JITTER_CONVENTIONS = ('emission', 'matched', 'fwhm', 'none')
DEFAULT_JITTER_CONVENTION = 'emission'

# ----------------------------------------------------------------------
# Interference scans
# ----------------------------------------------------------------------
DEFAULT_DELAY_SPAN_PS = 40.0
DEFAULT_DELAY_POINTS = 41
FAR_DELAY_FACTOR = 5.0  # baseline samples sit beyond this many coherence times
PROBABILITY_SLACK = 0.05

# ----------------------------------------------------------------------
# Counting statistics
# ----------------------------------------------------------------------
MAX_PAIRS_PER_PULSE = 4
MAX_NOISE_PHOTONS = 3
PHOTON_STATISTICS = ('poisson', 'thermal')
PULSE_CHUNK = 1_000_000  # pulses per vectorised batch
BACKGROUND_STREAM_OFFSET = 10_000
CAR_STREAM_OFFSET = 20_000
GATE_WIDTH_NS = 2.5  # InGaAs gate opened by each herald

# ----------------------------------------------------------------------
# Fitting
# ----------------------------------------------------------------------
DIP_MODELS = ('sinc_squared', 'gaussian')
FIT_MAX_ITERATIONS = 200
FIT_TOLERANCE = 1e-10
FIT_REWEIGHT_ROUNDS = 20  # Poisson weights recomputed from the model between fits
FIT_REWEIGHT_TOLERANCE = 1e-7
MIN_FIT_POINTS = 6

# ----------------------------------------------------------------------
# Reference values used by the reproduction report
# ----------------------------------------------------------------------
REFERENCE_VISIBILITY_PREDICTION = 0.83
REFERENCE_BACKGROUND_RATE_PER_MIN = 0.145
REFERENCE_NARROWBAND_PM = 200.0

# Acceptance bands for `main.py reproduce`
CRITERIA = {
    'coherence_time': (13.3, 13.5),
    'narrowband_visibility': (0.96, 1.0),
    'walkoff_ppln': (6.0, 6.0),
    'dip_width': (15.0, 19.0),  # coherence-time units, see fitting.coherence_width
    'net_visibility': (0.76, 0.84),
    'raw_reduction': (0.60, 0.80),
    'car': (15.0, 25.0),
}
REPRODUCE_SEEDS = 20

# ----------------------------------------------------------------------
# Paths
# ----------------------------------------------------------------------
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG_PATH = os.path.join(PROJECT_ROOT, 'experiment_default.json')
DATABASE_PATH = os.path.join(PROJECT_ROOT, 'hom_runs.db')
