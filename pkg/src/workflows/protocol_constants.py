# src/workflows/protocol_constants.py
# Constants for the task-transfer protocol

from src.analytics.experiment_metrics import ORACLE_LABEL

# --------------------------------------------
# PHASE SIZES (samples)
# --------------------------------------------
INIT_COUNT = 1000       # hyperparameters + theta_0
TRAIN_A_COUNT = 9000    # streamed on regime A
SUBSET_COUNT = 5        # independent adaptation runs on regime B
SUBSET_LEN = 2000

# Validation-set split of the initialization window (train / validation)
VS_TRAIN_COUNT = 700

# --------------------------------------------
# METRIC
# --------------------------------------------
HORIZON = 25            # samples, 1.25 s at 20 Hz
RATE = 20.0             # Hz
TRANSIENT_CUTOFF = 30.0 # seconds; steady state after 600 samples
STRIDE = 1              # record the error at every step

# --------------------------------------------
# FEATURES
# --------------------------------------------
FEATURE_COUNT = 100
FEATURE_SEED = 1
SIM_SEED = 0

# --------------------------------------------
# RUNS
# --------------------------------------------
DEFAULT_RUNS = [
    "P-ML",
    "NP-ML",
    "SP-ML",
    "SP2-ML",
    "SPK-ML",
    "NP-VS",
    "SP2-VS",
    ORACLE_LABEL,
]

# Phase names used in notes and timings
PHASES = ["init", "train", "adapt"]
