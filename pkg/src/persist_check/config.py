"""
Central configuration for persist-check.

All tunable defaults live here so the engines, the CLI and the test-suite
agree on labels, bounds and report formatting.
"""

from pathlib import Path
from typing import Optional, Tuple

# =============================================================================
# PROGRAM LABELS
# =============================================================================

# Every thread starts at INIT_LABEL and terminates at FIN_LABEL
INIT_LABEL = "init"
FIN_LABEL = "fin"

# Accepted spellings of the initial label in litmus files
INIT_LABEL_ALIASES: Tuple[str, ...] = ("init", "ι")

# =============================================================================
# EXPLORATION
# =============================================================================

# Bound on transitions per path, applied to cyclic programs when none is given
DEFAULT_MAX_STEPS = 10_000

# =============================================================================
# RANDOM STATE GENERATION
# =============================================================================

DEFAULT_TRIALS = 1000
DEFAULT_SEED = 0

GEN_MAX_EXTRA_WRITES = 4
GEN_MAX_VALUE = 2
GEN_MAX_ADVANCES_PER_WRITE = 2

# =============================================================================
# RULE TESTING GRID
# =============================================================================

RULE_THREADS: Tuple[int, ...] = (1, 2, 3)
RULE_LOCATIONS: Tuple[str, ...] = ("x", "y", "z")
RULE_VALUES: Tuple[int, ...] = (0, 1, 2)
RULE_REGISTERS_PER_THREAD = 2

# =============================================================================
# CORPUS AND FILES
# =============================================================================

PACKAGE_DIR = Path(__file__).resolve().parent
CORPUS_DIR = PACKAGE_DIR / "corpus"
LITMUS_EXTENSION = ".lit"

# File logging is opt-in (--log-file)
LOG_FILE: Optional[Path] = None

# =============================================================================
# WATCH MODE
# =============================================================================

# Seconds to wait after the last change before re-checking a file
DEBOUNCE_SECONDS = 1.0

# Minimum seconds between two checks of the same file
MIN_RUN_INTERVAL = 2.0

# =============================================================================
# REPORTING
# =============================================================================

SUMMARY_WIDTH = 60
MAX_LISTED_ITEMS = 10
