"""Cell-free massive MIMO uplink with local partial-marginalization detection.

Each access point detects the users it serves from its own channel
estimates and sends per-bit LLRs to a central unit, which adds them and
decodes the outer convolutional code.
"""

from .config import SimConfig, dump_config, load_config
from .detectors import (
    centralized_pm_llrs,
    exact_ml_llrs,
    mmse_sic_llrs,
    mrc_llrs,
    parse_detector,
    pm_llrs,
    zf_df_llrs,
)
from .sim import build_drop, records_to_csv, run_sweep, simulate_point

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "load_config",
    "dump_config",
    "pm_llrs",
    "exact_ml_llrs",
    "zf_df_llrs",
    "mmse_sic_llrs",
    "mrc_llrs",
    "centralized_pm_llrs",
    "parse_detector",
    "build_drop",
    "simulate_point",
    "run_sweep",
    "records_to_csv",
]
