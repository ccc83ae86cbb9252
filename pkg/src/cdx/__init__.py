"""cdx — sequential change-point detection toolkit.

CUSUM charts with constant and observation-adjusted control limits, SLR
stopping rules and min-combinations; a reproducible Monte Carlo run-length
engine with threshold calibration; and closed-form ARL approximations for
the Gaussian equal-variance model.
"""

from .detect import (
    DetectorKind,
    DetectorSpec,
    cusum,
    cusum_oal,
    min_combo,
    run,
    slr,
    stopping_time_bruteforce,
)
from .limits import ControlLimitFn, LimitKind, constant, g_tilde, g_ur
from .model import GaussianChangeSpec, Regime, classify_regime, drift, llr_transform

__version__ = "0.1.0"

__all__ = [
    "GaussianChangeSpec",
    "Regime",
    "classify_regime",
    "drift",
    "llr_transform",
    "ControlLimitFn",
    "LimitKind",
    "constant",
    "g_ur",
    "g_tilde",
    "DetectorKind",
    "DetectorSpec",
    "cusum",
    "cusum_oal",
    "slr",
    "min_combo",
    "run",
    "stopping_time_bruteforce",
    "__version__",
]
