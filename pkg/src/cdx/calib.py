"""Threshold calibration: find c (or slack r) hitting a target ARL0.

The objective is the Monte Carlo in-control ARL evaluated with a fixed
seed (common random numbers), which makes it a deterministic monotone
step function of the parameter — bisection then behaves exactly as it
would on a noiseless function, and repeated calibrations are identical.

The parameter bracket is auto-expanded by doubling/halving until the
target is straddled; the slack search probes the monotone orientation
instead of assuming it (ARL0 of the SLR rule falls as r grows, while the
CUSUM families rise with c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .detect import DetectorSpec
from .mc import DEFAULT_MAX_STEPS, Scenario, estimate_arl
from .model import GaussianChangeSpec

__all__ = ["CalibrationResult", "calibrate_threshold", "calibrate_slack"]

# Bisection stops when the bracket is this narrow even if the relative
# error target was not met (the objective is a step function, so exact
# attainment is not always possible).
_MIN_BRACKET = 1e-4
_MAX_EXPANSIONS = 60


@dataclass(frozen=True)
class CalibrationResult:
    parameter: float
    achieved_arl0: float
    achieved_stderr: float
    iterations: int
    bracket: tuple[float, float]


def calibrate_threshold(
    family: Callable[[float], DetectorSpec],
    target_arl0: float,
    rel_tol: float = 0.02,
    reps: int = 200_000,
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    base: GaussianChangeSpec | None = None,
    workers: int = 1,
) -> CalibrationResult:
    """Calibrate a threshold-parameterized family (ARL0 nondecreasing in c).

    `family` maps a candidate c > 0 to a DetectorSpec; the initial probe
    sits at c=1 and expands by doubling (or halving) until straddled.
    """
    return _calibrate(family, target_arl0, rel_tol, reps, seed, max_steps, base,
                      workers, x_init=1.0)


def calibrate_slack(
    family: Callable[[float], DetectorSpec],
    target_arl0: float,
    rel_tol: float = 0.02,
    reps: int = 200_000,
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    base: GaussianChangeSpec | None = None,
    workers: int = 1,
) -> CalibrationResult:
    """Calibrate an SLR slack r (ARL0 falls as r grows; orientation probed)."""
    return _calibrate(family, target_arl0, rel_tol, reps, seed, max_steps, base,
                      workers, x_init=1e-3)


def _calibrate(family, target, rel_tol, reps, seed, max_steps, base, workers, x_init):
    if not math.isfinite(target):
        raise ValueError("target must be finite (the r=0 boundary has infinite ARL0)")
    if target <= 1:
        raise ValueError(
            "target_arl0 must exceed 1: ARL0=1 sits at the c<=0 boundary, "
            "where the k=0 empty-sum term alarms at n=1"
        )
    if not 0 < rel_tol < 0.5:
        raise ValueError(f"rel_tol must be in (0, 0.5), got {rel_tol}")

    kwargs = {} if base is None else {"base": base}
    scenario = Scenario(tau=0, v=0.0, reps=reps, seed=seed, max_steps=max_steps, **kwargs)

    def objective(x: float) -> float:
        return estimate_arl(family(x), scenario, workers).mean

    # Orientation: does the ARL rise or fall with the parameter?  Probe a
    # doubled point; ties (flat step) default to rising, matching c-like
    # parameters.
    f_init = objective(x_init)
    f_probe = objective(2.0 * x_init)
    rising = f_probe >= f_init

    # Expand until f(below) < target <= f(above).  `below`/`above` refer to
    # the objective value, not the parameter.
    def expand(start, f_start, want_above):
        x, f = start, f_start
        grow = want_above == rising  # grow the parameter iff that raises f
        for _ in range(_MAX_EXPANSIONS):
            if (f >= target) == want_above:
                return x, f
            x = x * 2.0 if grow else x / 2.0
            f = objective(x)
        side = "upper" if want_above else "lower"
        raise RuntimeError(
            f"bracket expansion failed: no {side} straddle of ARL0={target} "
            f"within {_MAX_EXPANSIONS} doublings from {start}"
        )

    x_below, f_below = expand(x_init, f_init, want_above=False)
    x_above, f_above = expand(x_init, f_init, want_above=True)

    best_x, best_f = (x_above, f_above)
    iterations = 0
    while abs(x_above - x_below) >= _MIN_BRACKET:
        iterations += 1
        mid = 0.5 * (x_below + x_above)
        f_mid = objective(mid)
        if f_mid >= target:
            x_above, f_above = mid, f_mid
        else:
            x_below, f_below = mid, f_mid
        if abs(f_mid - target) < abs(best_f - target):
            best_x, best_f = mid, f_mid
        if abs(f_mid - target) <= rel_tol * target:
            best_x, best_f = mid, f_mid
            break

    summary = estimate_arl(family(best_x), scenario, workers)
    return CalibrationResult(
        parameter=best_x,
        achieved_arl0=summary.mean,
        achieved_stderr=summary.stderr,
        iterations=iterations,
        bracket=(min(x_below, x_above), max(x_below, x_above)),
    )
