"""Monte Carlo run-length engine.

Replications are fully deterministic: replication r of a scenario with
root seed s draws from its own PCG64 stream derived from (s, r), so the
same (seed, rep_index) gives the same stopping time on either backend, at
any parallelism degree, alone or inside a batch.  Aggregation runs in
replication-index order with exact integer totals and compensated
summation for second moments, making summaries bit-reproducible.

Censoring: runs that reach the horizon without alarming are recorded at
max_steps and counted in `censored`; a summary with censored > 0 is a
lower bound on the true mean.

Comparison grids reuse one set of replication seeds for every (spec,
shift, tau) cell — common random numbers — so cross-test and cross-shift
differences are pathwise ordered, not just ordered in expectation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernel
from ._kernel import compile_plans, seed_table
from .detect import DetectorSpec
from .model import GaussianChangeSpec, drift, llr_sd

__all__ = [
    "DEFAULT_MAX_STEPS",
    "Scenario",
    "RunLength",
    "RunLengthSummary",
    "GridCell",
    "simulate_run_length",
    "run_lengths",
    "coupled_stopping_times",
    "estimate_arl",
    "conditional_delay",
    "j_ace",
    "compare_grid",
]

DEFAULT_MAX_STEPS = 10_000_000

# Replications per parallel work unit; fixed so that chunk boundaries (and
# with them the assembled output) never depend on the worker count.
_CHUNK = 50_000


@dataclass(frozen=True)
class Scenario:
    """One change-point experiment: N(v0,s^2) before tau, N(v,s^2) from tau on.

    tau=0 means no change ever (in-control).  `base` fixes the observation
    family and the LLR reference means.
    """

    tau: int
    v: float
    reps: int
    seed: int
    max_steps: int = DEFAULT_MAX_STEPS
    base: GaussianChangeSpec = field(default_factory=GaussianChangeSpec)

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")

    def llr_stream_params(self) -> tuple[float, float, float]:
        """(loc_pre, loc_post, scale) of the LLR sequence Z_i."""
        model = replace(self.base, v=self.v)
        return drift(model, model.v0), drift(model, self.v), llr_sd(model)


class RunLength(NamedTuple):
    time: int
    censored: bool


@dataclass(frozen=True)
class RunLengthSummary:
    mean: float
    sd: float
    stderr: float
    reps_used: int
    censored: int
    conditional_kept: int

    @property
    def is_lower_bound(self) -> bool:
        return self.censored > 0


@dataclass(frozen=True)
class GridCell:
    label: str
    spec: DetectorSpec
    shift: float
    tau: int
    summary: RunLengthSummary


def _run_range(specs, scenario: Scenario, lo: int, hi: int, coupled: bool) -> np.ndarray:
    plan = compile_plans(list(specs))
    loc_pre, loc_post, scale = scenario.llr_stream_params()
    tab = seed_table(scenario.seed, lo, hi)
    raw = _kernel.backend.run_batch(
        plan.kinds, plan.cs, plan.gkinds, plan.us, plan.anchors, plan.wins,
        plan.mu0s, plan.rs, scenario.tau, loc_pre, loc_post, scale,
        scenario.max_steps, tab, coupled,
    )
    if not coupled:
        return raw
    # reduce per-leaf times to one column per requested spec
    out = np.empty((hi - lo, len(plan.groups)), dtype=np.int64)
    sentinel = np.iinfo(np.int64).max
    for j, grp in enumerate(plan.groups):
        block = raw[:, grp]
        mins = np.where(block > 0, block, sentinel).min(axis=1)
        out[:, j] = np.where(mins == sentinel, -scenario.max_steps, mins)
    return out


def _worker(args) -> np.ndarray:
    specs, scenario, lo, hi, coupled = args
    return _run_range(specs, scenario, lo, hi, coupled)


def _stopping_times(specs, scenario: Scenario, coupled: bool, workers: int) -> np.ndarray:
    """Signed stopping times for all replications (negative = censored)."""
    reps = scenario.reps
    if workers <= 1 or reps <= _CHUNK:
        return _run_range(specs, scenario, 0, reps, coupled)
    tasks = [
        (tuple(specs), scenario, lo, min(lo + _CHUNK, reps), coupled)
        for lo in range(0, reps, _CHUNK)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_worker, tasks))
    return np.concatenate(parts)


def simulate_run_length(spec: DetectorSpec, scenario: Scenario, rep_index: int) -> RunLength:
    """Stopping time of one replication, reproducible in isolation."""
    if not 0 <= rep_index < scenario.reps:
        raise ValueError(f"rep_index {rep_index} outside [0, {scenario.reps})")
    t = int(_run_range([spec], scenario, rep_index, rep_index + 1, False)[0])
    return RunLength(abs(t), t < 0)


def run_lengths(spec: DetectorSpec, scenario: Scenario, workers: int = 1) -> np.ndarray:
    """Signed per-replication stopping times (negative -t = censored at t)."""
    return _stopping_times([spec], scenario, False, workers)


def coupled_stopping_times(
    specs: Sequence[DetectorSpec], scenario: Scenario, workers: int = 1
) -> np.ndarray:
    """Signed times of several rules on shared noise, shape (reps, len(specs)).

    Each replication feeds the identical LLR stream to every spec, so the
    columns can be compared pathwise (e.g. large-steepness limit checks).
    """
    if not specs:
        raise ValueError("need at least one spec")
    return _stopping_times(list(specs), scenario, True, workers)


def _summarize(times: np.ndarray, tau: int) -> RunLengthSummary:
    values = np.abs(times)
    if tau >= 1:
        kept = values >= tau
        if not kept.any():
            raise RuntimeError(f"no replication survived to tau={tau}")
        censored = int(((times < 0) & kept).sum())
        data = values[kept] - (tau - 1)
        conditional_kept = int(kept.sum())
    else:
        censored = int((times < 0).sum())
        if censored == len(times):
            raise RuntimeError("horizon too small: all replications censored")
        data = values
        conditional_kept = len(values)
    n = len(data)
    mean = int(data.sum(dtype=np.int64)) / n  # exact integer total
    if n > 1:
        devs = data.astype(np.float64) - mean
        np.multiply(devs, devs, out=devs)
        sd = math.sqrt(math.fsum(devs) / (n - 1))
    else:
        sd = 0.0
    return RunLengthSummary(
        mean=mean,
        sd=sd,
        stderr=sd / math.sqrt(n),
        reps_used=n,
        censored=censored,
        conditional_kept=conditional_kept,
    )


def estimate_arl(spec: DetectorSpec, scenario: Scenario, workers: int = 1) -> RunLengthSummary:
    """Mean/SD/stderr of the stopping time (ARL0 when tau=0, ARL1 when tau=1)."""
    return _summarize(run_lengths(spec, scenario, workers), tau=0)


def conditional_delay(
    spec: DetectorSpec, scenario: Scenario, workers: int = 1
) -> RunLengthSummary:
    """Mean of T - tau + 1 over replications with T >= tau.

    Replications alarming before the change are discarded and counted via
    reps - conditional_kept.  Requires max_steps >= tau so censored runs
    are correctly classified as survivors.
    """
    if scenario.tau < 1:
        raise ValueError("conditional_delay needs tau >= 1")
    if scenario.max_steps < scenario.tau:
        raise ValueError("max_steps < tau: survivors would be unobservable")
    return _summarize(run_lengths(spec, scenario, workers), tau=scenario.tau)


def j_ace(
    spec: DetectorSpec,
    tau_list: Sequence[int],
    v: float,
    reps: int,
    seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    base: GaussianChangeSpec | None = None,
    workers: int = 1,
) -> float:
    """Unweighted mean of the conditional delays over tau_list."""
    if not tau_list:
        raise ValueError("tau_list must be nonempty")
    kwargs = {} if base is None else {"base": base}
    means = [
        conditional_delay(
            spec, Scenario(tau=t, v=v, reps=reps, seed=seed, max_steps=max_steps, **kwargs),
            workers,
        ).mean
        for t in tau_list
    ]
    return sum(means) / len(means)


def compare_grid(
    specs: Sequence[DetectorSpec],
    shifts: Sequence[float],
    taus: Sequence[int],
    reps: int,
    seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    base: GaussianChangeSpec | None = None,
    workers: int = 1,
    labels: Sequence[str] | None = None,
) -> list[GridCell]:
    """One summary per (spec, shift, tau) cell under common random numbers.

    tau=0 cells report the plain ARL; tau>=1 cells report the conditional
    delay (which at tau=1 is exactly the out-of-control ARL).
    """
    if not specs or not shifts or not taus:
        raise ValueError("specs, shifts, and taus must be nonempty")
    if labels is None:
        labels = [s.kind.value for s in specs]
    if len(labels) != len(specs):
        raise ValueError("labels must match specs")
    kwargs = {} if base is None else {"base": base}
    cells = []
    for spec, label in zip(specs, labels):
        for shift in shifts:
            for tau in taus:
                scn = Scenario(
                    tau=tau, v=shift, reps=reps, seed=seed, max_steps=max_steps, **kwargs
                )
                if tau == 0:
                    summary = estimate_arl(spec, scn, workers)
                else:
                    summary = conditional_delay(spec, scn, workers)
                cells.append(GridCell(label, spec, shift, tau, summary))
    return cells
