"""Streaming stopping rules: CUSUM, CUSUM-OAL, SLR, and min-combinations.

Every rule consumes one LLR value per step and alarms the first time its
condition holds (ties alarm; all comparisons are >=).  With S_n the running
LLR total and M_n = max_{1<=k<=n} sum_{i=n-k+1}^n Z_i the CUSUM statistic:

    CUSUM(c)        alarm when M_n >= c
    CUSUM_OAL(c,g)  alarm when max(M_n, 0) >= c * g(Zbar_n)
    SLR(r)          alarm when S_n - n*mu0 >= -r*n
    MIN_COMBO       alarm when any component alarms (pathwise minimum)

The max(.,0) floor in the OAL rule is the k=0 empty trailing sum; it makes
a non-positive control limit alarm immediately.  Zbar_n is the full-history
mean S_n/n, or the mean of the last min(n, window) LLRs for the sliding
variant.  Checks start at n=1 — there is no alarm on an empty history.

M_n is maintained by the reset recursion M_n = max(M_{n-1}, 0) + Z_n;
`stopping_time_bruteforce` re-derives every trailing sum from scratch and
serves as the definitional oracle for the recursion and all alarm rules.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

from .limits import ControlLimitFn, LimitKind, constant, eval_limit

__all__ = [
    "DetectorKind",
    "DetectorSpec",
    "DetectorState",
    "cusum",
    "cusum_oal",
    "slr",
    "min_combo",
    "init",
    "step",
    "run",
    "stopping_time_bruteforce",
]


class DetectorKind(enum.Enum):
    CUSUM = "cusum"
    CUSUM_OAL = "oal"
    SLR = "slr"
    MIN_COMBO = "mincombo"


@dataclass(frozen=True)
class DetectorSpec:
    """Configuration of one stopping rule.

    window=None means the full-history mean; an integer w uses the sliding
    mean over the last min(n, w) values.  mu0 anchors the SLR rule and
    defaults to the canonical pre-change drift -1/2.
    """

    kind: DetectorKind
    c: float = 1.0
    g: ControlLimitFn | None = None
    window: int | None = None
    r: float = 0.0
    mu0: float = -0.5
    components: tuple["DetectorSpec", ...] = ()

    def __post_init__(self) -> None:
        if self.kind in (DetectorKind.CUSUM, DetectorKind.CUSUM_OAL):
            if not self.c > 0:
                raise ValueError(f"threshold c must be > 0, got {self.c}")
        if self.kind is DetectorKind.CUSUM_OAL:
            if self.g is None:
                object.__setattr__(self, "g", constant())
            if self.window is not None and not self.window >= 1:
                raise ValueError(f"window must be a positive integer, got {self.window}")
        elif self.window is not None:
            raise ValueError(f"window only applies to CUSUM_OAL, not {self.kind}")
        if self.kind is DetectorKind.SLR and self.r < 0:
            raise ValueError(f"slack r must be >= 0, got {self.r}")
        if self.kind is DetectorKind.MIN_COMBO:
            if not self.components:
                raise ValueError("MIN_COMBO needs at least one component")
        elif self.components:
            raise ValueError("components only apply to MIN_COMBO")


def cusum(c: float, mu0: float = -0.5) -> DetectorSpec:
    return DetectorSpec(DetectorKind.CUSUM, c=c, mu0=mu0)


def cusum_oal(
    c: float, g: ControlLimitFn, window: int | None = None, mu0: float = -0.5
) -> DetectorSpec:
    return DetectorSpec(DetectorKind.CUSUM_OAL, c=c, g=g, window=window, mu0=mu0)


def slr(r: float = 0.0, mu0: float = -0.5) -> DetectorSpec:
    return DetectorSpec(DetectorKind.SLR, r=r, mu0=mu0)


def min_combo(*components: DetectorSpec) -> DetectorSpec:
    return DetectorSpec(DetectorKind.MIN_COMBO, components=tuple(components))


@dataclass
class DetectorState:
    """Mutable per-stream state; never shared between streams."""

    spec: DetectorSpec
    n: int = 0
    M: float = -math.inf
    S: float = 0.0
    ring: deque = field(default_factory=deque)
    alarmed_at: int | None = None
    children: tuple["DetectorState", ...] = ()


def init(spec: DetectorSpec) -> DetectorState:
    """Fresh state at n=0; alarm checks begin with the first observation."""
    state = DetectorState(spec)
    if spec.kind is DetectorKind.MIN_COMBO:
        state.children = tuple(init(c) for c in spec.components)
    if spec.window is not None:
        state.ring = deque(maxlen=spec.window)
    return state


def step(state: DetectorState, z: float) -> int | None:
    """Feed one LLR value; return the alarm index n, or None.

    Stepping an already-alarmed detector is a contract violation.
    """
    if state.alarmed_at is not None:
        raise RuntimeError(f"detector already alarmed at n={state.alarmed_at}")
    state.n += 1
    state.S += z
    # max(-inf, 0) = 0 makes the recursion give M_1 = Z_1 without a special case
    state.M = max(state.M, 0.0) + z
    if state.spec.window is not None:
        state.ring.append(z)
    if _alarm_now(state, z):
        state.alarmed_at = state.n
        return state.n
    return None


def _alarm_now(state: DetectorState, z: float) -> bool:
    spec = state.spec
    if spec.kind is DetectorKind.CUSUM:
        return state.M >= spec.c
    if spec.kind is DetectorKind.CUSUM_OAL:
        if spec.window is None:
            mean = state.S / state.n
        else:
            mean = sum(state.ring) / len(state.ring)
        return max(state.M, 0.0) >= spec.c * eval_limit(spec.g, mean)
    if spec.kind is DetectorKind.SLR:
        return state.S - state.n * spec.mu0 >= -spec.r * state.n
    # MIN_COMBO: alarm as soon as any child does
    hit = False
    for child in state.children:
        if child.alarmed_at is None and step(child, z) is not None:
            hit = True
    return hit


def run(spec: DetectorSpec, zs, max_steps: int | None = None) -> int | None:
    """First alarm index within min(len(zs), max_steps) steps, else None."""
    if max_steps is not None and max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    state = init(spec)
    for z in zs:
        if max_steps is not None and state.n >= max_steps:
            break
        if step(state, float(z)) is not None:
            return state.alarmed_at
    return None


def stopping_time_bruteforce(spec: DetectorSpec, zs) -> int | None:
    """Definitional oracle: re-evaluates every trailing sum at every step.

    O(n^2) in the sequence length; used only to cross-check `run`.
    """
    zs = [float(z) for z in zs]
    if spec.kind is DetectorKind.MIN_COMBO:
        times = [stopping_time_bruteforce(c, zs) for c in spec.components]
        finite = [t for t in times if t is not None]
        return min(finite) if finite else None
    for n in range(1, len(zs) + 1):
        prefix = zs[:n]
        trailing = [math.fsum(prefix[n - k:]) for k in range(1, n + 1)]
        m_n = max(trailing)
        if spec.kind is DetectorKind.CUSUM:
            if m_n >= spec.c:
                return n
        elif spec.kind is DetectorKind.CUSUM_OAL:
            stat = max(m_n, 0.0)  # k=0 empty sum
            if spec.window is None:
                mean = math.fsum(prefix) / n
            else:
                w = min(n, spec.window)
                mean = math.fsum(prefix[n - w:]) / w
            if stat >= spec.c * eval_limit(spec.g, mean):
                return n
        else:  # SLR
            if math.fsum(z - spec.mu0 for z in prefix) >= -spec.r * n:
                return n
    return None
