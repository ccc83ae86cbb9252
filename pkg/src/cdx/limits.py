"""Decreasing control-limit functions g(.) for observation-adjusted charts.

The chart alarms when the CUSUM statistic reaches c*g(Zbar_n), where
Zbar_n is the running (or windowed) mean of the LLRs.  Three shapes:

    CONSTANT   g(x) = 1                          (plain CUSUM)
    G_UR       g(x) = 1 - u (x - (mu0 - r))      (affine, anchored below mu0)
    G_TILDE    g(x) = min{1, 1 - u (x - mu0)}    (capped at 1)

All are non-increasing; for u > 0 each non-constant shape crosses zero, so
the adjusted limit can go negative (a negative limit forces an immediate
alarm through the k=0 floor in the detector).  At u = 0 every shape
collapses to the constant 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = ["LimitKind", "ControlLimitFn", "constant", "g_ur", "g_tilde", "eval_limit", "derivative"]


class LimitKind(enum.Enum):
    CONSTANT = "const"
    G_UR = "gur"
    G_TILDE = "gtilde"


@dataclass(frozen=True)
class ControlLimitFn:
    """A member of the control-limit family.

    u is the steepness (>= 0, ignored for CONSTANT), r the slack used by
    G_UR's anchor mu0 - r, and mu0 the pre-change drift anchor (< 0).
    """

    kind: LimitKind
    u: float = 0.0
    r: float = 0.0
    mu0: float = -0.5

    def __post_init__(self) -> None:
        if self.u < 0:
            raise ValueError(f"steepness u must be >= 0, got {self.u}")
        if self.r < 0:
            raise ValueError(f"slack r must be >= 0, got {self.r}")
        if not self.mu0 < 0:
            raise ValueError(f"anchor mu0 must be < 0, got {self.mu0}")

    def __call__(self, x: float) -> float:
        return eval_limit(self, x)


def constant() -> ControlLimitFn:
    return ControlLimitFn(LimitKind.CONSTANT)


def g_ur(u: float, r: float = 0.0, mu0: float = -0.5) -> ControlLimitFn:
    return ControlLimitFn(LimitKind.G_UR, u=u, r=r, mu0=mu0)


def g_tilde(u: float, mu0: float = -0.5) -> ControlLimitFn:
    return ControlLimitFn(LimitKind.G_TILDE, u=u, mu0=mu0)


def eval_limit(g: ControlLimitFn, x: float) -> float:
    """g(x).  Negative values are legitimate and mean "alarm now"."""
    if g.kind is LimitKind.CONSTANT:
        return 1.0
    if g.kind is LimitKind.G_UR:
        return 1.0 - g.u * (x - (g.mu0 - g.r))
    # G_TILDE
    return min(1.0, 1.0 - g.u * (x - g.mu0))


def derivative(g: ControlLimitFn, x: float) -> float:
    """dg/dx, taking the left derivative (0) at G_TILDE's kink x = mu0."""
    if g.kind is LimitKind.CONSTANT:
        return 0.0
    if g.kind is LimitKind.G_UR:
        return -g.u
    return -g.u if x > g.mu0 else 0.0
