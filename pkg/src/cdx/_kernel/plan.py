"""Flattening of DetectorSpec trees into the parallel arrays the kernels run.

Both backends consume the same plan: one row per primitive rule (leaf), in
preorder.  MIN_COMBO nodes disappear — the combination is just the minimum
over its leaves' alarm times, which the kernel takes on the fly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..detect import DetectorKind, DetectorSpec
from ..limits import LimitKind

__all__ = ["KernelPlan", "compile_plan", "compile_plans"]

KIND_CUSUM, KIND_OAL, KIND_SLR = 0, 1, 2
G_CONST, G_UR, G_TILDE = 0, 1, 2

_KIND_CODE = {
    DetectorKind.CUSUM: KIND_CUSUM,
    DetectorKind.CUSUM_OAL: KIND_OAL,
    DetectorKind.SLR: KIND_SLR,
}
_G_CODE = {LimitKind.CONSTANT: G_CONST, LimitKind.G_UR: G_UR, LimitKind.G_TILDE: G_TILDE}


@dataclass(frozen=True)
class KernelPlan:
    kinds: np.ndarray    # int32[K]
    cs: np.ndarray       # float64[K] thresholds (0 for SLR)
    gkinds: np.ndarray   # int32[K] control-limit shape codes
    us: np.ndarray       # float64[K] steepness
    anchors: np.ndarray  # float64[K] mu0-r for G_UR, mu0 for G_TILDE
    wins: np.ndarray     # int64[K], 0 = full-history mean
    mu0s: np.ndarray     # float64[K] SLR anchor
    rs: np.ndarray       # float64[K] SLR slack
    groups: tuple[slice, ...]  # leaf range of each input spec

    @property
    def n_leaves(self) -> int:
        return len(self.kinds)


def _leaves(spec: DetectorSpec) -> list[DetectorSpec]:
    if spec.kind is DetectorKind.MIN_COMBO:
        out: list[DetectorSpec] = []
        for comp in spec.components:
            out.extend(_leaves(comp))
        return out
    return [spec]


def compile_plans(specs: list[DetectorSpec]) -> KernelPlan:
    """One plan covering several specs run on a shared observation stream."""
    rows = []
    groups = []
    pos = 0
    for spec in specs:
        leaves = _leaves(spec)
        groups.append(slice(pos, pos + len(leaves)))
        pos += len(leaves)
        rows.extend(leaves)
    n = len(rows)
    plan = KernelPlan(
        kinds=np.zeros(n, dtype=np.int32),
        cs=np.zeros(n, dtype=np.float64),
        gkinds=np.zeros(n, dtype=np.int32),
        us=np.zeros(n, dtype=np.float64),
        anchors=np.zeros(n, dtype=np.float64),
        wins=np.zeros(n, dtype=np.int64),
        mu0s=np.zeros(n, dtype=np.float64),
        rs=np.zeros(n, dtype=np.float64),
        groups=tuple(groups),
    )
    for i, leaf in enumerate(rows):
        plan.kinds[i] = _KIND_CODE[leaf.kind]
        if leaf.kind in (DetectorKind.CUSUM, DetectorKind.CUSUM_OAL):
            plan.cs[i] = leaf.c
        if leaf.kind is DetectorKind.CUSUM_OAL:
            g = leaf.g
            plan.gkinds[i] = _G_CODE[g.kind]
            plan.us[i] = g.u
            plan.anchors[i] = g.mu0 - g.r if g.kind is LimitKind.G_UR else g.mu0
            plan.wins[i] = leaf.window or 0
        if leaf.kind is DetectorKind.SLR:
            plan.mu0s[i] = leaf.mu0
            plan.rs[i] = leaf.r
    return plan


def compile_plan(spec: DetectorSpec) -> KernelPlan:
    return compile_plans([spec])
