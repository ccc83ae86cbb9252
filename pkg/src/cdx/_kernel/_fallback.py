"""Pure-python (vectorized numpy) run-length kernel.

Block-based twin of the compiled kernel: draws standard normals in growing
blocks from the identical per-replication PCG64 stream and evaluates the
same alarm conditions with the same floating-point operation order, so
stopping times match the native backend bit for bit.  Roughly 3-10x slower
at long run lengths and worse on short ones (per-block overhead).
"""

from __future__ import annotations

import numpy as np
from numpy.random import PCG64, Generator

from .seeds import set_pcg_state

NAME = "fallback"

_BLOCK_START = 128
_BLOCK_CAP = 32768
_I64_MAX = np.iinfo(np.int64).max


def run_batch(kinds, cs, gkinds, us, anchors, wins, mu0s, rs,
              tau, loc_pre, loc_post, scale, max_steps, seed_tab, coupled):
    """Same contract as the native kernel's run_batch."""
    reps = seed_tab.shape[0]
    n_leaves = len(kinds)
    out = np.empty((reps, n_leaves), dtype=np.int64)
    bg = PCG64()
    gen = Generator(bg)
    for rep in range(reps):
        set_pcg_state(bg, seed_tab[rep])
        out[rep] = _run_one(gen, kinds, cs, gkinds, us, anchors, wins, mu0s, rs,
                            tau, loc_pre, loc_post, scale, max_steps, coupled)
    if coupled:
        return out
    if n_leaves == 1:
        return out[:, 0].copy()
    mins = np.where(out > 0, out, _I64_MAX).min(axis=1)
    return np.where(mins == _I64_MAX, -max_steps, mins)


def _run_one(gen, kinds, cs, gkinds, us, anchors, wins, mu0s, rs,
             tau, loc_pre, loc_post, scale, max_steps, coupled):
    n_leaves = len(kinds)
    alarm = np.zeros(n_leaves, dtype=np.int64)
    maxwin = int(wins.max()) if n_leaves else 0
    # hist holds S_j for j in [hist_lo, n0]; needed by sliding-window means
    hist = np.zeros(1, dtype=np.float64)  # S_0 = 0
    hist_lo = 0
    s_prev = 0.0  # S_{n0}
    m_prev = 0.0  # min(S_0 .. S_{n0-1}), with the convention min over empty = S_0 = 0
    n0 = 0
    block = _BLOCK_START
    while n0 < max_steps:
        b = min(block, max_steps - n0)
        block = min(block * 4, _BLOCK_CAP)
        steps = np.arange(n0 + 1, n0 + b + 1, dtype=np.int64)
        nd = steps.astype(np.float64)
        eps = gen.standard_normal(b)
        if tau > 0:
            loc = np.where(steps >= tau, loc_post, loc_pre)
        else:
            loc = loc_pre
        z = loc + scale * eps
        z[0] = s_prev + z[0]
        s_arr = np.cumsum(z)
        # m_arr[i] = min(S_0 .. S_{n-1}) for step n = steps[i]
        run_min = np.minimum.accumulate(s_arr)
        m_arr = np.empty(b, dtype=np.float64)
        m_arr[0] = m_prev
        np.minimum(m_prev, run_min[:-1], out=m_arr[1:])
        s_eq1 = s_arr - m_arr

        for k in range(n_leaves):
            if alarm[k] != 0:
                continue
            kind = kinds[k]
            if kind == 0:  # CUSUM
                mask = s_eq1 >= cs[k]
            elif kind == 1:  # CUSUM-OAL
                sfloor = np.maximum(s_eq1, 0.0)
                w = int(wins[k])
                if w == 0:
                    x = s_arr / nd
                else:
                    x = np.empty(b, dtype=np.float64)
                    short = steps < w
                    np.divide(s_arr, nd, out=x, where=short)
                    idx = steps - w - hist_lo
                    full = ~short
                    if full.any():
                        s_old = hist_and_block_gather(hist, s_arr, idx[full])
                        x[full] = (s_arr[full] - s_old) / float(w)
                if gkinds[k] == 0:
                    gv = 1.0
                else:
                    gv = 1.0 - us[k] * (x - anchors[k])
                    if gkinds[k] == 2:
                        gv = np.minimum(1.0, gv)
                mask = sfloor >= cs[k] * gv
            else:  # SLR
                mask = (s_arr - nd * mu0s[k]) >= -(rs[k] * nd)
            if mask.any():
                alarm[k] = n0 + 1 + int(np.argmax(mask))

        live = alarm == 0
        if not live.any() or (not coupled and not live.all()):
            break

        n0 += b
        s_prev = float(s_arr[-1])
        m_prev = float(min(m_prev, run_min[-1]))
        if maxwin > 0:
            ext = np.concatenate([hist, s_arr])
            new_lo = max(0, n0 + 1 - maxwin)
            hist = ext[new_lo - hist_lo:]
            hist_lo = new_lo

    result = alarm.copy()
    result[result == 0] = -max_steps
    return result


def hist_and_block_gather(hist, s_arr, idx):
    """S values at absolute indices idx, spanning the kept history + block."""
    nh = len(hist)
    res = np.empty(len(idx), dtype=np.float64)
    in_hist = idx < nh
    res[in_hist] = hist[idx[in_hist]]
    res[~in_hist] = s_arr[idx[~in_hist] - nh]
    return res
