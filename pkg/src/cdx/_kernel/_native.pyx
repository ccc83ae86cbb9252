#cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled run-length kernel.

Draws standard normals straight from a PCG64 bit generator through numpy's
C API (same ziggurat as Generator.standard_normal, so the stream is
bit-identical to the fallback's block draws) and advances all primitive
rules of a plan in one pass over the observations.

Floating-point note: compiled with -ffp-contract=off and written with the
exact same operation order as the fallback so both backends produce
identical stopping times, not just statistically equivalent ones.
"""

import numpy as np
from numpy.random import PCG64

from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

from .seeds import set_pcg_state

NAME = "native"


cdef inline long long _run_cusum1(bitgen_t *rng, double c, long long tau,
                                  double loc_pre, double loc_post, double scale,
                                  long long max_steps) noexcept nogil:
    # Single plain-CUSUM rule; prefix form M_n = S_n - min_{j<n} S_j.
    cdef double S = 0.0, mprev = 0.0, z
    cdef long long n = 0
    while n < max_steps:
        n += 1
        if tau > 0 and n >= tau:
            z = loc_post + scale * random_standard_normal(rng)
        else:
            z = loc_pre + scale * random_standard_normal(rng)
        S += z
        if S - mprev >= c:
            return n
        if S < mprev:
            mprev = S
    return -max_steps


cdef inline long long _run_oal1(bitgen_t *rng, double c, int gkind, double u,
                                double anchor, long long tau,
                                double loc_pre, double loc_post, double scale,
                                long long max_steps) noexcept nogil:
    # Single full-history-mean OAL rule.
    cdef double S = 0.0, mprev = 0.0, z, sfloor, x, gv
    cdef long long n = 0
    while n < max_steps:
        n += 1
        if tau > 0 and n >= tau:
            z = loc_post + scale * random_standard_normal(rng)
        else:
            z = loc_pre + scale * random_standard_normal(rng)
        S += z
        sfloor = S - mprev
        if sfloor < 0.0:
            sfloor = 0.0
        if gkind == 0:
            gv = 1.0
        else:
            x = S / (<double>n)
            gv = 1.0 - u * (x - anchor)
            if gkind == 2 and gv > 1.0:
                gv = 1.0
        if sfloor >= c * gv:
            return n
        if S < mprev:
            mprev = S
    return -max_steps


def run_batch(int[:] kinds, double[:] cs, int[:] gkinds, double[:] us,
              double[:] anchors, long long[:] wins, double[:] mu0s, double[:] rs,
              long long tau, double loc_pre, double loc_post, double scale,
              long long max_steps, unsigned long long[:, :] seed_tab, bint coupled):
    """Run every replication encoded in seed_tab through the plan.

    Returns int64 alarm times: shape (reps, n_leaves) when coupled (each
    leaf's own time, running until all alarm or the horizon), else shape
    (reps,) with the minimum over leaves.  Negative -max_steps marks a
    censored (no-alarm) entry.
    """
    cdef long long R = seed_tab.shape[0]
    cdef long long K = kinds.shape[0]
    cdef long long maxw = 0
    cdef long long k
    for k in range(K):
        if wins[k] > maxw:
            maxw = wins[k]

    bg = PCG64()
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")

    out = np.empty((R, K), dtype=np.int64)
    cdef long long[:, :] out_v = out
    rings_arr = np.zeros((K, maxw if maxw > 0 else 1), dtype=np.float64)
    cdef double[:, :] rings = rings_arr
    alarm_arr = np.zeros(K, dtype=np.int64)
    cdef long long[:] alarm = alarm_arr

    cdef long long rep, n, ndone, idx, w
    cdef int kind, gk
    cdef double S, mprev, z, sEq1, sfloor, x, gv, nd
    cdef bint fast_cusum = K == 1 and kinds[0] == 0
    cdef bint fast_oal = K == 1 and kinds[0] == 1 and wins[0] == 0

    state_template = {
        "bit_generator": "PCG64",
        "state": {"state": 0, "inc": 0},
        "has_uint32": 0,
        "uinteger": 0,
    }
    inner = state_template["state"]

    for rep in range(R):
        inner["state"] = (int(seed_tab[rep, 0]) << 64) | int(seed_tab[rep, 1])
        inner["inc"] = (int(seed_tab[rep, 2]) << 64) | int(seed_tab[rep, 3])
        bg.state = state_template

        if fast_cusum:
            with nogil:
                out_v[rep, 0] = _run_cusum1(rng, cs[0], tau, loc_pre, loc_post,
                                            scale, max_steps)
            continue
        if fast_oal:
            with nogil:
                out_v[rep, 0] = _run_oal1(rng, cs[0], gkinds[0], us[0], anchors[0],
                                          tau, loc_pre, loc_post, scale, max_steps)
            continue

        with nogil:
            S = 0.0
            mprev = 0.0
            ndone = 0
            n = 0
            for k in range(K):
                alarm[k] = 0
                w = wins[k]
                for idx in range(w):
                    rings[k, idx] = 0.0
            while n < max_steps:
                n += 1
                if tau > 0 and n >= tau:
                    z = loc_post + scale * random_standard_normal(rng)
                else:
                    z = loc_pre + scale * random_standard_normal(rng)
                S += z
                sEq1 = S - mprev
                for k in range(K):
                    if alarm[k] != 0:
                        continue
                    kind = kinds[k]
                    if kind == 0:
                        if sEq1 >= cs[k]:
                            alarm[k] = n
                            ndone += 1
                    elif kind == 1:
                        sfloor = sEq1 if sEq1 > 0.0 else 0.0
                        w = wins[k]
                        if w == 0:
                            x = S / (<double>n)
                        else:
                            idx = n % w
                            if n >= w:
                                x = (S - rings[k, idx]) / (<double>w)
                            else:
                                x = S / (<double>n)
                            rings[k, idx] = S
                        gk = gkinds[k]
                        if gk == 0:
                            gv = 1.0
                        else:
                            gv = 1.0 - us[k] * (x - anchors[k])
                            if gk == 2 and gv > 1.0:
                                gv = 1.0
                        if sfloor >= cs[k] * gv:
                            alarm[k] = n
                            ndone += 1
                    else:
                        nd = <double>n
                        if (S - nd * mu0s[k]) >= -(rs[k] * nd):
                            alarm[k] = n
                            ndone += 1
                if ndone == K or (not coupled and ndone > 0):
                    break
                if S < mprev:
                    mprev = S
            for k in range(K):
                out_v[rep, k] = alarm[k] if alarm[k] != 0 else -max_steps

    if coupled:
        return out
    if K == 1:
        return out[:, 0].copy()
    sentinel = np.iinfo(np.int64).max
    mins = np.where(out > 0, out, sentinel).min(axis=1)
    return np.where(mins == sentinel, -max_steps, mins)
