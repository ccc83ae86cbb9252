"""Streaming detectors against hand calculations and brute-force oracles."""

import numpy as np
import pytest

from cdx.detect import (
    DetectorKind,
    DetectorSpec,
    cusum,
    cusum_oal,
    init,
    min_combo,
    run,
    slr,
    step,
    stopping_time_bruteforce,
)
from cdx.limits import constant, g_tilde, g_ur


class TestHandExamples:
    def test_cusum_two_steps(self):
        # M1 = 0.6 < 1, M2 = max(0.6, 0) + 0.6 = 1.2 >= 1
        assert run(cusum(1.0), [0.6, 0.6]) == 2

    def test_cusum_never_fires_on_negative_llr(self):
        assert run(cusum(1.0), [-1.0] * 50) is None

    def test_cusum_reset_after_dip(self):
        # M: 0.9, max(0.9,0)-2+... -> dips below 0, restarts from 0
        zs = [0.9, -2.0, 0.8, 0.8]
        # M1=0.9, M2=-1.1, M3=0.8, M4=1.6
        assert run(cusum(1.5), zs) == 4

    def test_slr_boundary_alarm(self):
        # S1 - mu0 = 0.1 + 0.5 >= 0
        assert run(slr(0.0), [0.1]) == 1

    def test_slr_waits_for_positive_crossing(self):
        # n=1: -0.6+0.5 = -0.1 < 0; n=2: -0.4+1.0 = 0.6 >= 0
        assert run(slr(0.0), [-0.6, 0.2]) == 2

    def test_slr_slack_delays(self):
        # r shifts the barrier down by r per step
        zs = [-0.6, 0.2]
        assert run(slr(0.2), zs) == 1  # -0.1 >= -0.2


class TestValidation:
    @pytest.mark.parametrize("bad_c", [0.0, -2.0])
    def test_threshold_positive(self, bad_c):
        with pytest.raises(ValueError):
            cusum(bad_c)

    def test_window_needs_oal(self):
        with pytest.raises(ValueError):
            DetectorSpec(DetectorKind.CUSUM, c=1.0, window=5)
        with pytest.raises(ValueError):
            cusum_oal(1.0, constant(), window=0)

    def test_negative_slack_rejected(self):
        with pytest.raises(ValueError):
            slr(-0.1)

    def test_min_combo_needs_components(self):
        with pytest.raises(ValueError):
            DetectorSpec(DetectorKind.MIN_COMBO)
        with pytest.raises(ValueError):
            DetectorSpec(DetectorKind.CUSUM, c=1.0, components=(slr(0.0),))

    def test_step_after_alarm_is_an_error(self):
        state = init(cusum(0.5))
        assert step(state, 1.0) == 1
        with pytest.raises(RuntimeError):
            step(state, 1.0)


def _streams(n_streams=40, length=300, seed=101):
    rng = np.random.default_rng(seed)
    for _ in range(n_streams):
        yield rng.normal(-0.1, 1.0, size=length)


@pytest.mark.parametrize(
    "spec",
    [
        cusum(2.5),
        cusum_oal(3.0, g_tilde(2.0)),
        cusum_oal(3.0, g_ur(1.0, r=0.1)),
        cusum_oal(2.0, constant(), window=7),
        cusum_oal(4.0, g_tilde(10.0), window=20),
        slr(0.05),
        min_combo(cusum(3.0), slr(0.0)),
    ],
    ids=lambda s: s.kind.value,
)
def test_run_matches_bruteforce(spec):
    """Streaming recursion equals the from-scratch prefix computation."""
    for zs in _streams():
        assert run(spec, zs) == stopping_time_bruteforce(spec, zs)


def test_oal_with_constant_limit_is_cusum():
    c = 2.0
    for zs in _streams(n_streams=20):
        assert run(cusum(c), zs) == run(cusum_oal(c, constant()), zs)


def test_min_combo_is_pathwise_min():
    parts = (cusum(2.0), slr(0.01), cusum_oal(3.0, g_tilde(5.0)))
    combo = min_combo(*parts)
    horizon = 300
    for zs in _streams(n_streams=20):
        times = [run(p, zs) or (horizon + 1) for p in parts]
        assert (run(combo, zs) or (horizon + 1)) == min(times)


def test_alarm_time_monotone_in_threshold():
    for zs in _streams(n_streams=15):
        prev = None
        for c in (0.5, 1.0, 2.0, 4.0):
            t = run(cusum(c), zs) or 10**9
            if prev is not None:
                assert t >= prev
            prev = t


def test_gtilde_alarm_time_monotone_in_u():
    """Steeper limits shrink the barrier, so alarms cannot come later."""
    c = 3.0
    for zs in _streams(n_streams=15):
        prev = None
        for u in (0.0, 1.0, 10.0, 100.0):
            t = run(cusum_oal(c, g_tilde(u)), zs) or 10**9
            if prev is not None:
                assert t <= prev
            prev = t


def test_nonpositive_limit_forces_alarm():
    # mean estimate far above mu0 drives g negative: alarm regardless of stat
    spec = cusum_oal(50.0, g_tilde(100.0))
    assert run(spec, [2.0, 2.0, 2.0]) is not None


def test_max_steps_truncates():
    zs = [0.1] * 100
    assert run(cusum(4.0), zs, max_steps=10) is None
    assert run(cusum(4.0), zs) == 40
