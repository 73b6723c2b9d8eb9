import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resregen.analyzer import AnalyzerSettings, analyze, band_power, bin_at
from resregen.cavity import CavityParams, coupled_transmission
from resregen.chain import (AliasError, ChainConfig, ChainError, ScenePoint, SweepError,
                            analytic_output, baseband_noise_power, gen_power_for_cavity_input,
                            measure_point, point_seed, sweep, sweep_spectrum, synthesize)
from resregen.fitting import SweepData, fit
from resregen.thermal import ThermalEnvironment, per_bin_noise
from resregen.units import K_B, dbm_to_watts, watts_to_dbm

F_RES = 9.590e9
CAV = CavityParams(F_RES, 8800.0, 0.89, 0.94)
ROOM = ThermalEnvironment(305.4)
COLD = ThermalEnvironment(1e-6)
CHAIN = ChainConfig()
UNITY = ChainConfig(lna_gain_db=0.0, post_gain_db=0.0)
QUIET = ChainConfig(lna_noise_temp=0.0)


def at_cavity(dbm, chain=CHAIN, f=F_RES):
    return ScenePoint(f, gen_power_for_cavity_input(dbm_to_watts(dbm), chain))


class TestChainConfig:
    def test_defaults(self):
        assert CHAIN.attenuation_db == 124.0
        assert CHAIN.lo_freq == 9.584e9
        assert CHAIN.gain_after_cavity == pytest.approx(1e6)

    def test_nyquist(self):
        with pytest.raises(ChainError):
            ChainConfig(lpf_cutoff=10e6, sample_rate=20e6)

    def test_non_finite(self):
        with pytest.raises(ChainError):
            ChainConfig(lna_gain_db=float("nan"))

    def test_band_check(self):
        CHAIN.check_band(9.593e9)
        with pytest.raises(ChainError):
            CHAIN.check_band(9.6e9)


class TestAnalytic:
    def test_minus125_unity_gain(self):
        out = analytic_output(at_cavity(-125, UNITY), UNITY, CAV, ROOM, 1.0)
        assert watts_to_dbm(out.signal_bin_power) == pytest.approx(-125 + 10 * math.log10(0.41784), abs=1e-3)
        assert watts_to_dbm(out.signal_bin_power) == pytest.approx(-128.8, abs=0.05)

    def test_noise_budget_components(self):
        out = analytic_output(at_cavity(-125), CHAIN, CAV, ROOM, 625.0)
        expected = (per_bin_noise(CAV, ROOM, 625.0, 0.0, F_RES) + K_B * 100.0 * 625.0) * 1e6
        assert out.noise_bin_power == pytest.approx(expected, rel=1e-12)

    def test_generator_off(self):
        on = analytic_output(at_cavity(-125), CHAIN, CAV, ROOM, 1.0)
        off = analytic_output(ScenePoint(F_RES, 0.0), CHAIN, CAV, ROOM, 1.0)
        assert off.signal_bin_power == 0.0
        assert off.noise_bin_power == on.noise_bin_power

    def test_baseband_frequency(self):
        out = analytic_output(at_cavity(-55), CHAIN, CAV, ROOM, 1.0)
        assert out.baseband_freq == pytest.approx(6.0e6)

    def test_alias_rejected(self):
        with pytest.raises(AliasError):
            analytic_output(ScenePoint(9.584e9 + 12e6, 1.0), CHAIN, CAV, ROOM, 1.0)

    @given(st.floats(-160, 0), st.floats(-3e6, 3e6))
    def test_linear_db_slope(self, dbm, df):
        f = F_RES + df
        a = analytic_output(at_cavity(dbm, f=f), CHAIN, CAV, ROOM, 1.0).signal_bin_power
        b = analytic_output(at_cavity(dbm + 10, f=f), CHAIN, CAV, ROOM, 1.0).signal_bin_power
        assert watts_to_dbm(b) - watts_to_dbm(a) == pytest.approx(10.0, abs=1e-9)


class TestSynthesize:
    def test_deterministic(self):
        pt = at_cavity(-125)
        a = synthesize(pt, CHAIN, CAV, ROOM, 1e-3, seed=5)
        b = synthesize(pt, CHAIN, CAV, ROOM, 1e-3, seed=5)
        assert a.samples.tobytes() == b.samples.tobytes()
        c = synthesize(pt, CHAIN, CAV, ROOM, 1e-3, seed=6)
        assert not np.array_equal(a.samples, c.samples)

    def test_frame_length(self):
        fr = synthesize(at_cavity(-125), CHAIN, CAV, ROOM, 1.6e-3, seed=1)
        assert len(fr.samples) == round(1.6e-3 * CHAIN.sample_rate)
        assert fr.duration == pytest.approx(1.6e-3)
        assert np.all(np.isfinite(fr.samples))

    def test_no_sources_all_zero(self):
        fr = synthesize(ScenePoint(F_RES, 0.0), QUIET, CAV, COLD, 1e-3, seed=1)
        assert not np.any(fr.samples)
        fz = synthesize(ScenePoint(F_RES, 0.0), QUIET, CAV, COLD, 1.0, seed=1, span=16.0)
        assert not np.any(fz.samples)

    @pytest.mark.parametrize("df", [0.0, -1.2e6, 2.5e6])
    def test_tone_power_matches_analytic(self, df):
        pt = at_cavity(-125, QUIET, F_RES + df)
        expected = analytic_output(pt, QUIET, CAV, COLD, 625.0).signal_bin_power
        fr = synthesize(pt, QUIET, CAV, COLD, 8 / 625.0, seed=3)
        spec = analyze(fr, AnalyzerSettings(625.0, 8, "rectangular"))
        k = bin_at(spec, pt.gen_freq - QUIET.lo_freq)
        assert abs(10 * math.log10(spec.powers[k] / expected)) <= 0.1

    def test_zoom_tone_power(self):
        pt = at_cavity(-145, QUIET)
        expected = analytic_output(pt, QUIET, CAV, COLD, 1.0).signal_bin_power
        fr = synthesize(pt, QUIET, CAV, COLD, 4.0, seed=3, span=16.0)
        assert fr.is_complex and fr.center_freq == pytest.approx(6e6)
        spec = analyze(fr, AnalyzerSettings(1.0, 4, "rectangular"))
        k = bin_at(spec, fr.center_freq)
        assert abs(10 * math.log10(spec.powers[k] / expected)) <= 0.1

    def test_tone_frequency_within_one_bin(self):
        pt = at_cavity(-100, CHAIN, 9.5912e9)
        fr = synthesize(pt, CHAIN, CAV, ROOM, 4 / 625.0, seed=8)
        spec = analyze(fr, AnalyzerSettings(625.0, 4, "hann"))
        k = int(np.argmax(spec.powers))
        assert abs(spec.freqs[k] - (pt.gen_freq - CHAIN.lo_freq)) <= spec.rbw

    def test_noise_converges_to_budget(self):
        m = 100
        fr = synthesize(ScenePoint(F_RES, 0.0), CHAIN, CAV, ROOM, m / 625.0, seed=21)
        spec = analyze(fr, AnalyzerSettings(625.0, m, "rectangular"))
        measured = band_power(spec, spec.freqs[0], spec.freqs[-1])
        assert abs(measured / baseband_noise_power(CHAIN, CAV, ROOM) - 1) <= 3 / math.sqrt(m)

    def test_zoom_noise_level(self):
        # complex zoom bins carry analytic per-RBW noise, on average
        pt = ScenePoint(F_RES, 0.0)
        fr = synthesize(pt, CHAIN, CAV, ROOM, 400.0, seed=4, span=16.0)
        spec = analyze(fr, AnalyzerSettings(1.0, 400, "rectangular"))
        expected = analytic_output(pt, CHAIN, CAV, ROOM, 1.0).noise_bin_power
        assert abs(spec.powers.mean() / expected - 1) <= 3 / math.sqrt(400 * 16)

    def test_rejects(self):
        with pytest.raises(AliasError):
            synthesize(ScenePoint(9.6e9, 1.0), CHAIN, CAV, ROOM, 1e-3, seed=1)
        with pytest.raises(ChainError):
            synthesize(ScenePoint(F_RES, 1.0), CHAIN, CAV, ROOM, float("inf"), seed=1)
        with pytest.raises(ChainError):
            synthesize(ScenePoint(F_RES, 1.0), CHAIN, CAV, ROOM, -1.0, seed=1)


def grid(dbm, n=201, lo=9.588e9, hi=9.593e9):
    return [at_cavity(dbm, CHAIN, f) for f in np.linspace(lo, hi, n)]


class TestSweep:
    def test_symmetric_analytic(self):
        pts = [at_cavity(-55, CHAIN, F_RES + d) for d in (-2e6, -1e6, 0.0, 1e6, 2e6)]
        p = [r.power for r in sweep(pts, CHAIN, CAV, ROOM, 1.0)]
        assert p[0] == pytest.approx(p[4], rel=1e-6)
        assert p[1] == pytest.approx(p[3], rel=1e-6)
        assert p[2] > p[1] > p[0]

    def test_fig4_peak(self):
        res = sweep(grid(-55), CHAIN, CAV, ROOM, 1.0)
        best = max(res, key=lambda r: r.power)
        assert best.gen_freq == pytest.approx(9.590e9, abs=12.5e3)

    def test_order_independence(self):
        pts = grid(-145, 21)
        seeds = [point_seed(7, i) for i in range(len(pts))]
        in_order = [measure_point(p, CHAIN, CAV, ROOM, 1.0, "stochastic", s, 10).power
                    for p, s in zip(pts, seeds)]
        idx = list(range(len(pts)))
        random.Random(3).shuffle(idx)
        shuffled = {i: measure_point(pts[i], CHAIN, CAV, ROOM, 1.0, "stochastic", seeds[i], 10).power
                    for i in idx}
        assert [shuffled[i] for i in range(len(pts))] == in_order
        swept = [r.power for r in sweep(pts, CHAIN, CAV, ROOM, 1.0, "stochastic", 7, 10)]
        assert swept == in_order

    def test_parallel_matches_serial(self):
        pts = grid(-135, 31)
        a = sweep(pts, CHAIN, CAV, ROOM, 1.0, "stochastic", 9, 20, workers=1)
        b = sweep(pts, CHAIN, CAV, ROOM, 1.0, "stochastic", 9, 20, workers=4)
        assert [r.power for r in a] == [r.power for r in b]

    def test_errors_aggregated(self):
        pts = grid(-55, 5) + [ScenePoint(9.6e9, 1.0), ScenePoint(9.7e9, 1.0)]
        with pytest.raises(SweepError) as info:
            sweep(pts, CHAIN, CAV, ROOM, 1.0)
        assert [i for i, _ in info.value.failures] == [5, 6]

    def test_preconditions(self):
        with pytest.raises(ChainError):
            sweep([], CHAIN, CAV, ROOM, 1.0)
        with pytest.raises(ChainError):
            sweep(list(reversed(grid(-55, 5))), CHAIN, CAV, ROOM, 1.0)

    def test_seed_swap_keeps_q(self):
        fits = []
        for seed in (1, 2):
            res = sweep(grid(-55), CHAIN, CAV, ROOM, 1.0, "stochastic", seed, 100)
            spec = sweep_spectrum(res, 1.0)
            fits.append(fit(SweepData.from_spectrum(spec)))
        a, b = fits
        assert a.q_loaded != b.q_loaded
        assert abs(a.q_loaded - b.q_loaded) <= 3 * math.hypot(a.q_stderr, b.q_stderr)
        for f in fits:
            assert abs(f.q_loaded - CAV.q_loaded) <= 3 * f.q_stderr
