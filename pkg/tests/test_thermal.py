import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from resregen.cavity import CavityParams, single_photon_power
from resregen.thermal import (ThermalEnvironment, min_measure_time, noise_budget, noise_psd,
                              occupation, per_bin_noise, predicted_snr, required_rbw,
                              total_noise_power)
from resregen.units import HBAR, K_B, angular, photon_energy

F_RES = 9.590e9
ROOM = ThermalEnvironment(305.4)


def cav(q=8800.0, f=F_RES):
    return CavityParams(f, q, 0.89, 0.94)


def quad_psd(c, env, n_lw=None):
    """Integrate noise_psd over omega; over +/- n_lw linewidths, or over (0, inf)."""
    w0 = angular(c.f_res)
    dw = w0 / c.q_loaded
    g = lambda w: noise_psd(w, c, env)
    if n_lw is not None:
        edges = w0 + dw * np.array([-n_lw, -1, 0, 1, n_lw])
    else:
        # split the tail geometrically out to where the Bose factor has died
        tail = w0 * np.geomspace(10, 1e7, 13)
        edges = np.concatenate([[w0 * 1e-9], w0 + dw * np.array([-1, 0, 1]),
                                [max(w0 + 1000 * dw, 2 * w0)], tail])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(g, a, b, limit=400, epsabs=0, epsrel=1e-12)[0]
    if n_lw is None:
        total += integrate.quad(g, 1e-300, edges[0], limit=400, epsabs=0, epsrel=1e-10)[0]
    return total


class TestOccupation:
    def test_room_temperature_value(self):
        x = photon_energy(F_RES) / (K_B * 305.4)
        assert occupation(F_RES, ROOM) == pytest.approx(1 / math.expm1(x), rel=1e-12)
        assert occupation(F_RES, ROOM) == pytest.approx(663, rel=1e-3)

    def test_frozen_out(self):
        assert occupation(F_RES, ThermalEnvironment(1e-6)) == 0.0

    def test_rayleigh_jeans(self):
        x = photon_energy(F_RES) / (K_B * 305.4)
        assert abs(occupation(F_RES, ROOM) * x - 1) < 1e-3

    @given(st.floats(1.0, 1000.0), st.floats(1.0, 1000.0), st.floats(1e8, 1e12))
    def test_monotone(self, t1, t2, f):
        lo, hi = sorted([t1, t2])
        assert occupation(f, ThermalEnvironment(lo)) <= occupation(f, ThermalEnvironment(hi))
        assert occupation(f, ROOM) >= occupation(f * 1.5, ROOM)


class TestNoisePsd:
    def test_on_resonance(self):
        expected = photon_energy(F_RES) * occupation(F_RES, ROOM) / (2 * math.pi)
        assert noise_psd(angular(F_RES), cav(), ROOM) == pytest.approx(expected, rel=1e-12)
        assert noise_psd(angular(F_RES), cav(), ROOM) == pytest.approx(6.71e-22, rel=2e-3)

    def test_far_off_resonance(self):
        assert noise_psd(angular(F_RES * 1.5), cav(), ROOM) < 1e-6 * noise_psd(angular(F_RES), cav(), ROOM)

    def test_half_power(self):
        c = cav()
        w0 = angular(F_RES)
        peak = noise_psd(w0, c, ROOM)
        edge = noise_psd(w0 * (1 + 0.5 / c.q_loaded), c, ROOM)
        assert edge / peak == pytest.approx(0.5, rel=1e-6)


class TestTotalNoise:
    def test_value(self):
        p = total_noise_power(cav(), ROOM)
        assert p == pytest.approx(7.2e-15, rel=5e-3)
        assert 10 * math.log10(p / 1e-3) == pytest.approx(-111.4, abs=0.05)

    def test_full_range_quadrature(self):
        for q in (1e2, 1e3, 1e4, 1e5):
            c = cav(q)
            assert quad_psd(c, ROOM) == pytest.approx(total_noise_power(c, ROOM), rel=2e-3)

    def test_truncated_quadrature_matches_lorentzian_tail(self):
        # a +/-N linewidth window holds (2/pi) atan(2N) of a Lorentzian's area
        frac = 2 / math.pi * math.atan(100)
        for q in (1e3, 1e4, 1e5):
            c = cav(q)
            assert quad_psd(c, ROOM, 50) / total_noise_power(c, ROOM) == pytest.approx(frac, rel=2e-4)

    def test_cold(self):
        assert total_noise_power(cav(), ThermalEnvironment(1e-6)) == 0.0

    def test_rejects_low_q(self):
        with pytest.raises(ValueError):
            total_noise_power(cav(50), ROOM)


class TestPerBin:
    def test_625hz(self):
        p = per_bin_noise(cav(), ROOM, 625.0, 0.0, F_RES)
        assert p == pytest.approx(noise_psd(angular(F_RES), cav(), ROOM) * 2 * math.pi * 625, rel=1e-12)
        assert p == pytest.approx(2.6e-18, rel=0.02)

    def test_linear_in_rbw(self):
        a = per_bin_noise(cav(), ROOM, 625.0, 0.0, F_RES)
        b = per_bin_noise(cav(), ROOM, 1.0, 0.0, F_RES)
        assert a / b == pytest.approx(625.0, rel=1e-12)

    def test_signal_bandwidth_wins(self):
        assert per_bin_noise(cav(), ROOM, 10.0, 100.0, F_RES) == per_bin_noise(cav(), ROOM, 100.0, 0.0, F_RES)

    @given(st.floats(1e-3, 1e12))
    def test_clamped(self, rbw):
        c = cav()
        assert per_bin_noise(c, ROOM, rbw, 0.0, F_RES) <= total_noise_power(c, ROOM)

    def test_errors(self):
        with pytest.raises(ValueError):
            per_bin_noise(cav(), ROOM, 0.0, 0.0, F_RES)


class TestRequiredRbw:
    def test_anchor(self):
        rbw = required_rbw(1e9, ThermalEnvironment(300), 1e5, 1.0)
        assert abs(rbw / 10.0 - 1) <= 0.1

    def test_snr_scaling(self):
        env = ThermalEnvironment(300)
        assert required_rbw(1e9, env, 1e5, 2.0) == pytest.approx(required_rbw(1e9, env, 1e5, 1.0) / 2)

    def test_table1_cavity(self):
        rbw = required_rbw(F_RES, ROOM, 8800, 1.0)
        assert rbw == pytest.approx(HBAR * angular(F_RES) ** 2 / (K_B * 305.4 * 8800), rel=1e-12)
        assert rbw == pytest.approx(1.032e4, rel=1e-3)

    def test_consistency_with_per_bin_noise(self):
        for f, t, q in [(1e9, 300.0, 1e5), (F_RES, 305.4, 8800.0), (5e9, 77.0, 2e4)]:
            env = ThermalEnvironment(t)
            c = CavityParams(f, q, 1.0, 1.0)
            rbw = required_rbw(f, env, q, 1.0)
            assert per_bin_noise(c, env, rbw, 0.0, f) == pytest.approx(single_photon_power(f, q), rel=0.01)

    def test_rejects_quantum_regime(self):
        with pytest.raises(ValueError):
            required_rbw(1e13, ThermalEnvironment(300), 1e5, 1.0)
        with pytest.raises(ValueError):
            required_rbw(1e9, ThermalEnvironment(300), 1e5, 0.0)


@pytest.mark.parametrize("rbw, t", [(1.0, 1.0), (625.0, 1.6e-3), (10.0, 0.1)])
def test_min_measure_time(rbw, t):
    assert min_measure_time(rbw) == pytest.approx(t)


def test_predicted_snr_is_signal_over_bin_noise():
    c = cav()
    p = 1e-18
    assert predicted_snr(p, c, ROOM, 1.0) == pytest.approx(p / per_bin_noise(c, ROOM, 1.0, 0.0, F_RES))


def test_noise_budget():
    b = noise_budget(cav(), ROOM, 625.0)
    assert b.per_bin_power <= b.total_power
    assert b.bin_width == 625.0
    assert b.occupation == pytest.approx(663, rel=1e-3)
