"""Thermal emission of the cavity and the resolution bandwidth it forces on us."""
from dataclasses import dataclass

import numpy as np

from .cavity import lorentzian_factor, single_photon_power
from .units import HBAR, K_B, TWO_PI, angular

MIN_Q_FOR_CLOSED_FORM = 100.0
MAX_RJ_RATIO = 0.1


@dataclass(frozen=True)
class ThermalEnvironment:
    temp: float

    def __post_init__(self):
        if not self.temp > 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class NoiseBudget:
    psd_peak: float
    total_power: float
    per_bin_power: float
    bin_width: float
    occupation: float


def occupation(f, env):
    """Bose-Einstein mean photon number of a mode at ``f``."""
    x = HBAR * angular(np.asarray(f, dtype=float)) / (K_B * env.temp)
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(x)
    return n if np.ndim(n) else float(n)


def noise_psd(omega, c, env):
    """Thermal power spectral density leaving the cavity, in W per (rad/s)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    x = HBAR * omega / (K_B * env.temp)
    with np.errstate(over="ignore"):
        mean_energy = HBAR * omega / np.expm1(x)
    psd = mean_energy / TWO_PI * lorentzian_factor(omega, c.f_res, c.q_loaded)
    return psd if psd.ndim else float(psd)


def noise_psd_hz(f, c, env):
    """Same density expressed per hertz (W/Hz)."""
    return TWO_PI * noise_psd(angular(np.asarray(f, dtype=float)), c, env)


def total_noise_power(c, env):
    """Closed-form integral of :func:`noise_psd` over all frequencies (high-Q only)."""
    if c.q_loaded < MIN_Q_FOR_CLOSED_FORM:
        raise ValueError(
            f"closed form needs Q >> 1 (Q >= {MIN_Q_FOR_CLOSED_FORM:g}), got {c.q_loaded:g}"
        )
    return single_photon_power(c.f_res, c.q_loaded) * 0.25 * occupation(c.f_res, env)


def per_bin_noise(c, env, rbw, signal_bw, at):
    """Thermal power falling in one analysis bin centred on ``at``.

    The bin is the wider of the resolution and signal bandwidths (both Hz).
    The result never exceeds the total emitted power.
    """
    if rbw <= 0:
        raise ValueError("rbw must be positive")
    if signal_bw < 0:
        raise ValueError("signal bandwidth must be >= 0")
    bw = max(rbw, signal_bw)
    p = noise_psd(angular(at), c, env) * TWO_PI * bw
    if c.q_loaded >= MIN_Q_FOR_CLOSED_FORM:
        p = min(p, total_noise_power(c, env))
    return p


def required_rbw(f_res, env, q, snr):
    """Widest resolution bandwidth (Hz) at which one stored photon reaches ``snr``.

    Valid in the Rayleigh-Jeans limit only.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    ratio = HBAR * angular(f_res) / (K_B * env.temp)
    if ratio > MAX_RJ_RATIO:
        raise ValueError(
            f"hbar*omega/kT = {ratio:.3g} > {MAX_RJ_RATIO}; Rayleigh-Jeans form does not apply"
        )
    return single_photon_power(f_res, q) / (K_B * env.temp) / snr


def min_measure_time(rbw):
    if rbw <= 0:
        raise ValueError("rbw must be positive")
    return 1.0 / rbw


def predicted_snr(p_signal, c, env, rbw, at=None):
    """Signal over thermal noise in one bin, the figure of merit behind ``required_rbw``."""
    at = c.f_res if at is None else at
    return p_signal / per_bin_noise(c, env, rbw, 0.0, at)


def noise_budget(c, env, rbw, signal_bw=0.0):
    return NoiseBudget(
        psd_peak=noise_psd(angular(c.f_res), c, env),
        total_power=total_noise_power(c, env),
        per_bin_power=per_bin_noise(c, env, rbw, signal_bw, c.f_res),
        bin_width=max(rbw, signal_bw),
        occupation=occupation(c.f_res, env),
    )
