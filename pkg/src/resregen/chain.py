"""End-to-end model of the measurement apparatus.

generator -> attenuators -> cavity -> LNA -> mixer (LO) -> low-pass -> gain -> FFT analyzer

Two modes are offered: an analytic power budget per sweep point, and a
stochastic time-series realisation that is pushed through
:func:`resregen.analyzer.analyze` exactly as a recorded trace would be.
Input powers quoted in configs are at the cavity input; attenuation sits
upstream of that reference plane.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .analyzer import AnalyzerSettings, Spectrum, analyze, bin_at
from .cavity import coupled_transmission
from .thermal import noise_psd_hz, per_bin_noise
from .units import K_B, db_to_ratio


class ChainError(ValueError):
    pass


class AliasError(ChainError):
    pass


class SweepError(ChainError):
    """Raised after a sweep when one or more points failed.

    ``failures`` is a list of ``(point_index, exception)``.
    """

    def __init__(self, failures):
        self.failures = failures
        lines = [f"point {i}: {exc}" for i, exc in failures]
        super().__init__(f"{len(failures)} sweep point(s) failed:\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class ChainConfig:
    attenuation_db: float = 124.0
    lna_gain_db: float = 30.0
    lna_noise_temp: float = 100.0
    lo_freq: float = 9.584e9
    lpf_cutoff: float = 10e6
    sample_rate: float = 25e6
    post_gain_db: float = 30.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ChainError(f"{name} must be finite, got {value}")
        if self.attenuation_db < 0:
            raise ChainError("attenuation must be >= 0 dB")
        if self.lna_noise_temp < 0:
            raise ChainError("LNA noise temperature must be >= 0 K")
        if self.lo_freq <= 0 or self.lpf_cutoff <= 0:
            raise ChainError("LO frequency and low-pass cutoff must be positive")
        if not self.sample_rate > 2.0 * self.lpf_cutoff:
            raise ChainError(
                f"sample rate {self.sample_rate:g} Hz must exceed twice the "
                f"low-pass cutoff {self.lpf_cutoff:g} Hz"
            )

    @property
    def gain_after_cavity(self):
        """Power gain from cavity output to analyzer input (ideal 0 dB mixer)."""
        return db_to_ratio(self.lna_gain_db + self.post_gain_db)

    def check_band(self, f_max):
        if not f_max - self.lo_freq < self.lpf_cutoff:
            raise ChainError(
                f"sweep edge {f_max:g} Hz lands {f_max - self.lo_freq:g} Hz from the LO, "
                f"beyond the {self.lpf_cutoff:g} Hz low-pass cutoff"
            )


@dataclass(frozen=True)
class ScenePoint:
    gen_freq: float
    gen_power: float

    def __post_init__(self):
        if not self.gen_freq > 0:
            raise ChainError("generator frequency must be positive")
        if not self.gen_power >= 0:
            raise ChainError("generator power must be >= 0 W")


@dataclass(frozen=True)
class BasebandFrame:
    """Samples as seen by the analyzer input, scaled so mean square is watts.

    Real frames span DC to ``sample_rate/2``. Complex frames are zoomed:
    ``center_freq`` is the baseband frequency at zero offset and
    ``sample_rate`` is the zoom span.
    """

    samples: np.ndarray
    sample_rate: float
    center_freq: float = 0.0
    seed: object = None

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    @property
    def is_complex(self):
        return np.iscomplexobj(self.samples)


@dataclass(frozen=True)
class AnalyticPoint:
    signal_bin_power: float
    noise_bin_power: float
    baseband_freq: float

    @property
    def total(self):
        return self.signal_bin_power + self.noise_bin_power


def gen_power_for_cavity_input(p_cavity_w, chain):
    """Generator setting that puts ``p_cavity_w`` at the cavity input."""
    return p_cavity_w * db_to_ratio(chain.attenuation_db)


def _baseband(pt, chain):
    f_bb = pt.gen_freq - chain.lo_freq
    if abs(f_bb) >= chain.lpf_cutoff:
        raise AliasError(
            f"{pt.gen_freq:g} Hz mixes to {f_bb:g} Hz, outside the "
            f"{chain.lpf_cutoff:g} Hz low-pass passband"
        )
    return f_bb


def input_noise_psd(f_rf, chain, cav, env):
    """Noise density (W/Hz) referred to the LNA input, as a function of RF frequency."""
    f_rf = np.asarray(f_rf, dtype=float)
    thermal = noise_psd_hz(f_rf, cav, env) / db_to_ratio(cav.excess_loss_db)
    return thermal + K_B * chain.lna_noise_temp


def analytic_output(pt, chain, cav, env, rbw):
    """Power budget of one sweep point as read in a single analyzer bin.

    Returns tone power, noise power in one RBW at the tone, and the baseband
    frequency of the tone. Both powers are referred to the analyzer input.
    """
    f_bb = _baseband(pt, chain)
    g = chain.gain_after_cavity
    p_inc = pt.gen_power / db_to_ratio(chain.attenuation_db)
    signal = coupled_transmission(cav, pt.gen_freq, p_inc) * g
    thermal = per_bin_noise(cav, env, rbw, 0.0, pt.gen_freq) / db_to_ratio(cav.excess_loss_db)
    noise = (thermal + K_B * chain.lna_noise_temp * rbw) * g
    return AnalyticPoint(float(signal), float(noise), f_bb)


def baseband_noise_power(chain, cav, env):
    """Expected mean-square of a tone-free full-band frame (upper sideband only)."""
    g = chain.gain_after_cavity
    f0 = cav.f_res - chain.lo_freq
    pts = [f0] if 0.0 < f0 < chain.lpf_cutoff else None
    thermal, _ = integrate.quad(
        lambda f: noise_psd_hz(chain.lo_freq + f, cav, env), 0.0, chain.lpf_cutoff,
        points=pts, limit=500, epsabs=0.0, epsrel=1e-10,
    )
    thermal /= db_to_ratio(cav.excess_loss_db)
    return g * (thermal + K_B * chain.lna_noise_temp * chain.lpf_cutoff)


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ChainError(f"non-finite parameter {v!r}")


def synthesize(pt, chain, cav, env, duration, seed, span=None):
    """Random baseband realisation of one sweep point.

    Noise (cavity thermal plus white LNA noise) is drawn as independent
    complex-Gaussian Fourier amplitudes whose variance follows the noise
    density, then inverse transformed; the low-pass filter is a brick wall
    applied in the same domain. The coherent tone carries the power from
    :func:`analytic_output` with a random phase.

    With ``span=None`` a real frame at ``chain.sample_rate`` is produced.
    With ``span`` set (Hz) the analyzer's zoom mode is emulated: a complex
    frame sampled at ``span`` and centred on the tone.
    """
    _check_finite(pt.gen_freq, pt.gen_power, duration,
                  cav.f_res, cav.q_loaded, cav.beta1, cav.beta2, env.temp)
    if duration <= 0:
        raise ChainError("duration must be positive")
    f_bb = _baseband(pt, chain)
    sig = analytic_output(pt, chain, cav, env, 1.0).signal_bin_power
    g = chain.gain_after_cavity
    rng = np.random.default_rng(seed)

    if span is None:
        fs = chain.sample_rate
        n = int(round(duration * fs))
        if n < 2:
            raise ChainError("frame shorter than two samples")
        df = fs / n
        f = np.fft.rfftfreq(n, 1.0 / fs)
        psd = np.zeros_like(f)
        band = (f > 0) & (f < chain.lpf_cutoff)
        psd[band] = g * input_noise_psd(chain.lo_freq + f[band], chain, cav, env)
        scale = n * np.sqrt(psd * df) / 2.0
        spec = (rng.standard_normal(len(f)) + 1j * rng.standard_normal(len(f))) * scale
        x = np.fft.irfft(spec, n=n)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        if sig > 0:
            t = np.arange(n) / fs
            x += math.sqrt(2.0 * sig) * np.cos(2.0 * math.pi * abs(f_bb) * t + phi)
        return BasebandFrame(x, fs, 0.0, seed)

    if not span > 0:
        raise ChainError("zoom span must be positive")
    n = int(round(duration * span))
    if n < 2:
        raise ChainError("frame shorter than two samples")
    df = span / n
    off = np.fft.fftfreq(n, 1.0 / span)
    fb = f_bb + off
    psd = np.where(np.abs(fb) < chain.lpf_cutoff,
                   g * input_noise_psd(chain.lo_freq + fb, chain, cav, env), 0.0)
    scale = n * np.sqrt(psd * df / 2.0)
    spec = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale
    z = np.fft.ifft(spec)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    if sig > 0:
        z += math.sqrt(sig) * np.exp(1j * phi)
    return BasebandFrame(z, span, f_bb, seed)


def point_seed(master_seed, index, stream=()):
    """Seed for sweep point ``index``; independent of evaluation order.

    ``stream`` namespaces separate sweeps (e.g. table rows) under one master seed.
    """
    key = tuple(int(k) for k in stream) + (int(index),)
    return np.random.SeedSequence(int(master_seed), spawn_key=key)


@dataclass(frozen=True)
class SweepPoint:
    gen_freq: float
    power: float
    analytic: AnalyticPoint


def measure_point(pt, chain, cav, env, rbw, mode="analytic", seed=None,
                  averages=1, span_bins=16, window="rectangular"):
    """Bin power an analyzer tuned to the tone would report for one point."""
    ap = analytic_output(pt, chain, cav, env, rbw)
    if mode == "analytic":
        return SweepPoint(pt.gen_freq, ap.total, ap)
    if mode != "stochastic":
        raise ChainError(f"unknown mode {mode!r}")
    span = span_bins * rbw
    frame = synthesize(pt, chain, cav, env, averages / rbw, seed, span=span)
    spec = analyze(frame, AnalyzerSettings(rbw, averages, window))
    return SweepPoint(pt.gen_freq, float(spec.powers[bin_at(spec, ap.baseband_freq)]), ap)


def sweep(points, chain, cav, env, rbw, mode="analytic", master_seed=0,
          averages=1, span_bins=16, window="rectangular", workers=1, stream=()):
    """Measure every point; results are in input order and independent of ``workers``."""
    points = list(points)
    if not points:
        raise ChainError("sweep needs at least one point")
    freqs = np.array([p.gen_freq for p in points])
    if np.any(np.diff(freqs) <= 0):
        raise ChainError("sweep frequencies must be strictly increasing")

    def run(i):
        try:
            return measure_point(points[i], chain, cav, env, rbw, mode,
                                 point_seed(master_seed, i, stream), averages, span_bins, window)
        except Exception as exc:  # collected and re-raised with indices below
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(points))))
    else:
        results = [run(i) for i in range(len(points))]
    failures = [(i, r) for i, r in enumerate(results) if isinstance(r, Exception)]
    if failures:
        raise SweepError(failures)
    return results


def sweep_spectrum(results, rbw, averages=1):
    return Spectrum([r.gen_freq for r in results], [r.power for r in results], rbw,
                    averages)
