"""FFT spectrum analyzer: averaged periodogram at a requested resolution bandwidth."""
from dataclasses import dataclass, field
import io

import numpy as np
from scipy.signal import get_window

from .units import dbm_to_watts, watts_to_dbm

WINDOWS = ("rectangular", "hann")
DETECTORS = ("power-mean",)


class AnalyzerError(ValueError):
    pass


class FrameTooShortError(AnalyzerError):
    pass


@dataclass(frozen=True)
class AnalyzerSettings:
    rbw: float
    averages: int = 1
    window: str = "hann"
    detector: str = "power-mean"

    def __post_init__(self):
        if not self.rbw > 0:
            raise AnalyzerError("rbw must be positive")
        if int(self.averages) != self.averages or self.averages < 1:
            raise AnalyzerError("averages must be an integer >= 1")
        if self.window not in WINDOWS:
            raise AnalyzerError(f"unknown window {self.window!r}; expected one of {WINDOWS}")
        if self.detector not in DETECTORS:
            raise AnalyzerError(f"unknown detector {self.detector!r}")


@dataclass(frozen=True)
class Spectrum:
    """Power per bin (watts) on an ordered frequency grid (Hz).

    ``enbw`` is the equivalent noise bandwidth of the analysis window in bins;
    noise read off a bin is ``enbw`` times the power in one RBW.
    """

    freqs: np.ndarray
    powers: np.ndarray
    rbw: float
    averages_used: int = 1
    enbw: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        p = np.asarray(self.powers, dtype=float)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("freqs and powers must be 1-D arrays of equal length")
        if np.any(p < 0):
            raise ValueError("bin powers must be non-negative")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "powers", p)

    def __len__(self):
        return len(self.freqs)

    @property
    def powers_dbm(self):
        return watts_to_dbm(self.powers)

    def shifted(self, df):
        """Same spectrum with every frequency offset by ``df`` (e.g. baseband to RF)."""
        return Spectrum(self.freqs + df, self.powers, self.rbw, self.averages_used, self.enbw,
                        dict(self.meta))

    def scaled(self, factor):
        return Spectrum(self.freqs, self.powers * factor, self.rbw, self.averages_used,
                        self.enbw, dict(self.meta))

    def select(self, f_lo, f_hi):
        m = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return Spectrum(self.freqs[m], self.powers[m], self.rbw, self.averages_used,
                        self.enbw, dict(self.meta))

    def to_csv(self, path=None):
        """Write ``freq_hz,power_dbm`` rows; returns the text when ``path`` is None."""
        buf = io.StringIO()
        buf.write("freq_hz,power_dbm\n")
        for f, p in zip(self.freqs, self.powers_dbm):
            buf.write(f"{f:.15g},{p:.12g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, rbw=None):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        if not lines or lines[0].replace(" ", "") != "freq_hz,power_dbm":
            raise ValueError(f"{path}: expected header 'freq_hz,power_dbm'")
        rows = []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        freqs, dbm = arr[:, 0], arr[:, 1]
        if rbw is None:
            rbw = float(np.median(np.diff(freqs))) if len(freqs) > 1 else 1.0
        return cls(freqs, dbm_to_watts(dbm), rbw)


def window_enbw(window, n):
    w = _window(window, n)
    return n * np.sum(w * w) / np.sum(w) ** 2


def _window(name, n):
    if name == "rectangular":
        return np.ones(n)
    return get_window("hann", n, fftbins=True)


def segment_length(sample_rate, rbw):
    ratio = sample_rate / rbw
    n = int(round(ratio))
    if n < 2 or abs(ratio - n) > 1e-6 * ratio:
        raise AnalyzerError(
            f"rbw {rbw:g} Hz does not divide sample rate {sample_rate:g} Hz into whole segments"
        )
    return n


def analyze(frame, s):
    """Averaged, window-calibrated power spectrum of a baseband frame.

    Real frames give a one-sided spectrum from DC to Nyquist; complex (zoomed)
    frames give a two-sided spectrum around ``frame.center_freq``. A tone at a
    bin centre reads its true power for either window.
    """
    x = np.asarray(frame.samples)
    fs = frame.sample_rate
    nseg = segment_length(fs, s.rbw)
    if nseg > len(x):
        raise AnalyzerError(
            f"rbw {s.rbw:g} Hz needs {nseg} samples per segment but the frame has {len(x)}"
        )
    if len(x) // nseg < s.averages:
        raise FrameTooShortError(
            f"frame holds {len(x) // nseg} segments of {nseg} samples, {s.averages} requested"
        )
    segs = x[: s.averages * nseg].reshape(s.averages, nseg)
    w = _window(s.window, nseg)
    norm = np.sum(w) ** 2
    enbw = nseg * np.sum(w * w) / norm

    if np.iscomplexobj(segs):
        spec = np.fft.fft(segs * w, axis=1)
        p = np.mean(np.abs(spec) ** 2, axis=0) / norm
        p = np.fft.fftshift(p)
        freqs = frame.center_freq + np.fft.fftshift(np.fft.fftfreq(nseg, 1.0 / fs))
    else:
        spec = np.fft.rfft(segs * w, axis=1)
        p = np.mean(np.abs(spec) ** 2, axis=0) / norm
        # one-sided: fold negative frequencies onto positive ones
        if nseg % 2 == 0:
            p[1:-1] *= 2.0
        else:
            p[1:] *= 2.0
        freqs = np.fft.rfftfreq(nseg, 1.0 / fs)
    return Spectrum(freqs, p, fs / nseg, s.averages, float(enbw))


def band_power(spec, f_lo, f_hi):
    """Total power between ``f_lo`` and ``f_hi`` inclusive.

    Bin sums are divided by the window ENBW so broadband noise is not
    overcounted; with a rectangular window this is the plain bin sum.
    """
    if not f_lo < f_hi:
        raise ValueError("need f_lo < f_hi")
    half = 0.5 * spec.rbw
    if f_lo < spec.freqs[0] - half or f_hi > spec.freqs[-1] + half:
        raise ValueError(
            f"[{f_lo:g}, {f_hi:g}] Hz lies outside the spectrum span "
            f"[{spec.freqs[0]:g}, {spec.freqs[-1]:g}] Hz"
        )
    m = (spec.freqs >= f_lo) & (spec.freqs <= f_hi)
    return float(np.sum(spec.powers[m]) / spec.enbw)


def bin_at(spec, f):
    """Index of the bin nearest ``f``."""
    return int(np.argmin(np.abs(spec.freqs - f)))
