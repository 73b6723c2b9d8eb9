"""Physical constants and the handful of unit conversions used throughout.

Everything inside the package is SI (watts, hertz, joules, kelvin). dBm only
appears at input/output boundaries.
"""
import math

import numpy as np
from scipy import constants as _const

HBAR = _const.hbar
K_B = _const.k
C = _const.c
H = _const.h
TWO_PI = 2.0 * math.pi


def dbm_to_watts(p_dbm):
    """Convert dBm to watts. Works elementwise on arrays."""
    return 1e-3 * np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def watts_to_dbm(p_w):
    """Convert watts to dBm. Zero power maps to -inf; negative power is an error."""
    p = np.asarray(p_w, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be non-negative")
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p / 1e-3)
    return out if out.ndim else float(out)


def db_to_ratio(db):
    return 10.0 ** (db / 10.0)


def angular(f_hz):
    """Angular frequency in rad/s."""
    return TWO_PI * f_hz


def wavelength(f_hz):
    return C / f_hz


def frequency_from_wavelength(lam_m):
    return C / lam_m


def photon_energy(f_hz):
    """Energy quantum hbar*omega of a photon at frequency ``f_hz``."""
    if np.any(np.asarray(f_hz) < 0):
        raise ValueError("frequency must be non-negative")
    return HBAR * angular(f_hz)


_SUFFIXES = {
    "thz": 1e12, "ghz": 1e9, "mhz": 1e6, "khz": 1e3, "hz": 1.0,
    "k": 1.0, "dbm": 1.0, "db": 1.0, "um": 1e-6, "nm": 1e-9, "mm": 1e-3, "m": 1.0,
}


def parse_quantity(text):
    """Parse strings such as ``"1GHz"``, ``"300K"``, ``"9.59e9"`` into SI floats.

    The unit suffix is case-insensitive and optional.
    """
    s = text.strip().lower().replace(" ", "")
    for suffix in sorted(_SUFFIXES, key=len, reverse=True):
        if s.endswith(suffix) and len(s) > len(suffix):
            head = s[: -len(suffix)]
            # "1e5m" style ambiguity is not worth supporting: only strip when the
            # remainder parses cleanly.
            try:
                return float(head) * _SUFFIXES[suffix]
            except ValueError:
                continue
    return float(s)
