"""Single-resonance cavity physics.

Covers the ideal multi-pass (Fabry-Perot) interference sum, the Lorentzian
transmission line shape, and the two-port coupled cavity used for the
microwave measurement: transmitted power, stored energy, photon number.
"""
from dataclasses import dataclass
import math

import numpy as np

from .units import C, HBAR, TWO_PI, angular, db_to_ratio, photon_energy


@dataclass(frozen=True)
class IdealEtalon:
    """Two-mirror etalon with real per-pass reflection amplitude ``r``."""

    r: float
    length: float
    n: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"reflection amplitude must be in (0, 1), got {self.r}")
        if self.length <= 0:
            raise ValueError("mirror spacing must be positive")
        if self.n < 1:
            raise ValueError("refractive index must be >= 1")
        if abs(self.theta) >= math.pi / 2:
            raise ValueError("incidence angle must satisfy |theta| < pi/2")

    @property
    def t(self):
        """Single-pass transmission amplitude."""
        return 1.0 - self.r

    @property
    def n_pass(self):
        return 1.0 / (1.0 - self.r)

    @property
    def finesse(self):
        return math.pi * self.n_pass

    def phase(self, lambda_vac):
        """Round-trip phase accumulated per pass."""
        if np.any(np.asarray(lambda_vac) <= 0):
            raise ValueError("wavelength must be positive")
        return TWO_PI / lambda_vac * 2.0 * self.n * self.length * math.cos(self.theta)


@dataclass(frozen=True)
class CavityParams:
    """Two-port resonator as seen by the measurement.

    ``q_loaded`` includes the port losses; the unloaded Q is derived from it.
    ``excess_loss_db`` models line loss after the cavity and reduces output
    power only.
    """

    f_res: float
    q_loaded: float
    beta1: float
    beta2: float
    excess_loss_db: float = 0.0

    def __post_init__(self):
        if not self.f_res > 0:
            raise ValueError("resonance frequency must be positive")
        if not self.q_loaded > 0:
            raise ValueError("loaded Q must be positive")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("port couplings must be non-negative")
        if self.excess_loss_db < 0:
            raise ValueError("excess loss must be >= 0 dB")

    @property
    def q0(self):
        return self.q_loaded * (1.0 + self.beta1 + self.beta2)

    @property
    def insertion_factor(self):
        """On-resonance transmitted/incident power ratio, before excess loss."""
        return 4.0 * self.beta1 * self.beta2 / (1.0 + self.beta1 + self.beta2) ** 2

    @property
    def linewidth(self):
        return linewidth(self.q_loaded, self.f_res)


def phase_amplitude(r, delta, k_max=None):
    """Transmitted amplitude for given reflection amplitude and per-pass phase.

    With ``k_max=None`` the geometric series is summed in closed form,
    otherwise the first ``k_max + 1`` passes are added explicitly.
    """
    if r >= 1:
        raise ValueError("series diverges for reflection amplitude >= 1")
    t = 1.0 - r
    delta = np.asarray(delta, dtype=float)
    if k_max is None:
        return t / (1.0 - r * np.exp(1j * delta))
    k = np.arange(int(k_max) + 1)
    # pairwise summation keeps round-off at the 1e-13 level for 1e6 terms
    terms = np.power(r, k) * np.exp(1j * np.multiply.outer(delta, k))
    return t * terms.sum(axis=-1)


def multipass_amplitude(e, lambda_vac, k_max=None):
    return phase_amplitude(e.r, e.phase(lambda_vac), k_max)


def multipass_transmission(e, lambda_vac):
    """Exact transmission probability ``|T_trans|**2`` of the etalon."""
    return np.abs(multipass_amplitude(e, lambda_vac)) ** 2


def etalon_q(e, f_hz):
    """Q of an etalon mode near ``f_hz`` in the high-finesse limit."""
    return angular(f_hz) * e.n * e.length / (C * (1.0 - e.r))


def lorentzian_factor(omega, f_res, q):
    """Normalised Lorentzian ``1 / (1 + 4 q^2 ((omega - omega_res)/omega_res)^2)``."""
    if np.any(np.asarray(q) <= 0):
        raise ValueError("Q must be positive")
    w0 = angular(f_res)
    x = (np.asarray(omega, dtype=float) - w0) / w0
    return 1.0 / (1.0 + 4.0 * q * q * x * x)


def linewidth(q, f_res):
    """Full width at half maximum, in Hz."""
    if q <= 0:
        raise ValueError("Q must be positive")
    return f_res / q


def coupled_transmission(c, f, p_inc):
    """Power leaving the output port for incident power ``p_inc`` at ``f``."""
    p_inc = np.asarray(p_inc, dtype=float)
    if np.any(p_inc < 0):
        raise ValueError("incident power must be non-negative")
    lor = lorentzian_factor(angular(f), c.f_res, c.q_loaded)
    out = p_inc * c.insertion_factor * lor / db_to_ratio(c.excess_loss_db)
    return out if out.ndim else float(out)


def stored_energy(c, f, p_inc):
    p_inc = np.asarray(p_inc, dtype=float)
    if np.any(p_inc < 0):
        raise ValueError("incident power must be non-negative")
    omega = angular(np.asarray(f, dtype=float))
    coupling = 4.0 * c.beta1 / (1.0 + c.beta1 + c.beta2) ** 2
    e = p_inc * (c.q_loaded / omega) * coupling * lorentzian_factor(omega, c.f_res, c.q_loaded)
    return e if np.ndim(e) else float(e)


def stored_photons(c, f, p_inc):
    """Return ``(energy_J, mean_photon_number)`` inside the cavity.

    The photon number is a time-averaged occupation and is not rounded.
    """
    e = stored_energy(c, f, p_inc)
    n = e / photon_energy(np.asarray(f, dtype=float))
    return e, (n if np.ndim(n) else float(n))


def single_photon_power(f, q):
    """Output power of an ideal cavity holding one photon, ``hbar omega^2 / Q``."""
    if q <= 0:
        raise ValueError("Q must be positive")
    return HBAR * angular(f) ** 2 / q


def optical_single_photon_power(lam, finesse, length):
    """Single-photon output power of a Fabry-Perot with the given finesse and length.

    Uses ``N_pass = finesse / pi`` so that ``Q = N_pass * omega * length / c``.
    """
    if lam <= 0 or finesse <= 0 or length <= 0:
        raise ValueError("wavelength, finesse and length must be positive")
    f = C / lam
    q = (finesse / math.pi) * angular(f) * length / C
    return single_photon_power(f, q)
