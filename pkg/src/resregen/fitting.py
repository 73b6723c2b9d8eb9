"""Lorentzian fits of resonance sweeps and noise spectra.

Model, in linear power units::

    P(f) = baseline + peak / (1 + 4 Q^2 ((f - f_c) / f_c)^2)

Minimised with a Levenberg-Marquardt damped Gauss-Newton iteration.
"""
from dataclasses import dataclass, field
import itertools
import math
import warnings

import numpy as np

from .units import watts_to_dbm

SOURCES = ("driven", "noise-only")
PARAMS = ("peak_power", "f_center", "q_loaded", "baseline")


class FitError(ValueError):
    pass


class NoPeakError(FitError):
    pass


class EdgePeakWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SweepData:
    freqs: np.ndarray
    powers: np.ndarray
    source: str = "driven"

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        p = np.asarray(self.powers, dtype=float)
        if f.ndim != 1 or f.shape != p.shape:
            raise FitError("freqs and powers must be 1-D and equally long")
        if len(f) < 5:
            raise FitError(f"need at least 5 points, got {len(f)}")
        if np.any(np.diff(f) <= 0):
            raise FitError("frequencies must be strictly increasing")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
            raise FitError("non-finite data")
        if np.any(p < 0):
            raise FitError("powers must be non-negative")
        if self.source not in SOURCES:
            raise FitError(f"source must be one of {SOURCES}")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_spectrum(cls, spec, source="driven"):
        return cls(spec.freqs, spec.powers, source)


@dataclass(frozen=True)
class FitResult:
    peak_power: float
    f_center: float
    q_loaded: float
    baseline: float
    residual_rms: float = 0.0
    stderr: dict = None
    converged: bool = False
    iterations: int = 0
    cost_history: tuple = field(default=(), repr=False)
    notes: tuple = ()

    @property
    def q_stderr(self):
        return None if self.stderr is None else self.stderr["q_loaded"]

    @property
    def linewidth(self):
        return self.f_center / self.q_loaded

    def model(self, f):
        return lorentzian(f, self.peak_power, self.f_center, self.q_loaded, self.baseline)

    def report(self):
        """Plain-text ``key=value`` report."""
        def fmt(x):
            return "nan" if x is None else f"{x:.10g}"
        se = self.stderr or {}
        lines = [
            f"q_loaded={fmt(self.q_loaded)}",
            f"q_stderr={fmt(se.get('q_loaded'))}",
            f"f_center_hz={fmt(self.f_center)}",
            f"f_center_stderr_hz={fmt(se.get('f_center'))}",
            f"peak_dbm={fmt(watts_to_dbm(max(self.peak_power, 0.0)))}",
            f"baseline_dbm={fmt(watts_to_dbm(max(self.baseline, 0.0)))}",
            f"residual_rms_w={fmt(self.residual_rms)}",
            f"iterations={self.iterations}",
            f"converged={'true' if self.converged else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def lorentzian(f, peak, f_c, q, baseline=0.0):
    x = (np.asarray(f, dtype=float) - f_c) / f_c
    return baseline + peak / (1.0 + 4.0 * q * q * x * x)


def _smooth(p):
    k = len(p) // 100
    if k < 3:
        return p
    kernel = np.ones(k) / k
    padded = np.concatenate([np.full(k, p[0]), p, np.full(k, p[-1])])
    return np.convolve(padded, kernel, mode="same")[k:-k]


def _crossing(f, p, i0, level, step):
    """Frequency where ``p`` first drops below ``level`` walking from ``i0``."""
    i = i0
    while 0 <= i + step < len(p):
        j = i + step
        if p[j] <= level:
            # linear interpolation between i and j
            t = (p[i] - level) / (p[i] - p[j]) if p[i] != p[j] else 0.0
            return f[i] + t * (f[j] - f[i])
        i = j
    return None


def initial_guess(d):
    """Seed values from the data: peak, centre, half-power width, floor.

    Long noisy spectra are lightly smoothed first. A peak at the edge of
    the data still yields a guess but emits :class:`EdgePeakWarning`.
    """
    f, p = d.freqs, d.powers
    if np.ptp(p) <= 1e-12 * max(np.max(np.abs(p)), 1e-300):
        raise NoPeakError("data are flat; no resonance to fit")
    ps = _smooth(p)
    i0 = int(np.argmax(ps))
    quart = np.sort(ps)[: max(1, len(ps) // 4)]
    baseline = float(np.median(quart))
    top = float(ps[i0])
    level = baseline + 0.5 * (top - baseline)
    notes = []
    if i0 == 0 or i0 == len(p) - 1:
        notes.append("edge-peak")
        warnings.warn("maximum sits at the edge of the sweep", EdgePeakWarning, stacklevel=2)
    lo = _crossing(f, ps, i0, level, -1)
    hi = _crossing(f, ps, i0, level, +1)
    fc = float(f[i0])
    if lo is not None and hi is not None:
        width = hi - lo
    elif lo is not None:
        width = 2.0 * (fc - lo)
    elif hi is not None:
        width = 2.0 * (hi - fc)
    else:
        notes.append("no-half-power-crossing")
        width = float(f[-1] - f[0])
    if width <= 0:
        width = float(np.min(np.diff(f)))
    return FitResult(
        peak_power=top - baseline, f_center=fc, q_loaded=fc / width, baseline=baseline,
        notes=tuple(notes),
    )


def _jacobian(x, theta, f0, w, q0):
    a, u, q, b = theta
    d = x - u
    r = w / (f0 + w * u)
    qq = q0 * q
    z = 4.0 * qq * qq * r * r * d * d
    lor = 1.0 / (1.0 + z)
    l2 = lor * lor
    jac = np.empty((len(x), 4))
    jac[:, 0] = lor
    jac[:, 1] = 8.0 * a * qq * qq * r * r * d * (r * d + 1.0) * l2
    jac[:, 2] = -a * l2 * 8.0 * qq * q0 * r * r * d * d
    jac[:, 3] = 1.0
    return b + a * lor, jac


def fit_lorentzian(d, guess, max_iter=200, xtol=1e-9):
    """Least-squares Lorentzian fit starting from ``guess``.

    ``converged`` is set once an iteration moves the (internally rescaled)
    parameters by less than ``xtol`` relative. Standard errors come from
    the residual-scaled inverse curvature ``s^2 (J^T J)^-1`` and are left out
    when the fit did not converge or the curvature is singular.
    """
    vals = [guess.peak_power, guess.f_center, guess.q_loaded, guess.baseline]
    if not all(np.isfinite(v) for v in vals):
        raise FitError("initial guess must be finite")
    if guess.q_loaded <= 0 or guess.f_center <= 0:
        raise FitError("initial guess needs positive Q and centre frequency")

    f0, q0 = guess.f_center, guess.q_loaded
    w = f0 / q0
    s = float(np.max(np.abs(d.powers)))
    x = (d.freqs - f0) / w
    y = d.powers / s
    theta = np.array([guess.peak_power / s, 0.0, 1.0, guess.baseline / s])

    model, jac = _jacobian(x, theta, f0, w, q0)
    res = y - model
    cost = float(res @ res)
    history = [cost]
    lam = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        jtj = jac.T @ jac
        g = jac.T @ res
        a_mat = jtj + lam * np.diag(np.diag(jtj))
        try:
            step = np.linalg.solve(a_mat, g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        small = np.linalg.norm(step) <= xtol * (np.linalg.norm(theta) + xtol)
        trial = theta + step
        accepted = False
        if trial[2] > 0:
            t_model, t_jac = _jacobian(x, trial, f0, w, q0)
            t_res = y - t_model
            t_cost = float(t_res @ t_res)
            if t_cost <= cost:
                theta, model, jac, res, cost = trial, t_model, t_jac, t_res, t_cost
                history.append(cost)
                lam = max(lam / 10.0, 1e-15)
                accepted = True
        if not accepted:
            lam *= 10.0
        if small:
            converged = True
            break
        if lam > 1e16:
            break

    a, u, q, b = theta
    n, npar = len(y), 4
    dof = max(n - npar, 1)
    stderr = None
    if converged:
        jtj = jac.T @ jac
        if np.linalg.cond(jtj) < 1e14:
            cov = np.linalg.inv(jtj) * (cost / dof)
            se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
            stderr = {
                "peak_power": s * se[0],
                "f_center": w * se[1],
                "q_loaded": q0 * se[2],
                "baseline": s * se[3],
            }
    return FitResult(
        peak_power=s * a,
        f_center=f0 + w * u,
        q_loaded=q0 * q,
        baseline=s * b,
        residual_rms=s * math.sqrt(cost / n),
        stderr=stderr,
        converged=converged,
        iterations=it,
        cost_history=tuple(s * s * c for c in history),
        notes=guess.notes,
    )


def fit(d):
    """Guess and fit in one call."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgePeakWarning)
        g = initial_guess(d)
    return fit_lorentzian(d, g)


@dataclass(frozen=True)
class PairCheck:
    i: int
    j: int
    difference: float
    limit: float
    passed: bool


@dataclass(frozen=True)
class QConsistency:
    pairs: tuple
    passed: bool

    def summary(self):
        lines = [
            f"  Q[{p.i}] vs Q[{p.j}]: |dQ|={p.difference:.1f}  limit={p.limit:.1f}  "
            f"{'ok' if p.passed else 'FAIL'}"
            for p in self.pairs
        ]
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def q_consistency(results, tol, uncertainty_floor=0.0):
    """Pairwise agreement of fitted Q values.

    Each result's uncertainty is its Q standard error, raised to
    ``uncertainty_floor`` when that is larger (e.g. a known measurement
    uncertainty). A pair passes when ``|Q_i - Q_j| <= tol * sqrt(s_i^2 + s_j^2)``.
    """
    results = list(results)
    if len(results) < 2:
        raise FitError("need at least two fit results to compare")
    sig = [max(r.q_stderr or 0.0, uncertainty_floor) for r in results]
    pairs = []
    for i, j in itertools.combinations(range(len(results)), 2):
        diff = abs(results[i].q_loaded - results[j].q_loaded)
        limit = tol * math.hypot(sig[i], sig[j])
        pairs.append(PairCheck(i, j, diff, limit, diff <= limit))
    return QConsistency(tuple(pairs), all(p.passed for p in pairs))
