"""Scenario runners: power sweeps, the Q-vs-power table, noise floor, sensitivity."""
from dataclasses import dataclass, replace
import os

import numpy as np

from .analyzer import AnalyzerSettings, Spectrum, analyze, bin_at
from .cavity import optical_single_photon_power, single_photon_power, stored_photons
from .chain import (ScenePoint, analytic_output, gen_power_for_cavity_input, measure_point,
                    point_seed, sweep, sweep_spectrum, synthesize)
from .fitting import FitError, QConsistency, SweepData, fit, q_consistency
from .thermal import (ThermalEnvironment, min_measure_time, noise_budget, occupation,
                      per_bin_noise, predicted_snr, required_rbw, total_noise_power)
from .units import dbm_to_watts, watts_to_dbm

# streams under the master seed; keeps scenarios from sharing random numbers
_STREAM_SWEEP = 0
_STREAM_TABLE = 1
_STREAM_NOISE = 2
_STREAM_SNR = 3
_STREAM_BACKGROUND = 4


@dataclass(frozen=True)
class SweepRun:
    power_dbm: float
    spectrum: Spectrum
    fit: object
    q_injected: float


@dataclass(frozen=True)
class Table1Row:
    power_dbm: float
    energy_j: float
    photons: float
    q_injected: float
    run: SweepRun


@dataclass(frozen=True)
class ScenarioReport:
    rows: tuple
    consistency: QConsistency
    budget: object

    @property
    def all_converged(self):
        return all(r.run.fit.converged for r in self.rows)

    def table_text(self):
        head = f"{'P_in [dBm]':>10}  {'photons':>11}  {'Q_inj':>7}  {'Q_fit':>9}  {'Q_stderr':>9}  conv"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            se = r.run.fit.q_stderr
            lines.append(
                f"{r.power_dbm:>10.1f}  {r.photons:>11.4g}  {r.q_injected:>7.0f}  "
                f"{r.run.fit.q_loaded:>9.1f}  {('%.1f' % se) if se is not None else 'n/a':>9}  "
                f"{'yes' if r.run.fit.converged else 'no'}"
            )
        lines.append("")
        lines.append("Q consistency:")
        lines.append(self.consistency.summary())
        return "\n".join(lines) + "\n"

    def table_csv(self):
        out = ["power_dbm,photons,q_injected,q_fitted,q_stderr,converged"]
        for r in self.rows:
            se = r.run.fit.q_stderr
            out.append(
                f"{r.power_dbm:.6g},{r.photons:.10g},{r.q_injected:.10g},"
                f"{r.run.fit.q_loaded:.10g},{'nan' if se is None else f'{se:.10g}'},"
                f"{'true' if r.run.fit.converged else 'false'}"
            )
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class NoiseRun:
    spectrum: Spectrum
    fit: object
    occupancy_per_bin: float
    budget: object


def sweep_points(cfg, power_dbm=None, noise_only=False):
    """Generator settings for the configured grid; ``noise_only`` switches the generator off."""
    s = cfg.sweep
    p_dbm = s.power_dbm_at_cavity if power_dbm is None else power_dbm
    p_gen = 0.0 if noise_only else gen_power_for_cavity_input(dbm_to_watts(p_dbm), cfg.chain)
    return [ScenePoint(float(f), float(p_gen)) for f in np.linspace(s.f_start, s.f_stop, s.points)]


def run_sweep(cfg, power_dbm=None, q_loaded=None, stream=(_STREAM_SWEEP,), noise_only=False):
    """Simulate one resonance sweep and fit it."""
    s = cfg.sweep
    cav = cfg.cavity if q_loaded is None else replace(cfg.cavity, q_loaded=q_loaded)
    p_dbm = s.power_dbm_at_cavity if power_dbm is None else power_dbm
    pts = sweep_points(cfg, p_dbm, noise_only)
    results = sweep(pts, cfg.chain, cav, cfg.env, s.rbw_hz, s.mode, s.master_seed,
                    s.averages, s.span_bins, s.window, s.workers, stream)
    spec = sweep_spectrum(results, s.rbw_hz, s.averages if s.mode == "stochastic" else 1)
    result = fit(SweepData.from_spectrum(spec, "noise-only" if noise_only else "driven"))
    return SweepRun(p_dbm, spec, result, cav.q_loaded)


def run_table1(cfg, powers=None):
    """Sweep at each power, with photon counts and a Q-consistency verdict."""
    t = cfg.table1
    powers = tuple(t.powers_dbm if powers is None else powers)
    if not powers:
        raise ValueError("need at least one power level")
    qs = t.q_loaded if (t.q_loaded and powers == tuple(t.powers_dbm)) else (cfg.cavity.q_loaded,) * len(powers)
    rows = []
    for i, (p_dbm, q) in enumerate(zip(powers, qs)):
        cav = replace(cfg.cavity, q_loaded=q)
        e, n = stored_photons(cav, cav.f_res, dbm_to_watts(p_dbm))
        run = run_sweep(cfg, p_dbm, q, stream=(_STREAM_TABLE, i))
        rows.append(Table1Row(p_dbm, e, n, q, run))
    fits = [r.run.fit for r in rows]
    if len(fits) >= 2:
        verdict = q_consistency(fits, t.tol, t.q_uncertainty)
    else:
        verdict = QConsistency((), True)
    return ScenarioReport(tuple(rows), verdict, noise_budget(cfg.cavity, cfg.env, cfg.sweep.rbw_hz))


def run_noise_floor(cfg):
    """Generator off: analyze the full baseband and fit the thermal Lorentzian."""
    nz = cfg.noise
    cav, chain = cfg.cavity, cfg.chain
    # the synthesized frame is tone-free; the point only fixes the RF band
    pt = ScenePoint(cav.f_res, 0.0)
    seed = point_seed(cfg.sweep.master_seed, 0, (_STREAM_NOISE,))
    frame = synthesize(pt, chain, cav, cfg.env, nz.averages / nz.rbw_hz, seed)
    spec = analyze(frame, AnalyzerSettings(nz.rbw_hz, nz.averages, nz.window))
    rf = spec.shifted(chain.lo_freq).select(nz.f_start, nz.f_stop)
    result = fit(SweepData.from_spectrum(rf, "noise-only"))
    occ = per_bin_noise(cav, cfg.env, nz.rbw_hz, 0.0, cav.f_res) / single_photon_power(cav.f_res, cav.q_loaded)
    return NoiseRun(rf, result, occ, noise_budget(cav, cfg.env, nz.rbw_hz))


@dataclass(frozen=True)
class SnrMeasurement:
    rbw: float
    measured: float
    predicted: float
    tone_bin_power: float
    floor_power: float


def tone_snr(cfg, rbw, power_dbm, averages=None):
    """Measured on-resonance bin S/N of the tone against the Rayleigh-Jeans prediction.

    The floor is the mean of the four bins either side of the tone; the
    prediction is transmitted power over the cavity's thermal noise in one bin.
    """
    s = cfg.sweep
    avg = s.averages if averages is None else averages
    cav, chain = cfg.cavity, cfg.chain
    pt = ScenePoint(cav.f_res, gen_power_for_cavity_input(dbm_to_watts(power_dbm), chain))
    seed = point_seed(s.master_seed, 0, (_STREAM_SNR, int(round(rbw))))
    frame = synthesize(pt, chain, cav, cfg.env, avg / rbw, seed, span=s.span_bins * rbw)
    spec = analyze(frame, AnalyzerSettings(rbw, avg, "rectangular"))
    k = bin_at(spec, frame.center_freq)
    near = [j for j in range(k - 4, k + 5) if j != k and 0 <= j < len(spec.powers)]
    floor = float(np.mean(spec.powers[near]))
    measured = (spec.powers[k] - floor) / floor
    ap = analytic_output(pt, chain, cav, cfg.env, rbw)
    predicted = predicted_snr(ap.signal_bin_power / chain.gain_after_cavity, cav, cfg.env, rbw)
    return SnrMeasurement(rbw, float(measured), float(predicted), float(spec.powers[k]), floor)


def run_background_subtracted(cfg, power_dbm, q_loaded=None):
    """Fit the tone's own line shape: driven sweep minus a generator-off sweep.

    Returns ``(fit_result, error)``; exactly one is None.
    """
    driven = run_sweep(cfg, power_dbm, q_loaded)
    background = run_sweep(cfg, power_dbm, q_loaded, stream=(_STREAM_BACKGROUND,), noise_only=True)
    excess = np.clip(driven.spectrum.powers - background.spectrum.powers, 0.0, None)
    try:
        return fit(SweepData(driven.spectrum.freqs, excess)), None
    except FitError as exc:
        return None, exc


@dataclass(frozen=True)
class SensitivityReport:
    f: float
    q: float
    temp: float
    snr: float
    single_photon_power: float
    occupation: float
    total_noise_power: float
    required_rbw: float
    min_measure_time: float

    def text(self):
        return (
            f"frequency_hz={self.f:.10g}\n"
            f"q_loaded={self.q:.10g}\n"
            f"temp_k={self.temp:.10g}\n"
            f"snr={self.snr:.10g}\n"
            f"single_photon_power_w={self.single_photon_power:.4e}\n"
            f"single_photon_power_dbm={watts_to_dbm(self.single_photon_power):.3f}\n"
            f"occupation={self.occupation:.6g}\n"
            f"total_noise_power_w={self.total_noise_power:.4e}\n"
            f"required_rbw_hz={self.required_rbw:.6g}\n"
            f"min_measure_time_s={self.min_measure_time:.6g}\n"
        )


def run_sensitivity(f, q, temp, snr):
    from .cavity import CavityParams
    env = ThermalEnvironment(temp)
    cav = CavityParams(f, q, 1.0, 1.0)
    rbw = required_rbw(f, env, q, snr)
    return SensitivityReport(
        f, q, temp, snr,
        single_photon_power(f, q), occupation(f, env), total_noise_power(cav, env),
        rbw, min_measure_time(rbw),
    )


def optical_anchor(lam=1e-6, finesse=1e5, length=1.0):
    return optical_single_photon_power(lam, finesse, length)


def plot_data(spec, center=None):
    """CSV text: frequency offset (kHz) and power relative to the peak (dB)."""
    p = spec.powers
    k = int(np.argmax(p))
    fc = spec.freqs[k] if center is None else center
    rel = watts_to_dbm(p) - watts_to_dbm(p[k])
    lines = ["freq_offset_khz,power_db_rel_peak"]
    lines += [f"{(f - fc) / 1e3:.9g},{r:.9g}" for f, r in zip(spec.freqs, np.atleast_1d(rel))]
    return "\n".join(lines) + "\n"


def write_text(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
