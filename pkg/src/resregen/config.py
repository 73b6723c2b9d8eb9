"""Flat ``key = value`` experiment configuration.

Keys are dotted (``cavity.f_res_hz = 9.590e9``), ``#`` starts a comment,
and unknown keys are errors. Anything not given keeps the default listed in
``KEYS``; the defaults reproduce the Table-1 style room-temperature setup.
"""
from dataclasses import dataclass, field, replace
from importlib import resources
import os

from .cavity import CavityParams
from .chain import ChainConfig
from .thermal import ThermalEnvironment

MODES = ("analytic", "stochastic")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    f_start: float = 9.588e9
    f_stop: float = 9.593e9
    points: int = 201
    power_dbm_at_cavity: float = -55.0
    rbw_hz: float = 1.0
    averages: int = 100
    mode: str = "analytic"
    master_seed: int = 0
    span_bins: int = 16
    window: str = "rectangular"
    workers: int = 1

    def __post_init__(self):
        if not self.f_start < self.f_stop:
            raise ConfigError("sweep.f_start_hz must be below sweep.f_stop_hz")
        if self.points < 5:
            raise ConfigError("sweep.points must be >= 5")
        if self.mode not in MODES:
            raise ConfigError(f"sweep.mode must be one of {MODES}, got {self.mode!r}")
        if self.rbw_hz <= 0 or self.averages < 1 or self.span_bins < 2:
            raise ConfigError("sweep.rbw_hz > 0, sweep.averages >= 1, sweep.span_bins >= 2 required")
        if self.master_seed < 0:
            raise ConfigError("sweep.master_seed must be non-negative")


@dataclass(frozen=True)
class Table1Spec:
    powers_dbm: tuple = (-55.0, -125.0, -135.0, -145.0)
    # per-row loaded Q; empty means every row uses cavity.q_loaded
    q_loaded: tuple = ()
    q_uncertainty: float = 1000.0
    tol: float = 1.5

    def __post_init__(self):
        if not self.powers_dbm:
            raise ConfigError("table1.powers_dbm must not be empty")
        if self.q_loaded and len(self.q_loaded) != len(self.powers_dbm):
            raise ConfigError("table1.q_loaded needs one value per entry of table1.powers_dbm")


@dataclass(frozen=True)
class NoiseSpec:
    rbw_hz: float = 625.0
    averages: int = 100
    window: str = "hann"
    f_start: float = 9.588e9
    f_stop: float = 9.593e9


@dataclass(frozen=True)
class ExperimentConfig:
    cavity: CavityParams = field(default_factory=lambda: CavityParams(9.590e9, 8800.0, 0.89, 0.94))
    chain: ChainConfig = field(default_factory=ChainConfig)
    env: ThermalEnvironment = field(default_factory=lambda: ThermalEnvironment(305.4))
    sweep: SweepSpec = field(default_factory=SweepSpec)
    table1: Table1Spec = field(default_factory=Table1Spec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        self.chain.check_band(max(self.sweep.f_stop, self.noise.f_stop))

    def with_sweep(self, **changes):
        return replace(self, sweep=replace(self.sweep, **changes))


def _floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.split(","))


# key -> (section, field, parser)
KEYS = {
    "cavity.f_res_hz": ("cavity", "f_res", float),
    "cavity.q_loaded": ("cavity", "q_loaded", float),
    "cavity.beta1": ("cavity", "beta1", float),
    "cavity.beta2": ("cavity", "beta2", float),
    "cavity.excess_loss_db": ("cavity", "excess_loss_db", float),
    "chain.attenuation_db": ("chain", "attenuation_db", float),
    "chain.lna_gain_db": ("chain", "lna_gain_db", float),
    "chain.lna_noise_temp_k": ("chain", "lna_noise_temp", float),
    "chain.lo_freq_hz": ("chain", "lo_freq", float),
    "chain.lpf_cutoff_hz": ("chain", "lpf_cutoff", float),
    "chain.sample_rate_hz": ("chain", "sample_rate", float),
    "chain.post_gain_db": ("chain", "post_gain_db", float),
    "env.temp_k": ("env", "temp", float),
    "sweep.f_start_hz": ("sweep", "f_start", float),
    "sweep.f_stop_hz": ("sweep", "f_stop", float),
    "sweep.points": ("sweep", "points", int),
    "sweep.power_dbm_at_cavity": ("sweep", "power_dbm_at_cavity", float),
    "sweep.rbw_hz": ("sweep", "rbw_hz", float),
    "sweep.averages": ("sweep", "averages", int),
    "sweep.mode": ("sweep", "mode", str),
    "sweep.master_seed": ("sweep", "master_seed", int),
    "sweep.span_bins": ("sweep", "span_bins", int),
    "sweep.window": ("sweep", "window", str),
    "sweep.workers": ("sweep", "workers", int),
    "table1.powers_dbm": ("table1", "powers_dbm", _floats),
    "table1.q_loaded": ("table1", "q_loaded", _floats),
    "table1.q_uncertainty": ("table1", "q_uncertainty", float),
    "table1.tol": ("table1", "tol", float),
    "noise.rbw_hz": ("noise", "rbw_hz", float),
    "noise.averages": ("noise", "averages", int),
    "noise.window": ("noise", "window", str),
    "noise.f_start_hz": ("noise", "f_start", float),
    "noise.f_stop_hz": ("noise", "f_stop", float),
}

PRESETS = ("table1", "fig5")


def parse_config(text, source="<config>"):
    """Parse config text into an :class:`ExperimentConfig`."""
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {lines[key]})")
        section, name, conv = KEYS[key]
        try:
            values[key] = conv(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {key}") from None
        lines[key] = lineno

    base = ExperimentConfig()
    parts = {s: {} for s in ("cavity", "chain", "env", "sweep", "table1", "noise")}
    for key, v in values.items():
        section, name, _ = KEYS[key]
        parts[section][name] = v
    try:
        return ExperimentConfig(
            cavity=replace(base.cavity, **parts["cavity"]),
            chain=replace(base.chain, **parts["chain"]),
            env=replace(base.env, **parts["env"]),
            sweep=replace(base.sweep, **parts["sweep"]),
            table1=replace(base.table1, **parts["table1"]),
            noise=replace(base.noise, **parts["noise"]),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path_or_preset):
    """Load a config file, or one of the bundled presets by name."""
    if path_or_preset in PRESETS and not os.path.exists(path_or_preset):
        ref = resources.files("resregen.presets") / f"{path_or_preset}.cfg"
        return parse_config(ref.read_text(), f"preset:{path_or_preset}")
    try:
        with open(path_or_preset) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path_or_preset!r}: {exc.strerror}") from None
    return parse_config(text, path_or_preset)
