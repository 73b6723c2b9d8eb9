"""Simulation and analysis of a microwave cavity driven down to the sub-photon regime."""
from .analyzer import AnalyzerSettings, Spectrum, analyze, band_power
from .cavity import (CavityParams, IdealEtalon, coupled_transmission, linewidth,
                     lorentzian_factor, multipass_amplitude, optical_single_photon_power,
                     single_photon_power, stored_photons)
from .chain import (BasebandFrame, ChainConfig, ScenePoint, analytic_output, sweep,
                    synthesize)
from .config import ExperimentConfig, load_config, parse_config
from .fitting import FitResult, SweepData, fit, fit_lorentzian, initial_guess, q_consistency
from .thermal import (ThermalEnvironment, min_measure_time, noise_psd, occupation,
                      per_bin_noise, required_rbw, total_noise_power)
from .units import dbm_to_watts, photon_energy, watts_to_dbm

__version__ = "0.1.0"
