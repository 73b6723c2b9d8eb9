"""Command-line entry point: ``resregen <command> [options]``."""
import argparse
import sys

from . import experiment as ex
from .analyzer import Spectrum
from .cavity import stored_photons
from .config import ConfigError, ExperimentConfig, load_config
from .fitting import FitError, SweepData, fit
from .units import dbm_to_watts, parse_quantity, watts_to_dbm


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="config file, or a preset name (table1, fig5)")
    p.add_argument("--seed", type=int, help="master RNG seed (overrides sweep.master_seed)")
    p.add_argument("--out", help="directory for CSV and report files")
    p.add_argument("--mode", choices=("analytic", "stochastic"), help="override sweep.mode")
    p.add_argument("--plot-data", action="store_true",
                   help="also write normalised plot columns (kHz offset, dB rel. peak)")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="resregen",
        description="Cavity resonance measurements from the classical to the sub-photon regime.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="simulate and fit one resonance sweep")
    p.add_argument("--power", type=float, help="cavity input power, dBm")
    p.add_argument("--rbw", type=float, help="resolution bandwidth, Hz")
    p.add_argument("--q", type=float, help="loaded Q of the simulated cavity")

    p = sub.add_parser("table1", parents=[common], help="loaded Q versus input power")
    p.add_argument("--powers", help="comma-separated cavity input powers, dBm")
    p.add_argument("--shared-q", action="store_true", help="use cavity.q_loaded for every row")

    sub.add_parser("noise", parents=[common], help="thermal noise spectrum, generator off")

    p = sub.add_parser("fit", parents=[common], help="fit a freq_hz,power_dbm CSV")
    p.add_argument("csv")
    p.add_argument("--source", choices=("driven", "noise-only"), default="driven")

    p = sub.add_parser("photons", parents=[common], help="stored photons per input power")
    p.add_argument("--powers", help="comma-separated cavity input powers, dBm")

    p = sub.add_parser("sensitivity", parents=[common],
                       help="single-photon power and required RBW, e.g. '1GHz 1e5 300K 1'")
    p.add_argument("frequency")
    p.add_argument("q")
    p.add_argument("temp")
    p.add_argument("snr", nargs="?", default="1")
    p.add_argument("--wavelength", default="1um", help="optical comparison: wavelength")
    p.add_argument("--finesse", default="1e5", help="optical comparison: mirror finesse")
    p.add_argument("--length", default="1m", help="optical comparison: cavity length")
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.mode is not None:
        changes["mode"] = args.mode
    return cfg.with_sweep(**changes) if changes else cfg


def _powers(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _emit_sweep(args, run, prefix=""):
    sys.stdout.write(run.fit.report())
    if args.out:
        ex.write_text(args.out, f"{prefix}spectrum.csv", run.spectrum.to_csv())
        ex.write_text(args.out, f"{prefix}fit.txt", run.fit.report())
        if args.plot_data:
            ex.write_text(args.out, f"{prefix}plot_data.csv",
                          ex.plot_data(run.spectrum, run.fit.f_center))


def cmd_sweep(args):
    cfg = _config(args)
    if args.rbw is not None:
        cfg = cfg.with_sweep(rbw_hz=args.rbw)
    run = ex.run_sweep(cfg, args.power, args.q)
    _emit_sweep(args, run)
    return 0 if run.fit.converged else 1


def cmd_table1(args):
    cfg = _config(args)
    if args.shared_q:
        from dataclasses import replace
        cfg = replace(cfg, table1=replace(cfg.table1, q_loaded=()))
    report = ex.run_table1(cfg, _powers(args.powers) if args.powers else None)
    sys.stdout.write(report.table_text())
    if args.out:
        ex.write_text(args.out, "table1.txt", report.table_text())
        ex.write_text(args.out, "table1.csv", report.table_csv())
        for row in report.rows:
            tag = f"p{row.power_dbm:+g}dbm_".replace("+", "")
            ex.write_text(args.out, f"{tag}spectrum.csv", row.run.spectrum.to_csv())
            ex.write_text(args.out, f"{tag}fit.txt", row.run.fit.report())
            if args.plot_data:
                ex.write_text(args.out, f"{tag}plot_data.csv",
                              ex.plot_data(row.run.spectrum, row.run.fit.f_center))
    return 0 if report.all_converged else 1


def cmd_noise(args):
    cfg = _config(args)
    run = ex.run_noise_floor(cfg)
    sys.stdout.write(run.fit.report())
    sys.stdout.write(f"per_bin_photon_occupancy={run.occupancy_per_bin:.6g}\n")
    if args.out:
        ex.write_text(args.out, "noise_spectrum.csv", run.spectrum.to_csv())
        ex.write_text(args.out, "noise_fit.txt", run.fit.report()
                      + f"per_bin_photon_occupancy={run.occupancy_per_bin:.6g}\n")
        if args.plot_data:
            ex.write_text(args.out, "noise_plot_data.csv", ex.plot_data(run.spectrum, run.fit.f_center))
    return 0 if run.fit.converged else 1


def cmd_fit(args):
    spec = Spectrum.from_csv(args.csv)
    result = fit(SweepData.from_spectrum(spec, args.source))
    sys.stdout.write(result.report())
    if args.out:
        ex.write_text(args.out, "fit.txt", result.report())
        if args.plot_data:
            ex.write_text(args.out, "plot_data.csv", ex.plot_data(spec, result.f_center))
    return 0 if result.converged else 1


def cmd_photons(args):
    cfg = _config(args)
    t = cfg.table1
    powers = _powers(args.powers) if args.powers else tuple(t.powers_dbm)
    qs = t.q_loaded if (t.q_loaded and powers == tuple(t.powers_dbm)) else (cfg.cavity.q_loaded,) * len(powers)
    lines = ["power_dbm,q_loaded,energy_j,photons"]
    from dataclasses import replace
    for p, q in zip(powers, qs):
        cav = replace(cfg.cavity, q_loaded=q)
        e, n = stored_photons(cav, cav.f_res, dbm_to_watts(p))
        lines.append(f"{p:g},{q:g},{e:.6e},{n:.6g}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        ex.write_text(args.out, "photons.csv", text)
    return 0


def cmd_sensitivity(args):
    rep = ex.run_sensitivity(parse_quantity(args.frequency), parse_quantity(args.q),
                             parse_quantity(args.temp), parse_quantity(args.snr))
    lam = parse_quantity(args.wavelength)
    optical = ex.optical_anchor(lam, parse_quantity(args.finesse), parse_quantity(args.length))
    text = (rep.text() + f"optical_wavelength_m={lam:.6g}\n"
            + f"optical_single_photon_power_w={optical:.4e}\n")
    sys.stdout.write(text)
    if args.out:
        ex.write_text(args.out, "sensitivity.txt", text)
    return 0


COMMANDS = {
    "sweep": cmd_sweep,
    "table1": cmd_table1,
    "noise": cmd_noise,
    "fit": cmd_fit,
    "photons": cmd_photons,
    "sensitivity": cmd_sensitivity,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
