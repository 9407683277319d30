"""Command-line harness for reproducible batch runs.

Every output file starts with a header (as '#' comments in CSV/text, as a
"meta" object in JSON) recording the tool version, a hash of the effective
configuration and the constants-table version, so results can be traced and
reruns compared byte for byte. Failures exit nonzero with a JSON diagnostic
on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import CONSTANTS_VERSION, constants_table
from .coupling import point_charge_rate, swap_time
from .dynamics import ExchangeModel, FockState, evolve_fock, exchange_trace, mean_phonons, bell_fidelity
from .equilibrium import IonConfiguration, solve_equilibrium
from .fitting import (
    fit_avoided_crossing,
    fit_exchange,
    fit_report_dict,
    fit_spectra,
    load_crossing_csv,
    load_exchange_csv,
    load_spectra_csv,
)
from .modes import auto_scan_range, mode_frequencies, enhancement_report, scan_crossing, scan_csv_lines
from .potential import calibrate_symmetric, find_wells
from .trapconfig import load_trap_config, species_by_name


def _config_hash(args) -> str:
    digest = hashlib.sha256()
    if getattr(args, "config", None):
        digest.update(Path(args.config).read_bytes())
    flags = {k: v for k, v in sorted(vars(args).items())
             if k not in ("func", "out") and v is not None}
    digest.update(repr(flags).encode())
    return "sha256:" + digest.hexdigest()


def _header_lines(args):
    return [f"# tool: ionwells {__version__}",
            f"# config_hash: {_config_hash(args)}",
            f"# constants: {CONSTANTS_VERSION}"]


def _meta(args):
    return {"tool": f"ionwells {__version__}",
            "config_hash": _config_hash(args),
            "constants": CONSTANTS_VERSION}


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict):
    payload = {"meta": _meta(args), **payload}
    _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_ions(text: str):
    try:
        n_left, n_right = (int(s) for s in text.split(","))
    except ValueError:
        raise ValueError("--ions expects two comma-separated counts, e.g. 1,1")
    return n_left, n_right


def _setup_from_args(args):
    if getattr(args, "config", None):
        return load_trap_config(args.config)
    if getattr(args, "r", None) and getattr(args, "freq", None) and getattr(args, "species", None):
        from .trapconfig import TrapSetup
        species = species_by_name(args.species)
        pot = calibrate_symmetric(args.r, args.freq, species,
                                  getattr(args, "tune1", 0.0) or 0.0,
                                  getattr(args, "tune2", 0.0) or 0.0)
        return TrapSetup(species=species, potential=pot,
                         approx_separation=args.r, approx_frequency=args.freq,
                         scan_u_min=None, scan_u_max=None, scan_steps=41,
                         fit_restarts=5, fit_seed=0)
    raise ValueError("provide --config FILE or the trio --r/--freq/--species")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_calibrate(args):
    species = species_by_name(args.species)
    pot = calibrate_symmetric(args.r, args.freq, species, args.tune1, args.tune2)
    wells = find_wells(pot, 0.0, species)
    _emit_json(args, {
        "alpha1_J_per_m": pot.alpha1,
        "alpha2_J_per_m2": pot.alpha2,
        "alpha4_J_per_m4": pot.alpha4,
        "tune1_J_per_m_per_V": pot.tune1,
        "tune2_J_per_m2_per_V": pot.tune2,
        "check": {
            "separation_m": wells.separation_r,
            "freq_left_hz": wells.freq_left,
            "freq_right_hz": wells.freq_right,
            "barrier_height_J": wells.barrier_height,
        },
    })
    return 0


def _cmd_equilibria(args):
    setup = _setup_from_args(args)
    config = IonConfiguration(setup.species, *_parse_ions(args.ions))
    result = solve_equilibrium(setup.potential, args.u, config)
    if not result.converged:
        raise RuntimeError(f"equilibrium did not converge (grad_norm={result.grad_norm!r} N)")
    wells = None
    if config.n_left and config.n_right:
        wells = find_wells(setup.potential, args.u, setup.species)
    lines = _header_lines(args)
    lines.append(f"# total_energy_J: {result.total_energy!r}")
    lines.append(f"# grad_norm_N: {result.grad_norm!r}")
    lines.append(f"# escaped: {int(result.escaped)}")
    lines.append("index,position_m,well")
    for i, z in enumerate(result.positions):
        well = "-" if wells is None else ("L" if z < wells.barrier_top else "R")
        lines.append(f"{i},{float(z)!r},{well}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_modes(args):
    setup = _setup_from_args(args)
    config = IonConfiguration(setup.species, *_parse_ions(args.ions))
    wells = find_wells(setup.potential, args.u, setup.species)
    spectrum = mode_frequencies(setup.potential, args.u, config)
    _emit_json(args, {
        "u_ax_V": args.u,
        "wells": {
            "freq_left_hz": wells.freq_left,
            "freq_right_hz": wells.freq_right,
            "separation_m": wells.separation_r,
            "barrier_height_J": wells.barrier_height,
        },
        "mode_frequencies_hz": [float(f) for f in spectrum.frequencies],
        "coupled_pair_hz": [float(f) for f in spectrum.frequencies[:2]],
        "positions_m": [float(z) for z in spectrum.equilibrium.positions],
        "eigenvectors": [[float(v) for v in row] for row in spectrum.eigenvectors.T],
    })
    return 0


def _parse_u_range(setup, config, text):
    if text == "auto":
        return auto_scan_range(setup.potential, config)
    if text == "config":
        if setup.scan_u_min is None or setup.scan_u_max is None:
            raise ValueError("config file has no [scan] u_min_V/u_max_V")
        return setup.scan_u_min, setup.scan_u_max
    try:
        u_min, u_max = (float(s) for s in text.split(":"))
    except ValueError:
        raise ValueError("--u-range expects 'auto', 'config' or MIN:MAX volts")
    return u_min, u_max


def _cmd_scan(args):
    setup = _setup_from_args(args)
    config = IonConfiguration(setup.species, *_parse_ions(args.ions))
    u_min, u_max = _parse_u_range(setup, config, args.u_range)
    steps = args.steps if args.steps else setup.scan_steps
    scan = scan_crossing(setup.potential, config, u_min, u_max, steps=steps)
    if math.isnan(scan.splitting):
        raise RuntimeError("no stable scan point; cannot extract a splitting")
    lines = _header_lines(args)
    lines.append(f"# splitting_hz: {scan.splitting!r}")
    lines.append(f"# resonance_voltage_V: {scan.resonance_voltage!r}")
    lines.extend(scan_csv_lines(scan))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_enhance(args):
    setup = _setup_from_args(args)
    rows = enhancement_report(setup.potential, setup.species, args.max_ions)
    lines = _header_lines(args)
    lines.append("n_left,n_right,splitting_hz,point_charge_hz")
    for row in rows:
        lines.append(f"{row.n_left},{row.n_right},{row.splitting_hz!r},{row.point_charge_hz!r}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_exchange(args):
    omega_c = math.pi / args.fswap
    model = ExchangeModel(n1_0=args.n1, n2_0=args.n2, omega_c=omega_c,
                          tau_damp=args.tau_damp, gamma_h=args.heating)
    taus = np.linspace(0.0, args.until, args.points)
    trace = exchange_trace(model, taus)
    lines = _header_lines(args)
    lines.append(f"# omega_c_rad_s: {omega_c!r}")
    lines.append("tau_s,n1_mean")
    for t, n in zip(taus, trace):
        lines.append(f"{float(t)!r},{float(n)!r}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_evolve(args):
    omega_c = math.pi / args.fswap
    state = FockState.basis(args.n1, args.n2, cutoff=args.cutoff)
    evolved = evolve_fock(state, omega_c, args.t)
    n1, n2 = mean_phonons(evolved)
    populations = {}
    prob = np.abs(evolved.amplitudes) ** 2
    for (i, j), val in np.ndenumerate(prob):
        if val > 1e-12:
            populations[f"{i},{j}"] = float(val)
    _emit_json(args, {
        "omega_c_rad_s": omega_c,
        "t_s": args.t,
        "t_swap_s": swap_time(omega_c),
        "mean_n1": n1,
        "mean_n2": n2,
        "bell_fidelity": bell_fidelity(evolved),
        "norm": float(np.sum(prob)),
        "populations": populations,
    })
    return 0


def _cmd_fit_exchange(args):
    data = load_exchange_csv(args.data)
    result = fit_exchange(data, seed=args.seed, restarts=args.restarts)
    _emit_json(args, fit_report_dict(result))
    return 0 if result.converged else 3


def _cmd_fit_crossing(args):
    data = load_crossing_csv(args.data)
    result = fit_avoided_crossing(data, seed=args.seed, restarts=args.restarts)
    _emit_json(args, fit_report_dict(result))
    return 0 if result.converged else 3


def _cmd_fit_spectra(args):
    setup = _setup_from_args(args)
    dataset = load_spectra_csv(args.data)
    freeze = tuple(s for s in (args.freeze or "").split(",") if s)
    result = fit_spectra(dataset, setup.species,
                         approx_separation=setup.approx_separation,
                         approx_frequency=setup.approx_frequency,
                         tune1_guess=setup.potential.tune1 or None,
                         freeze=freeze, seed=args.seed,
                         restarts=args.restarts)
    _emit_json(args, fit_report_dict(result))
    return 0 if result.converged else 3


def _cmd_constants(args):
    lines = _header_lines(args)
    for name, (value, unit) in constants_table().items():
        lines.append(f"{name} = {value!r} {unit}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------

def _add_trap_source(sub):
    sub.add_argument("--config", help="trap configuration TOML file")
    sub.add_argument("--r", type=float, help="bare well separation in m")
    sub.add_argument("--freq", type=float, help="bare well frequency in Hz")
    sub.add_argument("--species", help="species name, e.g. Ca40")
    sub.add_argument("--tune1", type=float, default=0.0,
                     help="control response of the linear term, J/m per V")
    sub.add_argument("--tune2", type=float, default=0.0,
                     help="control response of the quadratic term, J/m^2 per V")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionwells",
        description="Double-well ion trap toolkit: equilibria, normal modes, "
                    "avoided crossings, phonon exchange, and fits.")
    parser.add_argument("--version", action="version",
                        version=f"ionwells {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("calibrate", help="quartic coefficients from (r, freq)")
    sub.add_argument("--r", type=float, required=True)
    sub.add_argument("--freq", type=float, required=True)
    sub.add_argument("--species", required=True)
    sub.add_argument("--tune1", type=float, default=0.0)
    sub.add_argument("--tune2", type=float, default=0.0)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_calibrate)

    sub = subs.add_parser("equilibria", help="equilibrium positions table")
    _add_trap_source(sub)
    sub.add_argument("--ions", required=True, help="counts per well, e.g. 2,1")
    sub.add_argument("--u", type=float, default=0.0, help="control voltage in V")
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_equilibria)

    sub = subs.add_parser("modes", help="normal-mode spectrum at one voltage")
    _add_trap_source(sub)
    sub.add_argument("--ions", default="1,1")
    sub.add_argument("--u", type=float, default=0.0)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_modes)

    sub = subs.add_parser("scan", help="avoided-crossing scan to CSV")
    _add_trap_source(sub)
    sub.add_argument("--ions", required=True)
    sub.add_argument("--u-range", default="auto",
                     help="'auto', 'config', or MIN:MAX in volts "
                          "(use --u-range=-0.01:0.01 for negative bounds)")
    sub.add_argument("--steps", type=int, default=0)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_scan)

    sub = subs.add_parser("enhance", help="splitting vs ion number table")
    _add_trap_source(sub)
    sub.add_argument("--max-ions", type=int, default=3)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_enhance)

    sub = subs.add_parser("exchange", help="damped/heated mean-phonon trace")
    sub.add_argument("--n1", type=float, required=True)
    sub.add_argument("--n2", type=float, required=True)
    sub.add_argument("--fswap", type=float, required=True,
                     help="full swap time in s (omega_c = pi/fswap)")
    sub.add_argument("--tau-damp", type=float, required=True)
    sub.add_argument("--heating", type=float, required=True,
                     help="background heating in quanta/s")
    sub.add_argument("--until", type=float, required=True,
                     help="largest waiting time in s")
    sub.add_argument("--points", type=int, default=200)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_exchange)

    sub = subs.add_parser("evolve", help="exact two-mode Fock evolution report")
    sub.add_argument("--n1", type=int, required=True)
    sub.add_argument("--n2", type=int, required=True)
    sub.add_argument("--fswap", type=float, required=True)
    sub.add_argument("--t", type=float, required=True)
    sub.add_argument("--cutoff", type=int, default=None)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_evolve)

    sub = subs.add_parser("fit-exchange", help="fit a measured phonon trace")
    sub.add_argument("--data", required=True, help="CSV: tau_s,n1_mean,sigma")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--restarts", type=int, default=5)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_fit_exchange)

    sub = subs.add_parser("fit-crossing", help="fit a two-level hyperbola")
    sub.add_argument("--data", required=True, help="CSV: u_ax_V,frequency_Hz,sigma_Hz")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--restarts", type=int, default=5)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_fit_crossing)

    sub = subs.add_parser("fit-spectra", help="fit potential/tuning to spectra")
    _add_trap_source(sub)
    sub.add_argument("--data", required=True,
                     help="CSV: config_label,u_ax_V,frequency_Hz,sigma_Hz,timestamp_s")
    sub.add_argument("--freeze", default="",
                     help="comma-separated parameters to hold fixed")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--restarts", type=int, default=2)
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_fit_spectra)

    sub = subs.add_parser("constants", help="print the shared constants table")
    sub.add_argument("--out")
    sub.set_defaults(func=_cmd_constants)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI boundary: report and exit nonzero
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
