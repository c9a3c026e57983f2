"""Command-line interface.

Subcommands mirror the artifacts of a measurement campaign: `params`
prints the derived normal-mode table for a config, `curves` dumps the
mixing-angle parameter curves, `deg-map` / `bistability-map` /
`fidelity-map` run the three sweeps, and `shot` dumps a single readout
trace for eyeballing the latching dynamics.

Exit codes: 0 success, 1 solver or runtime failure, 2 config error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .. import __version__
from ..dynamics import DriveProtocol, IntegrationError
from ..model import (QubitState, critical_photon_number, parameter_curves,
                     polariton_params)
from ..readout import NoiseModel, latch_references, shot_trace, simulate_shot
from .artifacts import base_metadata, write_artifact, write_json
from .config import ConfigError, load_config, with_seed, with_threads
from .sweeps import (resolve_sigma_det, sweep_bistability, sweep_deg_map,
                     sweep_fidelity)
from .units import TWO_PI, power_to_amplitude

_GHZ = TWO_PI * 1e9
_MHZ = TWO_PI * 1e6


def _load(args):
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = with_seed(config, args.seed)
    if getattr(args, "threads", None) is not None:
        config = with_threads(config, args.threads)
    return config


def _qubit_state(args) -> QubitState:
    return QubitState[args.qubit_state]


def cmd_params(args) -> int:
    config = _load(args)
    sys_p = config.system
    eta = None
    if getattr(args, "qubit_state", None) is not None:
        eta = _qubit_state(args)
    pp = polariton_params(sys_p, eta)

    cond = "bare circuit" if eta is None else f"qubit in {eta.name}"
    print(f"config hash   {config.config_hash[:16]}")
    print(f"normal modes  ({cond}, mixing angle "
          f"{pp.theta:.4f} rad)")
    print()
    rows = [
        ("omega/2pi [GHz]", pp.omega_u / _GHZ, pp.omega_l / _GHZ),
        ("chi/2pi [MHz]", pp.chi_u / _MHZ, pp.chi_l / _MHZ),
        ("U self/2pi [MHz]", pp.U_uu / _MHZ, pp.U_ll / _MHZ),
        ("U cross/2pi [MHz]", pp.U_ul / _MHZ, pp.U_ul / _MHZ),
        ("kappa/2pi [MHz]", pp.kappa_u / _MHZ, pp.kappa_l / _MHZ),
        ("N_crit [photons]",
         critical_photon_number(pp.kappa_u, pp.U_uu),
         critical_photon_number(pp.kappa_l, pp.U_ll)),
    ]
    print(f"  {'quantity':<20}{'upper':>12}{'lower':>12}")
    for label, up, lo in rows:
        print(f"  {label:<20}{up:>12.4f}{lo:>12.4f}")
    return 0


def cmd_curves(args) -> int:
    config = _load(args)
    thetas = np.linspace(0.0, 0.5 * math.pi, args.points)
    cols = parameter_curves(config.system, thetas)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "parameter_curves.csv")
    names = list(cols)
    header = ",".join(
        name if name == "theta" else f"{name}_MHz" for name in names)
    lines = [header]
    for k in range(len(cols["theta"])):
        vals = []
        for name in names:
            v = cols[name][k]
            if name != "theta":
                v = v / _MHZ
            vals.append(format(v, ".17g"))
        lines.append(",".join(vals))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    write_json({"name": "parameter_curves",
                "metadata": base_metadata(config.config_hash)},
               os.path.join(args.out, "parameter_curves.json"))
    print(f"wrote {path}")
    return 0


def _emit(artifact, out_dir) -> int:
    csv_path, json_path = write_artifact(artifact, out_dir)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


def cmd_deg_map(args) -> int:
    config = _load(args)
    return _emit(sweep_deg_map(config), args.out)


def cmd_bistability_map(args) -> int:
    config = _load(args)
    return _emit(sweep_bistability(config, _qubit_state(args)), args.out)


def cmd_fidelity_map(args) -> int:
    config = _load(args)
    return _emit(sweep_fidelity(config), args.out)


def cmd_shot(args) -> int:
    config = _load(args)
    ro = config.readout
    freq_ghz = args.freq if args.freq is not None else ro.cal_freq_ghz
    power_dbm = args.power if args.power is not None else ro.cal_power_dbm
    omega_d = freq_ghz * _GHZ
    amp = power_to_amplitude(
        power_dbm, omega_d, config.system.kappa_c,
        attenuation_correction=config.attenuation_correction)
    protocol = DriveProtocol.constant(omega_d, amp,
                                      config.protocol.pulse_duration)
    sigma = resolve_sigma_det(config)
    noise = NoiseModel.from_system(config.system, sigma,
                                   rng_seed=config.seed,
                                   prep_error=ro.prep_error,
                                   herald=ro.herald)
    forced = None
    if args.jump_at is not None:
        forced = [args.jump_at * 1e-9]
    prepared = _qubit_state(args)
    record = simulate_shot(config.system, noise, protocol, prepared,
                           shot_index=args.shot_index,
                           forced_jump_times=forced, t_int=ro.t_int)
    times, c_out = shot_trace(config.system, protocol, record.initial,
                              record.jump_times)

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "shot_trace.csv")
    lines = ["t_ns,re_c_out,im_c_out,abs_c_out"]
    for t, c in zip(times, c_out):
        lines.append(",".join(format(v, ".17g") for v in
                              (t * 1e9, c.real, c.imag, abs(c))))
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    refs = latch_references(config.system, omega_d, amp)
    t_bif = record.bifurcation_time
    payload = {
        "drive": {"freq_GHz": float(freq_ghz),
                  "power_dBm": float(power_dbm),
                  "Omega_c_rad_per_s": float(amp)},
        "prepared": record.prepared.name,
        "initial": record.initial.name,
        "jump_times_ns": [t * 1e9 for t in record.jump_times],
        "integrated_iq": [record.integrated_iq.real,
                          record.integrated_iq.imag],
        "latched": record.latched,
        "assigned": record.assigned.name,
        "bifurcation_time_ns":
            None if math.isnan(t_bif) else t_bif * 1e9,
        "detector": {"low": refs.low, "high": refs.high,
                     "midpoint": refs.midpoint if refs.any_fold else None,
                     "discriminating": refs.discriminating},
        "sigma_det": float(sigma),
        "metadata": base_metadata(config.config_hash,
                                  seed=config.seed,
                                  shot_index=args.shot_index),
    }
    json_path = os.path.join(args.out, "shot_record.json")
    write_json(payload, json_path)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"prepared {record.prepared.name} -> assigned "
          f"{record.assigned.name} (latched: {record.latched})")
    return 0


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="polatch",
        description="polariton latching readout simulator")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, out=True, seed=False, threads=False):
        p.add_argument("--config", required=True,
                       help="path to the YAML run configuration")
        if out:
            p.add_argument("--out", default="out",
                           help="output directory (default: ./out)")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the master seed")
        if threads:
            p.add_argument("--threads", type=int, default=None,
                           help="override the worker count")

    p = sub.add_parser("params",
                       help="print the derived normal-mode table")
    common(p, out=False)
    p.add_argument("--qubit-state", choices=("g", "e"), default=None,
                   help="condition the modes on a qubit state")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("curves",
                       help="dump parameter curves over the mixing angle")
    common(p)
    p.add_argument("--points", type=int, default=181,
                   help="number of angle samples (default 181)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("deg-map",
                       help="pointer-separation map over the deg grid")
    common(p, threads=True)
    p.set_defaults(func=cmd_deg_map)

    p = sub.add_parser("bistability-map",
                       help="hysteresis map over the bistability grid")
    common(p, threads=True)
    p.add_argument("--qubit-state", choices=("g", "e"), default="e",
                   help="conditioned qubit state (default e)")
    p.set_defaults(func=cmd_bistability_map)

    p = sub.add_parser("fidelity-map",
                       help="latching-fidelity map over the fidelity grid")
    common(p, seed=True, threads=True)
    p.set_defaults(func=cmd_fidelity_map)

    p = sub.add_parser("shot", help="dump a single readout shot")
    common(p, seed=True)
    p.add_argument("--qubit-state", choices=("g", "e"), default="e",
                   help="prepared qubit state (default e)")
    p.add_argument("--freq", type=float, default=None,
                   help="drive frequency in GHz (default: calibration "
                        "point)")
    p.add_argument("--power", type=float, default=None,
                   help="drive power in dBm (default: calibration point)")
    p.add_argument("--jump-at", type=float, default=None,
                   help="force one qubit jump at this time in ns")
    p.add_argument("--shot-index", type=int, default=0,
                   help="shot index within the seed stream (default 0)")
    p.set_defaults(func=cmd_shot)

    return top


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
