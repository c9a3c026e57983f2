#!/usr/bin/env python3
"""Characterize the latching readout at its best drive point.

Runs the Monte-Carlo fidelity sweep on the `fidelity` grid of a run
config, reports the optimum, then interrogates that operating point:
detector firing time, relaxation error budget with and without the
latch, and batches of shots with one forced qubit jump placed before
versus after the detector fires, which shows the latch protecting the
assignment.
"""

import argparse
import math

from polatch.dynamics import DriveProtocol
from polatch.harness.artifacts import write_artifact
from polatch.harness.config import load_config, with_threads
from polatch.harness.sweeps import resolve_sigma_det, sweep_fidelity
from polatch.harness.units import power_to_amplitude
from polatch.model import QubitState
from polatch.readout import (NoiseModel, error_budget,
                             measure_bifurcation_time, simulate_shot)

TWO_PI = 2.0 * math.pi


def main():
    ap = argparse.ArgumentParser(
        description="latching readout operating-point study")
    ap.add_argument("--config", default="configs/flux5.yaml")
    ap.add_argument("--out", default="out/latching")
    ap.add_argument("--threads", type=int, default=None,
                    help="override the worker count from the config")
    ap.add_argument("--jump-shots", type=int, default=25,
                    help="shots per forced-jump batch (default 25)")
    args = ap.parse_args()

    config = load_config(args.config)
    if args.threads is not None:
        config = with_threads(config, args.threads)

    art = sweep_fidelity(config)
    csv_path, _ = write_artifact(art, args.out)
    print(f"wrote {csv_path}")
    star = art.metadata["star"]
    print(f"best assignment fidelity F = {star['F']:.4f} at "
          f"{star['freq_GHz']:.4f} GHz / {star['power_dBm']:.1f} dBm")

    sys_p = config.system
    omega_d = TWO_PI * 1e9 * star["freq_GHz"]
    amp = power_to_amplitude(star["power_dBm"], omega_d, sys_p.kappa_c,
                             config.attenuation_correction)
    pulse = config.protocol.pulse_duration
    t_b = measure_bifurcation_time(sys_p, omega_d, amp, pulse)
    if math.isnan(t_b):
        print("detector never fires at the optimum; nothing to latch")
        return
    print(f"detector fires {t_b * 1e9:.0f} ns into the "
          f"{pulse * 1e9:.0f} ns pulse")

    t_int = config.readout.t_int if config.readout.t_int else pulse
    no_latch, with_latch = error_budget(sys_p, t_int, t_b)
    print(f"relaxation error over the integration window: "
          f"{no_latch:.2%} unlatched -> {with_latch:.2%} latched")

    sigma = resolve_sigma_det(config)
    noise = NoiseModel.from_system(sys_p, sigma, rng_seed=config.seed,
                                   prep_error=0.0)
    protocol = DriveProtocol.constant(omega_d, amp, pulse)
    n = args.jump_shots
    for label, t_jump in (("before", 0.5 * t_b), ("after", 3.0 * t_b)):
        kept = 0
        for k in range(n):
            rec = simulate_shot(sys_p, noise, protocol, QubitState.e,
                                shot_index=k, forced_jump_times=[t_jump])
            kept += rec.assigned is QubitState.e
        print(f"forced e->g jump {label} the detector fires "
              f"({t_jump * 1e9:.0f} ns): {kept}/{n} shots still read e")


if __name__ == "__main__":
    main()
