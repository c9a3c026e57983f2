#!/usr/bin/env python3
"""Map the qubit-conditioned switching wedge and its frequency offset.

Runs the ramp-up/ramp-down hysteresis sweep once per qubit state on
the `bistability` grid of a run config, writes both map artifacts, and
prints the extracted switching thresholds plus the offset between the
conditioned wedge tips, which should track twice the upper-mode
cross-Kerr rate.
"""

import argparse
import math

import numpy as np

from polatch.harness.artifacts import write_artifact
from polatch.harness.config import load_config, with_threads
from polatch.harness.sweeps import sweep_bistability
from polatch.model import QubitState, polariton_params

TWO_PI = 2.0 * math.pi


def main():
    ap = argparse.ArgumentParser(
        description="conditioned hysteresis wedge study")
    ap.add_argument("--config", default="configs/flux5.yaml")
    ap.add_argument("--out", default="out/wedge")
    ap.add_argument("--threads", type=int, default=None,
                    help="override the worker count from the config")
    args = ap.parse_args()

    config = load_config(args.config)
    if args.threads is not None:
        config = with_threads(config, args.threads)

    tips = {}
    for eta in (QubitState.g, QubitState.e):
        art = sweep_bistability(config, eta)
        csv_path, _ = write_artifact(art, args.out)
        print(f"wrote {csv_path}")
        up = art.metadata["B_up_dBm"]
        if not up:
            print(f"  eta={eta.name}: no hysteresis on this grid")
            continue
        up = np.array(up)
        i = int(np.argmin(up[:, 1]))
        tips[eta] = up[i, 0]
        print(f"  eta={eta.name}: {up.shape[0]} hysteretic columns over "
              f"{up[:, 0].min():.4f}-{up[:, 0].max():.4f} GHz, wedge tip "
              f"at {up[i, 0]:.4f} GHz / {up[i, 1]:.1f} dBm")

    if len(tips) == 2:
        offset_mhz = 1e3 * (tips[QubitState.g] - tips[QubitState.e])
        chi_u_mhz = polariton_params(config.system).chi_u / TWO_PI / 1e6
        print(f"wedge tip offset g - e: {offset_mhz:.1f} MHz "
              f"(2 chi_u = {2.0 * chi_u_mhz:.1f} MHz)")


if __name__ == "__main__":
    main()
