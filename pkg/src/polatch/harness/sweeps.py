"""Sweep orchestration: RunConfig in, MapArtifact out.

Each sweep converts the dBm power axis into cavity drive amplitudes
column by column (the conversion depends on the drive frequency),
delegates to the physics modules, and packages the result with
reproducibility metadata.  Cells are independent, so parallel and
serial execution produce identical artifacts.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from typing import Optional

import numpy as np

from ..dynamics import bistability_map
from ..model import QubitState
from ..readout import NoiseModel, calibrate_sigma_det, fidelity_map
from ..steady import DriveSpec, fold_amplitudes, pointer_distance
from .artifacts import MapArtifact, base_metadata
from .config import RunConfig, SweepGrid
from .units import amplitude_to_power, power_to_amplitude

# |<c_out>| carries sqrt(photon flux) units
OUTPUT_FIELD_UNIT = "sqrt_Hz"


def grid_amplitudes(config: RunConfig, grid: SweepGrid) -> np.ndarray:
    """Drive amplitudes, shape (n_freq, n_power).

    One row per frequency: the dBm-to-amplitude map scales with
    1/sqrt(omega_d), so a shared power axis gives slightly different
    amplitudes in every column.
    """
    omega = grid.omega
    amps = np.empty((omega.size, grid.power_dbm.size))
    for i, w in enumerate(omega):
        for j, p in enumerate(grid.power_dbm):
            amps[i, j] = power_to_amplitude(
                p, w, config.system.kappa_c,
                attenuation_correction=config.attenuation_correction)
    return amps


def _deg_cell(args):
    sys, omega_d, amplitude = args
    return pointer_distance(sys, DriveSpec(omega_d, amplitude))


def sweep_deg_map(config: RunConfig,
                  threads: Optional[int] = None) -> MapArtifact:
    """Qubit-conditioned pointer separation over the `deg` grid."""
    grid = config.grid("deg")
    amps = grid_amplitudes(config, grid)
    omega = grid.omega
    jobs = [(config.system, omega[i], amps[i, j])
            for i in range(omega.size)
            for j in range(grid.power_dbm.size)]
    flat = _run_jobs(_deg_cell, jobs, threads or config.threads)
    values = np.array(flat).reshape(omega.size, grid.power_dbm.size)
    return MapArtifact(name="deg_map", freq_ghz=grid.freq_ghz,
                       power_dbm=grid.power_dbm, values=values,
                       unit=OUTPUT_FIELD_UNIT,
                       metadata=base_metadata(config.config_hash))


def _run_jobs(fn, jobs, threads: int):
    if threads > 1 and len(jobs) > 1:
        with mp.get_context("fork").Pool(threads) as pool:
            return pool.map(fn, jobs)
    return [fn(job) for job in jobs]


def _threshold_contour(config: RunConfig, grid: SweepGrid,
                       b_amps: np.ndarray) -> list:
    """Polyline [[freq_GHz, power_dBm], ...] from per-column thresholds."""
    pts = []
    for f, w, b in zip(grid.freq_ghz, grid.omega, b_amps):
        if not (math.isfinite(b) and b > 0.0):
            continue
        p = amplitude_to_power(
            b, w, config.system.kappa_c,
            attenuation_correction=config.attenuation_correction)
        pts.append([float(f), float(p)])
    return pts


def sweep_bistability(config: RunConfig, eta: QubitState,
                      threads: Optional[int] = None) -> MapArtifact:
    """Hysteresis map |c_up - c_down| over the `bistability` grid."""
    grid = config.grid("bistability")
    amps = grid_amplitudes(config, grid)
    proto = config.protocol
    scan = bistability_map(
        config.system, eta, grid.omega, amps,
        ramp_time=proto.ramp_time, hold_time=proto.hold_time,
        peak_amplitude=proto.overdrive_factor * amps[:, -1],
        peak_hold=proto.peak_hold, threads=threads or config.threads)
    meta = base_metadata(
        config.config_hash,
        qubit_state=eta.name,
        B_up_dBm=_threshold_contour(config, grid, scan.B_up),
        B_down_dBm=_threshold_contour(config, grid, scan.B_down),
        simply_connected=bool(scan.simply_connected))
    return MapArtifact(name=f"bistability_map_{eta.name}",
                       freq_ghz=grid.freq_ghz, power_dbm=grid.power_dbm,
                       values=scan.D_ud, unit=OUTPUT_FIELD_UNIT,
                       metadata=meta)


def resolve_sigma_det(config: RunConfig) -> float:
    """Detection noise from the config, calibrating when set to auto.

    Auto mode anchors the per-quadrature noise so that two Gaussian
    pointer distributions separated by the conditioned steady-state
    output distance at the calibration point overlap at the 0.1%
    level.  The calibration itself is steady-state only, so it is
    deterministic and independent of shot seeds.
    """
    if config.readout.sigma_det is not None:
        return config.readout.sigma_det
    ro = config.readout
    amp = power_to_amplitude(
        ro.cal_power_dbm, ro.cal_omega, config.system.kappa_c,
        attenuation_correction=config.attenuation_correction)
    separation = pointer_distance(config.system,
                                  DriveSpec(ro.cal_omega, amp))
    if separation <= 0.0:
        raise ValueError("sigma_det auto-calibration failed: pointer "
                         "states coincide at the calibration point")
    return calibrate_sigma_det(separation)


def _region_label(sys, omega_d: float, amplitude: float) -> int:
    """1 below both switching thresholds, 2 between, 3 above both."""
    latched = []
    for eta in (QubitState.g, QubitState.e):
        folds = fold_amplitudes(sys, eta, omega_d)
        latched.append(folds is not None and amplitude >= folds[1])
    n = sum(latched)
    return 1 if n == 0 else (2 if n == 1 else 3)


def sweep_fidelity(config: RunConfig,
                   threads: Optional[int] = None) -> MapArtifact:
    """Monte-Carlo latching contrast over the `fidelity` grid."""
    grid = config.grid("fidelity")
    amps = grid_amplitudes(config, grid)
    sigma = resolve_sigma_det(config)
    ro = config.readout
    noise = NoiseModel.from_system(config.system, sigma,
                                   rng_seed=config.seed,
                                   prep_error=ro.prep_error,
                                   herald=ro.herald)
    scan = fidelity_map(config.system, noise, grid.omega, amps,
                        shots_per_point=ro.shots_per_point,
                        pulse_duration=config.protocol.pulse_duration,
                        t_int=ro.t_int, threads=threads or config.threads)
    regions = [[_region_label(config.system, w, amps[i, j])
                for j in range(grid.power_dbm.size)]
               for i, w in enumerate(grid.omega)]
    si, sj = scan.star
    meta = base_metadata(
        config.config_hash,
        sigma_det=float(sigma),
        shots_per_point=ro.shots_per_point,
        seed=config.seed,
        regions=regions,
        star={"freq_GHz": float(grid.freq_ghz[si]),
              "power_dBm": float(grid.power_dbm[sj]),
              "F": float(scan.F[si, sj])})
    return MapArtifact(name="fidelity_map", freq_ghz=grid.freq_ghz,
                       power_dbm=grid.power_dbm, values=scan.F,
                       unit="probability", metadata=meta)
