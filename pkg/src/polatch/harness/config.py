"""Strict YAML configuration loading.

The schema is flat and explicit: a `system` section with the circuit
constants, a `calibration` section for the input-line power
correction, `protocol` and `readout` sections with pulse settings, and
named sweep `grids`.  Unknown keys are rejected and every dimensioned
value requires a unit suffix; both rules exist so a typo fails loudly
at parse time instead of silently producing a wrong map.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from ..model import SystemParams
from .units import (
    TWO_PI,
    ConfigError,
    parse_db,
    parse_dbm,
    parse_frequency,
    parse_time,
)


@dataclass(frozen=True)
class SweepGrid:
    """One named sweep: frequency axis in GHz, power axis in dBm."""

    freq_ghz: np.ndarray
    power_dbm: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        """Angular drive frequencies in rad/s."""
        return TWO_PI * 1e9 * self.freq_ghz


@dataclass(frozen=True)
class ProtocolConfig:
    ramp_time: float
    hold_time: float
    peak_hold: float
    pulse_duration: float
    overdrive_factor: float


@dataclass(frozen=True)
class ReadoutConfig:
    shots_per_point: int
    sigma_det: Optional[float]  # None means calibrate automatically
    prep_error: float
    herald: bool
    t_int: Optional[float]
    cal_freq_ghz: float
    cal_power_dbm: float

    @property
    def cal_omega(self) -> float:
        return TWO_PI * 1e9 * self.cal_freq_ghz


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    attenuation_correction: float  # dB
    protocol: ProtocolConfig
    readout: ReadoutConfig
    grids: dict
    seed: int
    threads: int
    config_hash: str

    def grid(self, name: str) -> SweepGrid:
        if name not in self.grids:
            raise ConfigError(f"missing required key 'grids.{name}'")
        return self.grids[name]


class _Section:
    """Mapping view that tracks consumed keys and names the leftovers."""

    def __init__(self, mapping, context: str):
        if mapping is None:
            mapping = {}
        if not isinstance(mapping, dict):
            raise ConfigError(f"key '{context}': expected a mapping")
        self._map = dict(mapping)
        self._ctx = context

    def take(self, key: str, default=..., required: bool = False):
        if key in self._map:
            return self._map.pop(key)
        if required:
            raise ConfigError(f"missing required key '{self._ctx}.{key}'")
        if default is ...:
            return None
        return default

    def finish(self):
        if self._map:
            stray = sorted(self._map)[0]
            raise ConfigError(f"unknown key '{self._ctx}.{stray}'")


def _axis(raw, context: str) -> np.ndarray:
    """Parse one sweep axis into the raw suffixed strings' numbers."""
    sec = _Section(raw, context)
    values = sec.take("values")
    if values is not None:
        sec.finish()
        if not isinstance(values, list) or not values:
            raise ConfigError(f"key '{context}.values': expected a "
                              "non-empty list")
        return list(values)
    start = sec.take("start", required=True)
    stop = sec.take("stop", required=True)
    points = sec.take("points", required=True)
    sec.finish()
    if not isinstance(points, int) or points < 1:
        raise ConfigError(f"key '{context}.points': expected a positive "
                          "integer")
    return [start, stop, points]


def _axis_numbers(axis_spec, parse, context: str) -> np.ndarray:
    if len(axis_spec) == 3 and isinstance(axis_spec[2], int):
        lo = parse(axis_spec[0], f"{context}.start")
        hi = parse(axis_spec[1], f"{context}.stop")
        return np.linspace(lo, hi, axis_spec[2])
    return np.array([parse(v, f"{context}.values") for v in axis_spec])


def _grid(raw, context: str) -> SweepGrid:
    sec = _Section(raw, context)
    f_spec = _axis(sec.take("frequency", required=True),
                   f"{context}.frequency")
    p_spec = _axis(sec.take("power", required=True), f"{context}.power")
    sec.finish()
    omega = _axis_numbers(f_spec, parse_frequency, f"{context}.frequency")
    power = _axis_numbers(p_spec, parse_dbm, f"{context}.power")
    return SweepGrid(freq_ghz=omega / (TWO_PI * 1e9), power_dbm=power)


_SYSTEM_FREQ_KEYS = ("omega_q", "omega_a", "omega_c", "U_a", "g_zz",
                     "g_ac", "kappa_a", "kappa_c")
_SYSTEM_TIME_KEYS = ("T1", "T2")


def _system(raw) -> SystemParams:
    sec = _Section(raw, "system")
    kwargs = {}
    for key in _SYSTEM_FREQ_KEYS:
        kwargs[key] = parse_frequency(sec.take(key, required=True),
                                      f"system.{key}")
    for key in _SYSTEM_TIME_KEYS:
        kwargs[key] = parse_time(sec.take(key, required=True),
                                 f"system.{key}")
    sec.finish()
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"system parameters rejected: {exc}") from exc


def _protocol(raw) -> ProtocolConfig:
    sec = _Section(raw, "protocol")
    out = ProtocolConfig(
        ramp_time=parse_time(sec.take("ramp_time", "500 ns"),
                             "protocol.ramp_time"),
        hold_time=parse_time(sec.take("hold_time", "500 ns"),
                             "protocol.hold_time"),
        peak_hold=parse_time(sec.take("peak_hold", "250 ns"),
                             "protocol.peak_hold"),
        pulse_duration=parse_time(sec.take("pulse_duration", "500 ns"),
                                  "protocol.pulse_duration"),
        overdrive_factor=_number(sec.take("overdrive_factor", 1.25),
                                 "protocol.overdrive_factor"))
    sec.finish()
    if out.overdrive_factor < 1.0:
        raise ConfigError("key 'protocol.overdrive_factor': must be >= 1")
    for name in ("ramp_time", "hold_time", "peak_hold", "pulse_duration"):
        if getattr(out, name) <= 0.0:
            raise ConfigError(f"key 'protocol.{name}': must be > 0")
    return out


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{context}': expected a plain number")
    return float(value)


def _readout(raw) -> ReadoutConfig:
    sec = _Section(raw, "readout")
    shots = sec.take("shots_per_point", 200)
    if not isinstance(shots, int) or shots < 1:
        raise ConfigError("key 'readout.shots_per_point': expected a "
                          "positive integer")
    sigma = sec.take("sigma_det", "auto")
    if sigma == "auto":
        sigma_val = None
    else:
        # detection noise shares the units of the integrated output
        # field, which has no conventional suffix; a bare number is
        # accepted here and only here
        sigma_val = _number(sigma, "readout.sigma_det")
        if sigma_val < 0.0:
            raise ConfigError("key 'readout.sigma_det': must be >= 0")
    prep = _number(sec.take("prep_error", 0.003), "readout.prep_error")
    if not 0.0 <= prep < 1.0:
        raise ConfigError("key 'readout.prep_error': must lie in [0, 1)")
    herald = sec.take("herald", False)
    if not isinstance(herald, bool):
        raise ConfigError("key 'readout.herald': expected true or false")
    t_int_raw = sec.take("t_int")
    t_int = (None if t_int_raw is None
             else parse_time(t_int_raw, "readout.t_int"))
    cal = _Section(sec.take("calibration_point", required=True),
                   "readout.calibration_point")
    cal_omega = parse_frequency(cal.take("frequency", required=True),
                                "readout.calibration_point.frequency")
    cal_power = parse_dbm(cal.take("power", required=True),
                          "readout.calibration_point.power")
    cal.finish()
    sec.finish()
    return ReadoutConfig(shots_per_point=shots, sigma_det=sigma_val,
                         prep_error=prep, herald=herald, t_int=t_int,
                         cal_freq_ghz=cal_omega / (TWO_PI * 1e9),
                         cal_power_dbm=cal_power)


def _semantic_dict(system: SystemParams, correction: float,
                   protocol: ProtocolConfig, readout: ReadoutConfig,
                   grids: dict, seed: int) -> dict:
    return {
        "system": {k: getattr(system, k) for k in
                   _SYSTEM_FREQ_KEYS + _SYSTEM_TIME_KEYS},
        "calibration": {"attenuation_correction": correction},
        "protocol": {
            "ramp_time": protocol.ramp_time,
            "hold_time": protocol.hold_time,
            "peak_hold": protocol.peak_hold,
            "pulse_duration": protocol.pulse_duration,
            "overdrive_factor": protocol.overdrive_factor,
        },
        "readout": {
            "shots_per_point": readout.shots_per_point,
            "sigma_det": readout.sigma_det,
            "prep_error": readout.prep_error,
            "herald": readout.herald,
            "t_int": readout.t_int,
            "calibration_point": [readout.cal_freq_ghz,
                                  readout.cal_power_dbm],
        },
        "grids": {name: {"freq_ghz": list(g.freq_ghz),
                         "power_dbm": list(g.power_dbm)}
                  for name, g in sorted(grids.items())},
        "seed": seed,
    }


def config_hash_of(semantic: dict) -> str:
    """sha256 over the canonical JSON of the normalized config.

    Hashing the parsed values (not the text) means two spellings of the
    same physics ("7.5 GHz" vs "7500 MHz") hash identically, and any
    semantic change (including the seed) changes the hash.  Thread
    count and output paths are execution details and excluded.
    """
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def with_seed(config: RunConfig, seed: int) -> RunConfig:
    """Copy with a new master seed; the config hash follows (the seed
    is semantic: it changes Monte-Carlo artifacts)."""
    if seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    semantic = _semantic_dict(config.system, config.attenuation_correction,
                              config.protocol, config.readout,
                              config.grids, seed)
    return dataclasses.replace(config, seed=seed,
                               config_hash=config_hash_of(semantic))


def with_threads(config: RunConfig, threads: int) -> RunConfig:
    """Copy with a new worker count; hash unchanged (execution detail)."""
    if threads < 1:
        raise ConfigError("threads must be a positive integer")
    return dataclasses.replace(config, threads=threads)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    top = _Section(raw, "config")
    system = _system(top.take("system", required=True))

    cal = _Section(top.take("calibration", {}), "calibration")
    corr_raw = cal.take("attenuation_correction", "0 dB")
    correction = parse_db(corr_raw, "calibration.attenuation_correction")
    cal.finish()

    protocol = _protocol(top.take("protocol", {}))
    readout = _readout(top.take("readout", required=True))

    grids_raw = top.take("grids", {})
    if not isinstance(grids_raw, dict):
        raise ConfigError("key 'grids': expected a mapping")
    grids = {name: _grid(sub, f"grids.{name}")
             for name, sub in grids_raw.items()}

    seed = top.take("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("key 'seed': expected a non-negative integer")
    threads = top.take("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("key 'threads': expected a positive integer")
    top.finish()

    if not math.isfinite(correction) or abs(correction) > 120.0:
        raise ConfigError("key 'calibration.attenuation_correction': "
                          "implausible magnitude")

    semantic = _semantic_dict(system, correction, protocol, readout,
                              grids, seed)
    return RunConfig(system=system, attenuation_correction=correction,
                     protocol=protocol, readout=readout, grids=grids,
                     seed=seed, threads=threads,
                     config_hash=config_hash_of(semantic))
