"""Configuration, unit calibration, sweep orchestration and the CLI."""

from .artifacts import (MapArtifact, base_metadata, read_artifact,
                        run_timestamp, write_artifact, write_json)
from .config import (ConfigError, ProtocolConfig, ReadoutConfig, RunConfig,
                     SweepGrid, config_hash_of, load_config, with_seed,
                     with_threads)
from .sweeps import (grid_amplitudes, resolve_sigma_det, sweep_bistability,
                     sweep_deg_map, sweep_fidelity)
from .units import (amplitude_to_power, dbm_to_watts, parse_db, parse_dbm,
                    parse_frequency, parse_time, power_to_amplitude,
                    watts_to_dbm)

__all__ = [
    "MapArtifact", "base_metadata", "read_artifact", "run_timestamp",
    "write_artifact", "write_json",
    "ConfigError", "ProtocolConfig", "ReadoutConfig", "RunConfig",
    "SweepGrid", "config_hash_of", "load_config", "with_seed",
    "with_threads",
    "grid_amplitudes", "resolve_sigma_det", "sweep_bistability",
    "sweep_deg_map", "sweep_fidelity",
    "amplitude_to_power", "dbm_to_watts", "parse_db", "parse_dbm",
    "parse_frequency", "parse_time", "power_to_amplitude", "watts_to_dbm",
]
