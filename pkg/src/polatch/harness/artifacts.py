"""Map serialization.

Every sweep produces the same artifact pair: a CSV with one row per
grid cell (columns freq_GHz, power_dBm, value, unit, floats at 17
significant digits so regression diffs are lossless) and a JSON
sidecar with the axes, the config hash, the code version and any
sweep-specific extras such as threshold contours.  Writing is
deliberately dumb and deterministic: rows in frequency-major order,
JSON keys sorted, no timestamps unless the environment pins one.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .. import __version__


def run_timestamp() -> str:
    """Reproducible timestamp.

    Honors SOURCE_DATE_EPOCH when set (the convention used by
    reproducible-build tooling); otherwise returns the literal string
    "unset" so that two runs of the same config stay byte-identical.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return "unset"
    moment = datetime.datetime.fromtimestamp(int(epoch),
                                             tz=datetime.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class MapArtifact:
    """One fully evaluated sweep over a frequency/power grid."""

    name: str
    freq_ghz: np.ndarray     # (n_freq,)
    power_dbm: np.ndarray    # (n_power,)
    values: np.ndarray       # (n_freq, n_power)
    unit: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freq_ghz = np.asarray(self.freq_ghz, dtype=float)
        self.power_dbm = np.asarray(self.power_dbm, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        expect = (self.freq_ghz.size, self.power_dbm.size)
        if self.values.shape != expect:
            raise ValueError(f"value array shape {self.values.shape} does "
                             f"not match axes {expect}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_artifact(art: MapArtifact, out_dir) -> tuple:
    """Write <name>.csv and <name>.json under out_dir, return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, art.name + ".csv")
    json_path = os.path.join(out_dir, art.name + ".json")

    lines = ["freq_GHz,power_dBm,value,unit"]
    for i, f in enumerate(art.freq_ghz):
        for j, p in enumerate(art.power_dbm):
            lines.append(",".join((_fmt(f), _fmt(p),
                                   _fmt(art.values[i, j]), art.unit)))
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    meta = {
        "name": art.name,
        "unit": art.unit,
        "shape": [int(art.freq_ghz.size), int(art.power_dbm.size)],
        "freq_GHz": [float(v) for v in art.freq_ghz],
        "power_dBm": [float(v) for v in art.power_dbm],
        "metadata": art.metadata,
    }
    write_json(meta, json_path)
    return csv_path, json_path


def write_json(obj, path) -> None:
    """Deterministic JSON dump (sorted keys, no NaN)."""
    blob = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(blob + "\n")


def read_artifact(csv_path) -> MapArtifact:
    """Rebuild a MapArtifact from its CSV (and sidecar JSON if present).

    Inverse of write_artifact up to float round-trip, which %.17g makes
    exact; used by the regression tests.
    """
    with open(csv_path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "freq_GHz,power_dBm,value,unit":
        raise ValueError(f"{csv_path}: not a map artifact CSV")
    freqs: dict = {}
    powers: dict = {}
    rows = []
    unit = None
    for line in lines[1:]:
        f_s, p_s, v_s, u = line.split(",")
        if unit is None:
            unit = u
        elif u != unit:
            raise ValueError(f"{csv_path}: mixed units in one artifact")
        f, p, v = float(f_s), float(p_s), float(v_s)
        freqs.setdefault(f, len(freqs))
        powers.setdefault(p, len(powers))
        rows.append((f, p, v))
    freq_axis = np.array(list(freqs), dtype=float)
    power_axis = np.array(list(powers), dtype=float)
    values = np.full((freq_axis.size, power_axis.size), np.nan)
    for f, p, v in rows:
        values[freqs[f], powers[p]] = v

    name = os.path.splitext(os.path.basename(csv_path))[0]
    metadata = {}
    json_path = os.path.splitext(csv_path)[0] + ".json"
    if os.path.exists(json_path):
        with open(json_path, "r", encoding="ascii") as fh:
            metadata = json.load(fh).get("metadata", {})
    return MapArtifact(name=name, freq_ghz=freq_axis, power_dbm=power_axis,
                       values=values, unit=unit or "", metadata=metadata)


def base_metadata(config_hash: str, **extras) -> dict:
    meta = {
        "config_hash": config_hash,
        "code_version": __version__,
        "timestamp": run_timestamp(),
    }
    meta.update(extras)
    return meta
