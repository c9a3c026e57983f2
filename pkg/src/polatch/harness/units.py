"""Unit-suffixed quantity parsing and the drive power calibration.

Every physical number in a config file carries an explicit unit
("7.575 GHz", "-89 dBm", "500 ns").  Frequencies are cyclic (what a
spectrum analyzer displays) and are converted to angular rad/s on
parse; rates are handled identically.  Bare numbers are rejected for
any dimensioned key, which removes the usual factor-2pi and ns/us
ambiguities at the boundary of the system.
"""

from __future__ import annotations

import math
import re

from scipy.constants import hbar

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Malformed configuration; message names the offending key."""


_QUANTITY = re.compile(r"^\s*([+-]?[0-9.eE+-]+)\s*([A-Za-zµ]+)\s*$")

_FREQUENCY_SCALE = {
    "GHz": 1e9, "MHz": 1e6, "kHz": 1e3, "Hz": 1.0,
}
_TIME_SCALE = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9,
}


def _split(text, key: str):
    if not isinstance(text, str):
        raise ConfigError(
            f"key '{key}': expected a unit-suffixed string, got {text!r} "
            "(bare numbers are not accepted for dimensioned quantities)")
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"key '{key}': cannot parse quantity {text!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise ConfigError(f"key '{key}': bad number in {text!r}") from None
    return value, m.group(2)


def parse_frequency(text, key: str) -> float:
    """'7.575 GHz' -> angular frequency in rad/s."""
    value, unit = _split(text, key)
    if unit not in _FREQUENCY_SCALE:
        raise ConfigError(
            f"key '{key}': {unit!r} is not a frequency unit "
            f"(expected one of {sorted(_FREQUENCY_SCALE)})")
    return TWO_PI * value * _FREQUENCY_SCALE[unit]


def parse_time(text, key: str) -> float:
    """'500 ns' -> seconds."""
    value, unit = _split(text, key)
    if unit not in _TIME_SCALE:
        raise ConfigError(
            f"key '{key}': {unit!r} is not a time unit "
            f"(expected one of {sorted(_TIME_SCALE)})")
    return value * _TIME_SCALE[unit]


def parse_dbm(text, key: str) -> float:
    """'-89 dBm' -> the dBm number itself."""
    value, unit = _split(text, key)
    if unit != "dBm":
        raise ConfigError(f"key '{key}': expected a dBm value, got {text!r}")
    return value


def parse_db(text, key: str) -> float:
    """'-15.0 dB' -> the dB number itself."""
    value, unit = _split(text, key)
    if unit != "dB":
        raise ConfigError(f"key '{key}': expected a dB value, got {text!r}")
    return value


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    return 10.0 * math.log10(p_watts) + 30.0


def power_to_amplitude(p_dbm: float, omega_d: float, kappa_c: float,
                       attenuation_correction: float = 0.0) -> float:
    """Input power in dBm -> drive amplitude Omega_c in rad/s.

    The correction (in dB) absorbs the uncertainty of the input line
    attenuation; it is added to the stated power before conversion.
    The photon flux at the cavity input is P/(hbar omega_d), and the
    drive rate follows as sqrt(kappa_c P / hbar omega_d).
    """
    if not (math.isfinite(p_dbm) and math.isfinite(omega_d)
            and math.isfinite(kappa_c)):
        raise ValueError("power conversion needs finite inputs")
    p_watts = dbm_to_watts(p_dbm + attenuation_correction)
    return math.sqrt(kappa_c * p_watts / (hbar * omega_d))


def amplitude_to_power(omega_c_amp: float, omega_d: float, kappa_c: float,
                       attenuation_correction: float = 0.0) -> float:
    """Inverse of power_to_amplitude (rad/s -> stated input power dBm)."""
    if omega_c_amp <= 0.0:
        return -math.inf
    p_watts = omega_c_amp ** 2 * hbar * omega_d / kappa_c
    return watts_to_dbm(p_watts) - attenuation_correction
