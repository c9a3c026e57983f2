import math
import pathlib

import pytest

from polatch.harness.config import load_config
from polatch.model import SystemParams

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"

TWO_PI = 2.0 * math.pi


def _mhz(v: float) -> float:
    return TWO_PI * 1e6 * v


def _ghz(v: float) -> float:
    return TWO_PI * 1e9 * v


def make_flux5() -> SystemParams:
    """The near-resonant fixture, constructed directly (not via YAML) so
    unit tests do not depend on the config loader."""
    return SystemParams(
        omega_q=_ghz(6.283),
        omega_a=_ghz(7.383103),
        omega_c=_ghz(7.144897),
        U_a=_mhz(13.5),
        g_zz=_mhz(34.0),
        g_ac=_mhz(287.4),
        kappa_a=_mhz(5.6),
        kappa_c=_mhz(12.7),
        T1=3.3e-6,
        T2=3.3e-6,
    )


def make_flux0() -> SystemParams:
    return make_flux5().replace(omega_a=_ghz(7.8083))


@pytest.fixture(scope="session")
def flux5() -> SystemParams:
    return make_flux5()


@pytest.fixture(scope="session")
def flux0() -> SystemParams:
    return make_flux0()


@pytest.fixture(scope="session")
def flux5_config():
    return load_config(CONFIG_DIR / "flux5.yaml")
