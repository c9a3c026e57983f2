"""Parameter algebra of the coupled cavity-ancilla-qubit circuit.

The circuit is a linear readout cavity (c) exchange-coupled with rate
g_ac to a Kerr ancilla (a); the qubit enters only through a
longitudinal sigma_z coupling g_zz to the ancilla occupation.  The two
linear modes hybridize into an upper and a lower polariton; every
polariton quantity (cross-Kerr, self-Kerr, linewidth, drive weight)
follows from the single mixing angle theta.

All frequencies and rates are angular (rad/s).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields


class QubitState(enum.Enum):
    """Qubit basis state conditioning the mode frequencies."""

    g = "g"
    e = "e"

    @property
    def sigma_z(self) -> float:
        """<sigma_z> for this state: +1 for e, -1 for g."""
        return 1.0 if self is QubitState.e else -1.0


@dataclass(frozen=True)
class SystemParams:
    """Bare circuit constants.

    Attributes
    ----------
    omega_q, omega_a, omega_c:
        Qubit, ancilla and cavity angular frequencies (rad/s).
    U_a:
        Ancilla self-Kerr (rad/s); positive for a softening mode.
    g_zz:
        Longitudinal qubit-ancilla coupling (rad/s).
    g_ac:
        Ancilla-cavity exchange coupling (rad/s).
    kappa_a, kappa_c:
        Energy decay rates of ancilla and cavity (rad/s).
    T1, T2:
        Qubit relaxation / coherence times (s).  T2 and omega_q are
        carried for bookkeeping; no semiclassical observable computed
        here depends on them.
    """

    omega_q: float
    omega_a: float
    omega_c: float
    U_a: float
    g_zz: float
    g_ac: float
    kappa_a: float
    kappa_c: float
    T1: float
    T2: float

    def __post_init__(self):
        if self.omega_a <= 0.0 or self.omega_c <= 0.0:
            raise ValueError("mode frequencies must be positive")
        for name in ("kappa_a", "kappa_c", "U_a", "g_zz", "g_ac"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.T1 <= 0.0 or self.T2 <= 0.0:
            raise ValueError("T1 and T2 must be positive")
        if self.U_a >= self.omega_a:
            raise ValueError("U_a must be small compared to omega_a")

    def replace(self, **kw) -> "SystemParams":
        cur = {f.name: getattr(self, f.name) for f in fields(self)}
        cur.update(kw)
        return SystemParams(**cur)


@dataclass(frozen=True)
class PolaritonParams:
    """Derived normal-mode parameters at a fixed mixing angle."""

    theta: float
    omega_u: float
    omega_l: float
    chi_u: float
    chi_l: float
    U_uu: float
    U_ll: float
    U_ul: float
    kappa_u: float
    kappa_l: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 0.5 * math.pi:
            raise ValueError("theta outside [0, pi/2]")

    def drive_weight(self, mode: str) -> float:
        """Cavity-drive weight of a polariton: sin(theta) for the upper
        mode, cos(theta) for the lower one."""
        _check_mode(mode)
        return math.sin(self.theta) if mode == "u" else math.cos(self.theta)


def _check_mode(mode: str) -> None:
    if mode not in ("u", "l"):
        raise ValueError(f"mode must be 'u' or 'l', got {mode!r}")


def hybridization_angle(delta_ac: float, g_ac: float) -> float:
    """Mixing angle theta of the two coupled linear modes.

    tan(2 theta) = 2 g_ac / delta_ac with delta_ac = omega_a - omega_c,
    evaluated with atan2 so the angle passes smoothly through pi/4 at
    zero detuning and stays inside (0, pi/2) for any detuning sign.
    """
    if g_ac <= 0.0:
        raise ValueError("hybridization angle requires g_ac > 0")
    return 0.5 * math.atan2(2.0 * g_ac, delta_ac)


def shifted_ancilla_frequency(sys: SystemParams,
                              eta: QubitState | None) -> float:
    """Qubit-conditioned ancilla frequency omega_a - g_zz <sigma_z>.

    eta = None returns the bare (unconditioned) frequency.  The excited
    state pulls the ancilla down for positive g_zz.
    """
    if eta is None:
        return sys.omega_a
    return sys.omega_a - sys.g_zz * eta.sigma_z


def polariton_params(sys: SystemParams,
                     eta: QubitState | None = None) -> PolaritonParams:
    """Normal-mode decomposition of the (optionally qubit-shifted) circuit.

    With eta given, theta is recomputed from the shifted detuning, so the
    returned frequencies are the exact linear normal modes conditioned on
    that qubit state.  With eta = None the bare ancilla frequency is used.
    """
    omega_a = shifted_ancilla_frequency(sys, eta)
    delta = omega_a - sys.omega_c
    theta = hybridization_angle(delta, sys.g_ac)
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    s2t = math.sin(2.0 * theta)
    return PolaritonParams(
        theta=theta,
        omega_u=s2 * sys.omega_c + c2 * omega_a + s2t * sys.g_ac,
        omega_l=c2 * sys.omega_c + s2 * omega_a - s2t * sys.g_ac,
        chi_u=sys.g_zz * c2,
        chi_l=sys.g_zz * s2,
        U_uu=sys.U_a * c2 * c2,
        U_ll=sys.U_a * s2 * s2,
        U_ul=sys.U_a * s2t * s2t / 2.0,
        kappa_u=sys.kappa_c * s2 + sys.kappa_a * c2,
        kappa_l=sys.kappa_c * c2 + sys.kappa_a * s2,
    )


def shifted_polariton_frequency(pp: PolaritonParams, mode: str,
                                eta: QubitState) -> float:
    """Qubit-conditioned polariton frequency omega_j - chi_j <sigma_z>.

    Valid when pp was built without a qubit condition; the cross-Kerr
    shift then plays the role of the first-order frequency pull."""
    _check_mode(mode)
    omega = pp.omega_u if mode == "u" else pp.omega_l
    chi = pp.chi_u if mode == "u" else pp.chi_l
    return omega - chi * eta.sigma_z


def critical_photon_number(kappa: float, U: float) -> float:
    """Occupation scale kappa / (3 sqrt(3) U) at which a softening Kerr
    mode develops bistability under detuned driving."""
    if U == 0.0:
        raise ValueError("linear mode has no bistability threshold (U = 0)")
    if kappa < 0.0 or U < 0.0:
        raise ValueError("kappa and U must be >= 0")
    return kappa / (3.0 * math.sqrt(3.0) * U)


def parameter_curves(sys: SystemParams, thetas) -> dict[str, list[float]]:
    """Polariton parameters swept over a mixing-angle grid.

    Evaluates the angle algebra row by row at the supplied theta values
    (the underlying frequencies are irrelevant here; only the couplings,
    Kerr strength and linewidths of `sys` enter).  Returns a column dict
    ready for CSV serialization.
    """
    cols: dict[str, list[float]] = {
        "theta": [], "chi_u": [], "chi_l": [], "U_uu": [], "U_ll": [],
        "U_ul": [], "kappa_u": [], "kappa_l": [],
    }
    for theta in thetas:
        th = float(theta)
        if not 0.0 <= th <= 0.5 * math.pi:
            raise ValueError("theta grid must lie inside [0, pi/2]")
        s2, c2 = math.sin(th) ** 2, math.cos(th) ** 2
        s2t = math.sin(2.0 * th)
        cols["theta"].append(th)
        cols["chi_u"].append(sys.g_zz * c2)
        cols["chi_l"].append(sys.g_zz * s2)
        cols["U_uu"].append(sys.U_a * c2 * c2)
        cols["U_ll"].append(sys.U_a * s2 * s2)
        cols["U_ul"].append(sys.U_a * s2t * s2t / 2.0)
        cols["kappa_u"].append(sys.kappa_c * s2 + sys.kappa_a * c2)
        cols["kappa_l"].append(sys.kappa_c * c2 + sys.kappa_a * s2)
    return cols
