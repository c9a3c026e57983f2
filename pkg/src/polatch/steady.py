"""Steady states of the driven nonlinear circuit.

Adiabatic elimination of the cavity drive chain reduces the coupled
semiclassical fixed-point equations to one real cubic in the ancilla
occupation x = |alpha|^2,

    C^2 x^3 + 2 B C x^2 + (A^2 + B^2) x - |D|^2 = 0,

with A the effective damping, B the effective detuning, C the Kerr
shift per photon and D the effective drive.  The same cubic, with
different coefficient dressing, covers the exactly coupled two-mode
system and the reduced single-polariton description, so the solver and
the branch bookkeeping live here for both.

The cubic is solved in closed form (trigonometric for three real
roots, Cardano otherwise) with one Newton polish per root; the
multistable region in drive amplitude follows in closed form from the
cubic discriminant, which is quadratic in |D|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import QubitState, SystemParams, PolaritonParams, _check_mode

# Degeneracy band for the normalized cubic discriminant and the
# Jacobian marginality band in units of kappa_c.
DISC_EPS = 1e-8
MARGINAL_EPS = 1e-6


@dataclass(frozen=True)
class DriveSpec:
    """Monochromatic cavity drive: angular frequency and amplitude."""

    omega_d: float
    Omega_c: float

    def __post_init__(self):
        if self.Omega_c < 0.0:
            raise ValueError("drive amplitude must be >= 0")
        if self.omega_d <= 0.0:
            raise ValueError("drive frequency must be positive")


@dataclass(frozen=True)
class CubicCoefficients:
    """Effective Duffing coefficients (A, B, C, D) of the occupation cubic."""

    A: float
    B: float
    C: float
    D: complex

    def __post_init__(self):
        if self.A <= 0.0:
            raise ValueError("unphysical damping: effective A must be > 0")
        if self.C < 0.0:
            raise ValueError("Kerr coefficient C must be >= 0")

    @property
    def d2(self) -> float:
        return abs(self.D) ** 2

    def polynomial(self) -> tuple[float, float, float, float]:
        """(c3, c2, c1, c0) of c3 x^3 + c2 x^2 + c1 x + c0."""
        return (self.C ** 2, 2.0 * self.B * self.C,
                self.A ** 2 + self.B ** 2, -self.d2)

    def amplitude(self, x: float) -> complex:
        """Steady field amplitude on the branch with occupation x."""
        return self.D / (self.A - 1j * (self.B + self.C * x))


@dataclass(frozen=True)
class CubicRoot:
    x: float
    stable: bool
    marginal: bool = False


@dataclass(frozen=True)
class SteadyStateBranch:
    """One fixed point of the driven system.

    alpha and gamma are the ancilla and cavity amplitudes; for reduced
    single-polariton solutions they are the back-rotated components of
    the polariton amplitude, so downstream consumers (output field,
    proportions) treat both solution routes uniformly.
    """

    alpha: complex
    gamma: complex
    stable: bool
    marginal: bool = False

    @property
    def n_a(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def n_c(self) -> float:
        return abs(self.gamma) ** 2


def _monic_real_roots(b: float, c: float, d: float):
    """Real roots of x^3 + b x^2 + c x + d, with degeneracy flag.

    Returns (roots ascending, marginal).  Closed-form with discriminant
    branching; marginal means the normalized discriminant sits inside
    the DISC_EPS band, i.e. two roots are effectively merged.
    """
    # depressed form t^3 + p t + q, x = t - b/3
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = -4.0 * p ** 3 - 27.0 * q * q

    x_scale = max(abs(b), math.sqrt(abs(c)), abs(d) ** (1.0 / 3.0), 1e-300)
    disc_norm = disc / x_scale ** 6
    marginal = abs(disc_norm) < DISC_EPS

    shift = -b / 3.0
    if marginal:
        if abs(p) / x_scale ** 2 < 1e-12:
            roots = [shift] * 3                       # triple root
        else:
            simple = 3.0 * q / p + shift
            double = -1.5 * q / p + shift
            roots = sorted([simple, double, double])
    elif disc > 0.0:
        # three distinct real roots: trigonometric form
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg)
        roots = sorted(m * math.cos((phi - 2.0 * math.pi * k) / 3.0) + shift
                       for k in range(3))
    else:
        # one real root: Cardano with cancellation-safe cube root
        s = math.sqrt(q * q / 4.0 + p ** 3 / 27.0)
        u3 = -q / 2.0 - s if q > 0.0 else -q / 2.0 + s
        u = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        roots = [t + shift]

    # Newton polish per root on the undepressed cubic.  Iterated because
    # the closed forms lose the smallest root to cancellation when the
    # roots span many orders of magnitude; a simple well-conditioned
    # root then needs a few steps to come back.  Guarded so a merged
    # pair (df ~ 0) keeps its closed-form value.
    polished = []
    for r in roots:
        f = ((r + b) * r + c) * r + d
        for _ in range(12):
            if f == 0.0:
                break
            df = (3.0 * r + 2.0 * b) * r + c
            if df == 0.0 or abs(f) >= abs(df) * x_scale:
                break
            r_new = r - f / df
            f_new = ((r_new + b) * r_new + c) * r_new + d
            if abs(f_new) >= abs(f):
                break
            r, f = r_new, f_new
        polished.append(r)
    return sorted(polished), marginal


def duffing_cubic_photon_numbers(coeffs: CubicCoefficients) -> list[CubicRoot]:
    """Physical occupations x >= 0 solving the steady-state cubic.

    Ascending order.  With three distinct roots the outer two are the
    stable low/high branches and the middle one is the unstable
    separatrix; a merged (fold) pair is returned twice and flagged
    marginal.  C = 0 degrades to the linear response.
    """
    d2 = coeffs.d2
    if d2 == 0.0:
        return [CubicRoot(0.0, True)]

    c3, c2, c1, c0 = coeffs.polynomial()
    # linear response when the Kerr term vanishes, including C small
    # enough that C^2 underflows
    if c3 == 0.0:
        return [CubicRoot(d2 / (coeffs.A ** 2 + coeffs.B ** 2), True)]

    roots, marginal = _monic_real_roots(c2 / c3, c1 / c3, c0 / c3)
    roots = [max(r, 0.0) for r in roots if r > -1e-9 * (1.0 + abs(r))]

    out = []
    n = len(roots)
    for k, x in enumerate(roots):
        stable = True if n == 1 else (k != 1)
        out.append(CubicRoot(x, stable, marginal))

    # polish sanity: relative polynomial residual (merged fold pairs are
    # only sqrt(eps)-determined, so the hard check applies off the fold)
    for root in out:
        if root.marginal:
            continue
        x = root.x
        res = ((c3 * x + c2) * x + c1) * x + c0
        scale = max(abs(c3) * x ** 3, abs(c2) * x ** 2, abs(c1) * x, abs(c0))
        if scale > 0.0 and abs(res) > 1e-10 * scale:
            raise ArithmeticError(
                f"cubic solver residual {abs(res) / scale:.2e} at x={x!r}")
    return out


def _cavity_denominator(sys: SystemParams, omega_d: float) -> complex:
    dc = sys.kappa_c / 2.0 - 1j * (omega_d - sys.omega_c)
    if dc == 0.0:
        raise ValueError("undamped cavity driven exactly on resonance")
    return dc


def coupled_cubic(sys: SystemParams, eta: QubitState | None,
                  drive: DriveSpec) -> CubicCoefficients:
    """Exact two-mode reduction onto the ancilla occupation.

    Eliminating the linear cavity dresses the ancilla's damping,
    detuning and drive through z = g_ac / (kappa_c/2 - i(omega_d -
    omega_c)).
    """
    from .model import shifted_ancilla_frequency
    z = sys.g_ac / _cavity_denominator(sys, drive.omega_d)
    A = sys.kappa_a / 2.0 + sys.g_ac * z.real
    B = (drive.omega_d - shifted_ancilla_frequency(sys, eta)
         - sys.g_ac * z.imag)
    return CubicCoefficients(A=A, B=B, C=sys.U_a, D=-z * drive.Omega_c)


def coupled_steady_states(sys: SystemParams, eta: QubitState | None,
                          drive: DriveSpec) -> list[SteadyStateBranch]:
    """All fixed points of the coupled equations, ascending in |alpha|^2.

    Stability comes from the cubic branch ordering and is cross-checked
    against the Jacobian spectrum, which wins on disagreement; branches
    with near-zero leading eigenvalue are flagged marginal.
    """
    coeffs = coupled_cubic(sys, eta, drive)
    dc = _cavity_denominator(sys, drive.omega_d)
    branches = []
    for root in duffing_cubic_photon_numbers(coeffs):
        alpha = coeffs.amplitude(root.x)
        gamma = -1j * (drive.Omega_c + sys.g_ac * alpha) / dc
        stable, marginal = root.stable, root.marginal
        lam = jacobian_eigenvalues(sys, eta, drive, alpha, gamma)
        lam_max = max(lam.real)
        if abs(lam_max) <= MARGINAL_EPS * sys.kappa_c:
            marginal = True
        else:
            stable = bool(lam_max < 0.0)
        branches.append(SteadyStateBranch(alpha, gamma, stable, marginal))
    return branches


def jacobian_matrix(sys: SystemParams, eta: QubitState | None,
                    drive: DriveSpec, alpha: complex,
                    gamma: complex) -> np.ndarray:
    """Real 4x4 Jacobian of the EOM at (alpha, gamma).

    State ordering [Re a, Im a, Re c, Im c].  Built from the Wirtinger
    derivatives of the two complex flow components.
    """
    from .model import shifted_ancilla_frequency
    da = drive.omega_d - shifted_ancilla_frequency(sys, eta)
    dc = drive.omega_d - sys.omega_c

    # f_a = -(ka/2 - i da) a + i U |a|^2 a - i g c
    fa_z = -(sys.kappa_a / 2.0 - 1j * da) + 2j * sys.U_a * abs(alpha) ** 2
    fa_zb = 1j * sys.U_a * alpha * alpha
    fa_w = -1j * sys.g_ac
    # f_c = -(kc/2 - i dc) c - i g a - i Omega
    fc_w = -(sys.kappa_c / 2.0 - 1j * dc)
    fc_z = -1j * sys.g_ac

    def block(fz, fzb):
        # d(Re f, Im f)/d(Re z, Im z) from Wirtinger derivatives
        hx = fz + fzb
        hy = 1j * (fz - fzb)
        return np.array([[hx.real, hy.real], [hx.imag, hy.imag]])

    J = np.zeros((4, 4))
    J[0:2, 0:2] = block(fa_z, fa_zb)
    J[0:2, 2:4] = block(fa_w, 0.0)
    J[2:4, 0:2] = block(fc_z, 0.0)
    J[2:4, 2:4] = block(fc_w, 0.0)
    return J


def jacobian_eigenvalues(sys: SystemParams, eta: QubitState | None,
                         drive: DriveSpec, alpha: complex,
                         gamma: complex) -> np.ndarray:
    return np.linalg.eigvals(jacobian_matrix(sys, eta, drive, alpha, gamma))


def jacobian_stability(sys: SystemParams, eta: QubitState | None,
                       drive: DriveSpec, branch: SteadyStateBranch) -> bool:
    """True when every Jacobian eigenvalue has a negative real part."""
    lam = jacobian_eigenvalues(sys, eta, drive, branch.alpha, branch.gamma)
    return bool(max(lam.real) < 0.0)


def polariton_steady_state(pp: PolaritonParams, mode: str,
                           eta: QubitState | None,
                           drive: DriveSpec) -> list[SteadyStateBranch]:
    """Reduced single-polariton Duffing response.

    A_j = kappa_j/2, B_j = omega_d - (omega_j - chi_j <sigma_z>),
    C_j = U_jj, D_j = -i w_j Omega_c with the cavity drive weight w_j.
    Pass eta = None if pp was already built conditioned on a qubit
    state.  Branch amplitudes are rotated back to (alpha, gamma).
    """
    _check_mode(mode)
    from .model import shifted_polariton_frequency
    if eta is None:
        omega_j = pp.omega_u if mode == "u" else pp.omega_l
    else:
        omega_j = shifted_polariton_frequency(pp, mode, eta)
    kappa_j = pp.kappa_u if mode == "u" else pp.kappa_l
    U_jj = pp.U_uu if mode == "u" else pp.U_ll
    w = pp.drive_weight(mode)
    coeffs = CubicCoefficients(A=kappa_j / 2.0, B=drive.omega_d - omega_j,
                               C=U_jj, D=-1j * w * drive.Omega_c)
    st, ct = math.sin(pp.theta), math.cos(pp.theta)
    branches = []
    for root in duffing_cubic_photon_numbers(coeffs):
        m = coeffs.amplitude(root.x)
        if mode == "u":
            alpha, gamma = ct * m, st * m
        else:
            alpha, gamma = -st * m, ct * m
        branches.append(SteadyStateBranch(alpha, gamma, root.stable,
                                          root.marginal))
    return branches


def fold_amplitudes(sys: SystemParams, eta: QubitState | None,
                    omega_d: float) -> tuple[float, float] | None:
    """Drive amplitudes bounding the bistable wedge at one frequency.

    The cubic discriminant is quadratic in s = |D|^2; three real roots
    exist for s between its zeros.  Returns (Omega_down, Omega_up) in
    cavity-drive units, or None when the column is monostable at every
    amplitude.
    """
    probe = DriveSpec(omega_d, 1.0)
    coeffs = coupled_cubic(sys, eta, probe)
    if coeffs.C == 0.0 or coeffs.B >= 0.0:
        return None
    a = coeffs.C ** 2
    b = 2.0 * coeffs.B * coeffs.C
    c = coeffs.A ** 2 + coeffs.B ** 2
    qa = -27.0 * a * a
    qb = 4.0 * b ** 3 - 18.0 * a * b * c
    qc = b * b * c * c - 4.0 * a * c ** 3
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        return None
    s_lo = (-qb + math.sqrt(disc)) / (2.0 * qa)  # qa < 0: this is smaller
    s_hi = (-qb - math.sqrt(disc)) / (2.0 * qa)
    if s_hi <= 0.0:
        return None
    s_lo = max(s_lo, 0.0)
    z_abs = abs(coeffs.D)  # |D| per unit drive amplitude
    return math.sqrt(s_lo) / z_abs, math.sqrt(s_hi) / z_abs


def output_field(branch: SteadyStateBranch, kappa_c: float) -> complex:
    """Output field sqrt(kappa_c) * <c> radiated through the cavity port."""
    return math.sqrt(kappa_c) * branch.gamma


def ramp_up_branch(branches: list[SteadyStateBranch]) -> SteadyStateBranch:
    """The branch an upward amplitude ramp lands on.

    Starting from vacuum and quasi-statically increasing the amplitude,
    the system follows the lowest stable branch until it disappears at
    the upper fold; below that point the lowest stable branch is
    selected, above it only the upper one remains.
    """
    stable = [b for b in branches if b.stable]
    if not stable:
        stable = [b for b in branches if b.marginal]
    if not stable:
        raise ValueError("no stable steady-state branch")
    return min(stable, key=lambda b: b.n_a)


def pointer_distance(sys: SystemParams, drive: DriveSpec) -> float:
    """Distance |<c_out>_e - <c_out>_g| between qubit-conditioned outputs.

    Each conditioned output is evaluated on the branch reached by
    ramping the amplitude up from zero.
    """
    outs = {}
    for eta in (QubitState.g, QubitState.e):
        branch = ramp_up_branch(coupled_steady_states(sys, eta, drive))
        outs[eta] = output_field(branch, sys.kappa_c)
    return abs(outs[QubitState.e] - outs[QubitState.g])


def proportions(branch: SteadyStateBranch) -> tuple[float, float]:
    """Occupation split (p_a, p_c) between ancilla and cavity."""
    total = branch.n_a + branch.n_c
    if total == 0.0:
        raise ValueError("proportions undefined for the vacuum branch")
    return branch.n_a / total, branch.n_c / total
