"""Time-domain integration of the two-mode equations and hysteresis maps.

The rotating-frame equations of motion for the ancilla field alpha and
the readout-mode field gamma are

    d(alpha)/dt = -[kappa_a/2 - i (omega_d - omega_a_eff)] alpha
                  + i U_a |alpha|^2 alpha - i g_ac gamma
    d(gamma)/dt = -[kappa_c/2 - i (omega_d - omega_c)] gamma
                  - i Omega_c(t) - i g_ac alpha

with omega_a_eff the qubit-state-conditioned ancilla frequency.  The
drive envelope Omega_c(t) is piecewise linear.  Integration runs on a
compiled adaptive Dormand-Prince 5(4) kernel; scipy integrators are
deliberately not used here so a grid cell costs ~1 ms and full maps
stay interactive on one core.

Hysteresis protocol (per grid cell): ramp to the measurement amplitude,
hold, overdrive to a peak well above the up-switching threshold, hold,
ramp back to the same measurement amplitude, hold.  Quasi-steady
outputs are averaged over the final 20% of the two measurement
plateaus; their difference is the hysteretic signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._integrator import (
    STATUS_NOT_FINITE,
    STATUS_OK,
    STATUS_STEP_BUDGET,
    STATUS_STEP_UNDERFLOW,
    integrate_dp5,
)
from .model import QubitState, SystemParams, shifted_ancilla_frequency
from .steady import (
    DriveSpec,
    coupled_steady_states,
    fold_amplitudes,
    output_field,
)

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12

# Fraction of each hold plateau used for the quasi-steady average.
AVERAGE_FRACTION = 0.2
# Samples per averaging window.
WINDOW_SAMPLES = 33
# Relative hysteretic signal above which a cell counts as bistable.
HYSTERESIS_REL_THRESHOLD = 1e-3


class IntegrationError(RuntimeError):
    """Integration failed; carries the time at which it gave up."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(message)
        self.t_fail = t_fail


@dataclass(frozen=True)
class DriveProtocol:
    """Drive at omega_d with a piecewise-linear amplitude envelope.

    times are strictly increasing and start at 0; amplitudes are the
    envelope values at those knots, linearly interpolated in between
    and clamped outside.
    """

    omega_d: float
    times: tuple
    amplitudes: tuple

    def __post_init__(self):
        if len(self.times) != len(self.amplitudes):
            raise ValueError("times and amplitudes must have equal length")
        if len(self.times) < 1:
            raise ValueError("envelope needs at least one knot")
        if self.times[0] != 0.0:
            raise ValueError("envelope must start at t = 0")
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            raise ValueError("envelope times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise ValueError("envelope knots must be finite")
        if np.any(a < 0.0):
            raise ValueError("envelope amplitudes must be >= 0")
        if not math.isfinite(self.omega_d):
            raise ValueError("omega_d must be finite")

    @property
    def duration(self) -> float:
        return self.times[-1]

    def amplitude(self, t):
        """Envelope value at time t (scalar or array)."""
        return np.interp(t, self.times, self.amplitudes)

    @classmethod
    def constant(cls, omega_d: float, amplitude: float,
                 duration: float) -> "DriveProtocol":
        return cls(omega_d, (0.0, float(duration)),
                   (float(amplitude), float(amplitude)))

    @classmethod
    def ramp_hold(cls, omega_d: float, amplitude: float, ramp_time: float,
                  hold_time: float) -> "DriveProtocol":
        a = float(amplitude)
        return cls(omega_d, (0.0, float(ramp_time),
                             float(ramp_time) + float(hold_time)),
                   (0.0, a, a))

    @classmethod
    def hysteresis_loop(cls, omega_d: float, amplitude: float,
                        peak_amplitude: float, ramp_time: float,
                        hold_time: float,
                        peak_hold: float) -> "DriveProtocol":
        """Up/overdrive/down loop measuring twice at `amplitude`."""
        a = float(amplitude)
        p = float(peak_amplitude)
        if p < a:
            raise ValueError("peak_amplitude must be >= amplitude")
        t1 = float(ramp_time)
        t2 = t1 + float(hold_time)
        t3 = t2 + float(ramp_time)
        t4 = t3 + float(peak_hold)
        t5 = t4 + float(ramp_time)
        t6 = t5 + float(hold_time)
        return cls(omega_d, (0.0, t1, t2, t3, t4, t5, t6),
                   (0.0, a, a, p, p, a, a))


@dataclass(frozen=True)
class Trajectory:
    """Sampled fields along one integration run."""

    times: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    kappa_c: float

    @property
    def c_out(self) -> np.ndarray:
        """Output field sqrt(kappa_c) * gamma at the sample times."""
        return math.sqrt(self.kappa_c) * self.gamma

    @property
    def n_a(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def n_c(self) -> np.ndarray:
        return np.abs(self.gamma) ** 2

    @property
    def final_state(self) -> tuple:
        return complex(self.alpha[-1]), complex(self.gamma[-1])


def _frame_rates(sys: SystemParams, eta, omega_d: float):
    """Rotating-frame coefficients (ka2, da, ua, g, kc2, dc)."""
    omega_a_eff = shifted_ancilla_frequency(sys, eta)
    return (0.5 * sys.kappa_a, omega_d - omega_a_eff, sys.U_a, sys.g_ac,
            0.5 * sys.kappa_c, omega_d - sys.omega_c)


_STATUS_TEXT = {
    STATUS_STEP_UNDERFLOW: "step size underflow",
    STATUS_NOT_FINITE: "state left the finite domain",
    STATUS_STEP_BUDGET: "step budget exhausted",
}


def _run_kernel(sys: SystemParams, eta, protocol: DriveProtocol,
                state, t0: float, t_eval: np.ndarray,
                rtol: float, atol: float):
    """Drive the compiled stepper; raise IntegrationError on failure."""
    ka2, da, ua, g, kc2, dc = _frame_rates(sys, eta, protocol.omega_d)
    tk = np.asarray(protocol.times, dtype=float)
    ak = np.asarray(protocol.amplitudes, dtype=float)
    a0 = complex(state[0])
    c0 = complex(state[1])
    samples, status, t_fail = integrate_dp5(
        a0, c0, float(t0), tk, ak, ka2, da, ua, g, kc2, dc,
        np.ascontiguousarray(t_eval, dtype=float), float(rtol), float(atol))
    if status != STATUS_OK:
        reason = _STATUS_TEXT.get(status, "unknown failure")
        raise IntegrationError(
            f"integration failed at t = {t_fail:.6e} s ({reason})", t_fail)
    return samples


def integrate(sys: SystemParams, eta, protocol: DriveProtocol,
              initial=(0j, 0j), t_eval=None, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL,
              sample_dt: float = 1e-9) -> Trajectory:
    """Integrate the equations of motion under the given protocol.

    eta is the (static) qubit state conditioning the ancilla frequency,
    or None for the bare frequency.  The first sample reproduces the
    initial condition when t_eval starts at 0 (the default grid does).
    """
    if t_eval is None:
        n = max(2, int(round(protocol.duration / sample_dt)) + 1)
        t_eval = np.linspace(0.0, protocol.duration, n)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.ndim != 1 or t_eval.size == 0:
            raise ValueError("t_eval must be a non-empty 1-d array")
        if np.any(np.diff(t_eval) < 0.0):
            raise ValueError("t_eval must be sorted ascending")
        if t_eval[0] < 0.0 or t_eval[-1] > protocol.duration * (1 + 1e-12):
            raise ValueError("t_eval must lie within the protocol duration")
    samples = _run_kernel(sys, eta, protocol, initial, 0.0, t_eval,
                          rtol, atol)
    alpha = samples[:, 0] + 1j * samples[:, 1]
    gamma = samples[:, 2] + 1j * samples[:, 3]
    return Trajectory(times=t_eval, alpha=alpha, gamma=gamma,
                      kappa_c=sys.kappa_c)


@dataclass(frozen=True)
class HysteresisResult:
    """Quasi-steady outputs measured on the way up and on the way down."""

    c_out_up: complex
    c_out_down: complex
    bifurcated_up: bool
    bifurcated_down: bool

    @property
    def D_ud(self) -> float:
        return abs(self.c_out_up - self.c_out_down)


def _branch_references(sys: SystemParams, eta, omega_d: float,
                       amplitude: float):
    """(low, high, have_fold, above_up) |c_out| references at a drive point.

    low/high are the smallest and largest steady-state output
    magnitudes among all real roots of the response cubic (stable or
    not, so the references stay continuous across the folds).
    """
    drive = DriveSpec(omega_d=omega_d, Omega_c=amplitude)
    branches = coupled_steady_states(sys, eta, drive)
    mags = [abs(output_field(b, sys.kappa_c)) for b in branches]
    folds = fold_amplitudes(sys, eta, omega_d)
    above_up = folds is not None and amplitude > folds[1]
    return min(mags), max(mags), folds is not None, above_up


def _is_bifurcated(mag: float, low: float, high: float, have_fold: bool,
                   above_up: bool) -> bool:
    """Bifurcation detector for a quasi-steady output magnitude.

    With two coexisting branches, the midpoint between the low and high
    references separates them.  With a single root the distinction is
    made by where that root sits relative to the fold interval: above
    the up-switching fold the unique branch is the high one.
    """
    if high > low * (1.0 + 1e-9):
        return mag > 0.5 * (low + high)
    return bool(have_fold and above_up)


def ramp_hysteresis(sys: SystemParams, eta, omega_d: float,
                    amplitude: float, ramp_time: float = 500e-9,
                    hold_time: float = 500e-9, peak_amplitude=None,
                    peak_hold: float = 250e-9, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL) -> HysteresisResult:
    """Run the up/overdrive/down loop and compare the two plateaus.

    The overdrive peak defaults to 1.25x the measurement amplitude; map
    drivers pass the top of their amplitude grid instead so the
    down-sweep of every cell starts from a latched high state.
    """
    if amplitude < 0.0:
        raise ValueError("amplitude must be >= 0")
    if ramp_time <= 0.0 or hold_time <= 0.0 or peak_hold <= 0.0:
        raise ValueError("protocol durations must be > 0")
    if peak_amplitude is None:
        peak_amplitude = 1.25 * amplitude
    peak_amplitude = max(float(peak_amplitude), float(amplitude))

    protocol = DriveProtocol.hysteresis_loop(
        omega_d, amplitude, peak_amplitude, ramp_time, hold_time, peak_hold)
    t_up_end = ramp_time + hold_time
    t_dn_end = protocol.duration
    win = AVERAGE_FRACTION * hold_time
    up_times = np.linspace(t_up_end - win, t_up_end, WINDOW_SAMPLES)
    dn_times = np.linspace(t_dn_end - win, t_dn_end, WINDOW_SAMPLES)
    t_eval = np.concatenate([up_times, dn_times])

    traj = integrate(sys, eta, protocol, t_eval=t_eval, rtol=rtol, atol=atol)
    c = traj.c_out
    c_up = complex(np.mean(c[:WINDOW_SAMPLES]))
    c_dn = complex(np.mean(c[WINDOW_SAMPLES:]))

    low, high, have_fold, above_up = _branch_references(
        sys, eta, omega_d, amplitude)
    return HysteresisResult(
        c_out_up=c_up, c_out_down=c_dn,
        bifurcated_up=_is_bifurcated(abs(c_up), low, high, have_fold,
                                     above_up),
        bifurcated_down=_is_bifurcated(abs(c_dn), low, high, have_fold,
                                       above_up))


@dataclass(frozen=True)
class BistabilityScan:
    """Hysteretic-signal map over a frequency x amplitude grid.

    D_ud[i, j] belongs to omega_grid[i], amplitudes[i, j]; amplitudes
    is stored as one row per frequency (rows are identical when the
    drive calibration is frequency independent).  B_up/B_down are
    per-frequency switching amplitudes interpolated from the edges of
    the thresholded region (NaN where the column shows no hysteresis).
    """

    omega_grid: np.ndarray
    amplitudes: np.ndarray
    c_up: np.ndarray
    c_down: np.ndarray
    D_ud: np.ndarray
    rel_D: np.ndarray
    mask: np.ndarray
    B_up: np.ndarray
    B_down: np.ndarray
    simply_connected: bool


def _column_edges(amps: np.ndarray, rel: np.ndarray, thr: float):
    """(B_down, B_up) for one frequency column of relative D_ud.

    Edges of the above-threshold run, log-interpolated to sub-cell
    precision against the neighbouring below-threshold cells.
    """
    above = rel > thr
    if not np.any(above):
        return math.nan, math.nan
    idx = np.nonzero(above)[0]
    lo, hi = idx[0], idx[-1]

    def cross(i_out, i_in):
        # threshold crossing between an outside and an inside cell
        r0, r1 = rel[i_out], rel[i_in]
        if not (np.isfinite(r0) and r0 > 0.0 and r1 > r0):
            return amps[i_in]
        w = (math.log(thr) - math.log(r0)) / (math.log(r1) - math.log(r0))
        w = min(max(w, 0.0), 1.0)
        return amps[i_out] + w * (amps[i_in] - amps[i_out])

    b_down = amps[lo] if lo == 0 else cross(lo - 1, lo)
    b_up = amps[hi] if hi == len(amps) - 1 else cross(hi + 1, hi)
    return b_down, b_up


def _scan_column(args):
    (sys, eta, omega_d, amplitudes, ramp_time, hold_time, peak_amplitude,
     peak_hold, rtol, atol) = args
    n = len(amplitudes)
    c_up = np.empty(n, dtype=complex)
    c_dn = np.empty(n, dtype=complex)
    for j, amp in enumerate(amplitudes):
        try:
            r = ramp_hysteresis(sys, eta, omega_d, amp,
                                ramp_time=ramp_time, hold_time=hold_time,
                                peak_amplitude=peak_amplitude,
                                peak_hold=peak_hold, rtol=rtol, atol=atol)
        except IntegrationError as exc:
            raise IntegrationError(
                f"{exc} [grid cell omega_d/2pi = "
                f"{omega_d / math.tau:.9e} Hz, Omega_c = {amp:.9e} rad/s]",
                exc.t_fail) from exc
        c_up[j] = r.c_out_up
        c_dn[j] = r.c_out_down
    return c_up, c_dn


def _simply_connected(mask: np.ndarray) -> bool:
    """True when the mask has one component and no enclosed holes."""
    from scipy import ndimage

    if not np.any(mask):
        return True
    _, n_feat = ndimage.label(mask)
    if n_feat != 1:
        return False
    # a hole is a background component that does not touch the border
    bg_labels, n_bg = ndimage.label(~mask)
    border = set(np.unique(np.concatenate([
        bg_labels[0, :], bg_labels[-1, :], bg_labels[:, 0],
        bg_labels[:, -1]])))
    border.discard(0)
    return len(border) >= n_bg


def bistability_map(sys: SystemParams, eta, omega_grid,
                    amplitudes, ramp_time: float = 500e-9,
                    hold_time: float = 500e-9, peak_amplitude=None,
                    peak_hold: float = 250e-9,
                    threshold_rel: float = HYSTERESIS_REL_THRESHOLD,
                    threads: int = 1, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL) -> BistabilityScan:
    """Hysteresis map: one ramp loop per (omega_d, amplitude) cell.

    amplitudes are drive strengths Omega_c in rad/s, sorted ascending:
    either one shared vector or a (len(omega_grid), n) array with one
    row per frequency (drive calibration can be frequency dependent).
    peak_amplitude may be a scalar or one value per frequency; it
    defaults to 1.25x the top of each amplitude row so the down-sweep
    of every cell starts from the latched state whenever the column is
    bistable at all.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if omega_grid.size == 0 or amplitudes.size == 0:
        raise ValueError("grids must be non-empty")
    if amplitudes.ndim == 1:
        amp_rows = np.broadcast_to(amplitudes,
                                   (omega_grid.size, amplitudes.size))
    elif amplitudes.ndim == 2 and amplitudes.shape[0] == omega_grid.size:
        amp_rows = amplitudes
    else:
        raise ValueError("amplitudes must be 1-d or (n_freq, n_amp)")
    if np.any(np.diff(amp_rows, axis=1) <= 0.0):
        raise ValueError("amplitudes must be sorted strictly ascending")

    if peak_amplitude is None:
        peaks = 1.25 * amp_rows[:, -1]
    else:
        peaks = np.broadcast_to(np.asarray(peak_amplitude, dtype=float),
                                (omega_grid.size,))
    jobs = []
    for i, w in enumerate(omega_grid):
        jobs.append((sys, eta, w, amp_rows[i], ramp_time, hold_time,
                     peaks[i], peak_hold, rtol, atol))
    if threads > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(threads) as pool:
            results = pool.map(_scan_column, jobs)
    else:
        results = [_scan_column(job) for job in jobs]

    n_w, n_a = omega_grid.size, amp_rows.shape[1]
    c_up = np.empty((n_w, n_a), dtype=complex)
    c_dn = np.empty((n_w, n_a), dtype=complex)
    for i, (cu, cd) in enumerate(results):
        c_up[i] = cu
        c_dn[i] = cd

    D = np.abs(c_up - c_dn)
    ref = np.maximum(np.abs(c_up), np.abs(c_dn))
    rel = np.where(ref > 0.0, D / np.where(ref > 0.0, ref, 1.0), 0.0)
    mask = rel > threshold_rel

    B_up = np.empty(n_w)
    B_down = np.empty(n_w)
    for i in range(n_w):
        B_down[i], B_up[i] = _column_edges(amp_rows[i], rel[i],
                                           threshold_rel)

    return BistabilityScan(omega_grid=omega_grid,
                           amplitudes=np.array(amp_rows), c_up=c_up,
                           c_down=c_dn, D_ud=D, rel_D=rel, mask=mask,
                           B_up=B_up, B_down=B_down,
                           simply_connected=_simply_connected(mask))


def multistable_mask(sys: SystemParams, eta, omega_grid,
                     amplitudes) -> np.ndarray:
    """Root-count route to the bistable region (no time integration).

    True where the response cubic has three real roots with two of them
    stable.  Provides the independent cross-check for the hysteresis
    map: both routes must agree away from the region boundary.
    amplitudes may be a shared vector or one row per frequency.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.ndim == 1:
        amp_rows = np.broadcast_to(amplitudes,
                                   (omega_grid.size, amplitudes.size))
    else:
        amp_rows = amplitudes
    out = np.zeros(amp_rows.shape, dtype=bool)
    for i, w in enumerate(omega_grid):
        folds = fold_amplitudes(sys, eta, w)
        if folds is None:
            continue
        lo, hi = folds
        out[i] = (amp_rows[i] > lo) & (amp_rows[i] < hi)
    return out


def pointer_trajectory_distance(sys: SystemParams, omega_d: float,
                                amplitude: float,
                                ramp_time: float = 500e-9,
                                hold_time: float = 500e-9) -> float:
    """|difference of quasi-steady outputs| for e vs g preparations.

    Ramp-up protocol only (no hysteresis loop), mirroring a plain
    readout pulse; used for cross-checking the steady-state pointer
    distance away from the bistable wedge.
    """
    outs = {}
    protocol = DriveProtocol.ramp_hold(omega_d, amplitude, ramp_time,
                                       hold_time)
    t_end = protocol.duration
    win = AVERAGE_FRACTION * hold_time
    t_eval = np.linspace(t_end - win, t_end, WINDOW_SAMPLES)
    for eta in (QubitState.g, QubitState.e):
        traj = integrate(sys, eta, protocol, t_eval=t_eval)
        outs[eta] = complex(np.mean(traj.c_out))
    return abs(outs[QubitState.e] - outs[QubitState.g])
