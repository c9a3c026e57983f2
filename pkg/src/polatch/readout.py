"""Monte-Carlo single-shot simulation of the latching readout.

A shot prepares the qubit, plays a square drive pulse on the readout
mode, and integrates the classical field equations while the qubit
state (which conditions the ancilla frequency) switches at random
relaxation times.  The output record carries the time-averaged output
field with additive detection noise, plus the state of a bifurcation
detector at the end of the pulse.

Randomness contract: every shot builds its own generator from
(rng_seed, shot_index), and draws in a fixed order: one uniform for
the preparation error, then the exponential jump waiting times, then
one complex Gaussian (two normals) for detection noise.  Serial and
parallel execution therefore produce identical records.

The detector is the discriminator of the latching scheme: output
magnitude above the midpoint between the low and high steady-branch
references for three consecutive samples.  Once the high-amplitude
state is reached it persists while the drive stays above the
down-switching threshold, so the detector keeps reporting 'high' even
if the qubit relaxes mid-pulse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .dynamics import (DEFAULT_ATOL, DEFAULT_RTOL, DriveProtocol,
                       IntegrationError, _run_kernel)
from .model import QubitState, SystemParams
from .steady import (
    DriveSpec,
    coupled_steady_states,
    fold_amplitudes,
    output_field,
    ramp_up_branch,
)

SAMPLE_DT = 1e-9
DEBOUNCE_SAMPLES = 3
# low/high reference ratio below which the detector cannot discriminate
DISCRIMINATION_RATIO = 0.5


def _flip(eta: QubitState) -> QubitState:
    return QubitState.g if eta is QubitState.e else QubitState.e


@dataclass(frozen=True)
class NoiseModel:
    """Detection noise, qubit transition rates, and the master seed.

    sigma_det is the per-quadrature standard deviation of the complex
    Gaussian added to the integrated output.  Gamma_down acts while the
    qubit is excited, Gamma_up while it is in the ground state.  With
    herald=True preparation errors are discarded instead of injected.
    """

    sigma_det: float
    Gamma_down: float
    Gamma_up: float = 0.0
    rng_seed: int = 0
    prep_error: float = 0.003
    herald: bool = False

    def __post_init__(self):
        if self.sigma_det < 0.0:
            raise ValueError("sigma_det must be >= 0")
        if self.Gamma_down < 0.0 or self.Gamma_up < 0.0:
            raise ValueError("transition rates must be >= 0")
        if not 0.0 <= self.prep_error < 1.0:
            raise ValueError("prep_error must lie in [0, 1)")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative integer")

    @classmethod
    def from_system(cls, sys: SystemParams, sigma_det: float,
                    **kwargs) -> "NoiseModel":
        """Rates taken from the system's T1; excitation left at zero."""
        return cls(sigma_det=sigma_det, Gamma_down=1.0 / sys.T1, **kwargs)


@dataclass(frozen=True)
class ShotRecord:
    """Outcome of one simulated readout shot."""

    prepared: QubitState
    initial: QubitState
    jump_times: tuple
    integrated_iq: complex
    latched: bool
    assigned: QubitState
    bifurcation_time: float  # nan when the detector never fired


@dataclass(frozen=True)
class LatchReferences:
    """Low/high output-magnitude anchors for the bifurcation detector.

    low is the smallest ramp-up-branch output over the two qubit
    states, high the largest stable-branch output.  The detector only
    discriminates when the two levels are well separated and the drive
    amplitude reaches into (or beyond) the fold interval of at least
    one qubit state; below every lower fold the high branch does not
    exist and a threshold would compare mere dispersive shifts, which
    is not a latch.
    """

    low: float
    high: float
    any_fold: bool
    reachable: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def discriminating(self) -> bool:
        if not (self.any_fold and self.reachable) or self.high <= 0.0:
            return False
        return self.low / self.high < DISCRIMINATION_RATIO


def latch_references(sys: SystemParams, omega_d: float,
                     amplitude: float) -> LatchReferences:
    lows = []
    highs = []
    any_fold = False
    reachable = False
    drive = DriveSpec(omega_d=omega_d, Omega_c=amplitude)
    for eta in (QubitState.g, QubitState.e):
        branches = coupled_steady_states(sys, eta, drive)
        stable = [b for b in branches if b.stable] or list(branches)
        lows.append(abs(output_field(ramp_up_branch(branches),
                                     sys.kappa_c)))
        highs.append(max(abs(output_field(b, sys.kappa_c)) for b in stable))
        folds = fold_amplitudes(sys, eta, omega_d)
        if folds is not None:
            any_fold = True
            if amplitude > folds[0]:
                reachable = True
    return LatchReferences(low=min(lows), high=max(highs),
                           any_fold=any_fold, reachable=reachable)


def _latch_scan(mags: np.ndarray, midpoint: float,
                debounce: int = DEBOUNCE_SAMPLES):
    """Debounced threshold detector over a magnitude series.

    Returns (final_state, first_fire_index or -1).  The state flips
    after `debounce` consecutive samples on the other side.
    """
    state = False
    run_hi = 0
    run_lo = 0
    first = -1
    for i in range(mags.size):
        if mags[i] > midpoint:
            run_hi += 1
            run_lo = 0
        else:
            run_lo += 1
            run_hi = 0
        if run_hi >= debounce and not state:
            state = True
            if first < 0:
                first = i
        elif run_lo >= debounce and state:
            state = False
    return state, first


class TrajectoryCache:
    """Reusable no-jump trajectories for one (system, protocol) pair.

    Shots that never switch qubit state share a deterministic
    trajectory; shots with jumps reuse the pre-jump portion and only
    integrate the tail.  Cached and uncached paths agree to integrator
    tolerance (the step sequence differs after the splice point).
    """

    def __init__(self, sys: SystemParams, protocol: DriveProtocol,
                 grid: np.ndarray, rtol: float, atol: float):
        self.sys = sys
        self.protocol = protocol
        self.grid = grid
        self.rtol = rtol
        self.atol = atol
        self._base = {}
        self._means = {}
        self._latch = {}

    def base_fields(self, eta: QubitState) -> np.ndarray:
        """gamma(t) and alpha(t) on the grid under a static qubit state."""
        if eta not in self._base:
            samples = _run_kernel(self.sys, eta, self.protocol, (0j, 0j),
                                  0.0, self.grid, self.rtol, self.atol)
            alpha = samples[:, 0] + 1j * samples[:, 1]
            gamma = samples[:, 2] + 1j * samples[:, 3]
            self._base[eta] = (alpha, gamma)
        return self._base[eta]

    def base_mean(self, eta: QubitState, n_int: int) -> complex:
        key = (eta, n_int)
        if key not in self._means:
            gamma = self.base_fields(eta)[1]
            c_out = math.sqrt(self.sys.kappa_c) * gamma[:n_int]
            self._means[key] = complex(np.mean(c_out))
        return self._means[key]

    def base_latch(self, eta: QubitState, midpoint: float):
        key = (eta, midpoint)
        if key not in self._latch:
            gamma = self.base_fields(eta)[1]
            mags = math.sqrt(self.sys.kappa_c) * np.abs(gamma)
            self._latch[key] = _latch_scan(mags, midpoint)
        return self._latch[key]


def _stitched_gamma(sys: SystemParams, protocol: DriveProtocol,
                    initial: QubitState, jumps, grid: np.ndarray,
                    rtol: float, atol: float,
                    cache: Optional[TrajectoryCache]) -> np.ndarray:
    """gamma(t) on the grid with the qubit switching at the jump times."""
    if cache is not None and len(jumps) == 0:
        return cache.base_fields(initial)[1]

    gamma = np.empty(grid.size, dtype=complex)
    eta = initial
    t0 = 0.0
    state = (0j, 0j)
    k = 0  # next grid index to fill

    if cache is not None and len(jumps) > 0:
        # reuse the static-eta solution up to the last grid point
        # before the first jump, then integrate onward from there
        t1 = jumps[0]
        alpha_b, gamma_b = cache.base_fields(initial)
        k = int(np.searchsorted(grid, t1, side="right"))
        if k > 0:
            gamma[:k] = gamma_b[:k]
            t0 = grid[k - 1]
            state = (complex(alpha_b[k - 1]), complex(gamma_b[k - 1]))

    pending = []
    for t in jumps:
        if t <= t0:
            # the splice point landed exactly on this jump time
            eta = _flip(eta)
        else:
            pending.append(t)
    for t1 in pending + [protocol.duration]:
        hi = int(np.searchsorted(grid, t1, side="right"))
        t_eval = grid[k:hi]
        if t_eval.size == 0 or t_eval[-1] < t1:
            t_eval = np.append(t_eval, t1)
        samples = _run_kernel(sys, eta, protocol, state, t0, t_eval,
                              rtol, atol)
        n_fill = hi - k
        if n_fill > 0:
            gamma[k:hi] = samples[:n_fill, 2] + 1j * samples[:n_fill, 3]
        last = samples[-1]
        state = (complex(last[0] + 1j * last[1]),
                 complex(last[2] + 1j * last[3]))
        t0 = t1
        k = hi
        eta = _flip(eta)
    return gamma


def _draw_jump_times(rng, initial: QubitState, duration: float,
                     noise: NoiseModel):
    jumps = []
    eta = initial
    t = 0.0
    while True:
        rate = noise.Gamma_down if eta is QubitState.e else noise.Gamma_up
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            break
        jumps.append(t)
        eta = _flip(eta)
    return tuple(jumps)


def simulate_shot(sys: SystemParams, noise: NoiseModel,
                  protocol: DriveProtocol, prepared: QubitState,
                  shot_index: int = 0, forced_jump_times=None,
                  t_int: Optional[float] = None,
                  refs: Optional[LatchReferences] = None,
                  cache: Optional[TrajectoryCache] = None,
                  rtol: float = DEFAULT_RTOL,
                  atol: float = DEFAULT_ATOL) -> ShotRecord:
    """Simulate one readout shot.

    forced_jump_times bypasses the exponential sampling (deterministic
    test hook); refs and cache can be precomputed once per drive point
    when running many shots.  t_int limits the averaging window for the
    integrated output (defaults to the full pulse).
    """
    rng = np.random.default_rng((noise.rng_seed, shot_index))
    duration = protocol.duration
    if t_int is None:
        t_int = duration
    if not 0.0 < t_int <= duration * (1 + 1e-12):
        raise ValueError("t_int must lie in (0, protocol duration]")

    # preparation: the uniform draw happens regardless of heralding so
    # heralded and unheralded runs stay draw-for-draw aligned
    u = rng.uniform()
    initial = prepared
    if not noise.herald and u < noise.prep_error:
        initial = _flip(prepared)

    if forced_jump_times is not None:
        jumps = tuple(sorted(float(t) for t in forced_jump_times))
        if any(t <= 0.0 or t >= duration for t in jumps):
            raise ValueError("forced jump times must lie inside the pulse")
    else:
        jumps = _draw_jump_times(rng, initial, duration, noise)

    n = max(2, int(round(duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, duration, n)
    if cache is not None and not np.array_equal(cache.grid, grid):
        raise ValueError("cache was built for a different sample grid")
    if refs is None:
        refs = latch_references(sys, protocol.omega_d,
                                max(protocol.amplitudes))
    n_int = int(np.searchsorted(grid, t_int * (1 + 1e-12), side="right"))

    if cache is not None and len(jumps) == 0:
        # jump-free shots share the deterministic base trajectory;
        # only the random draws differ between them
        mean_c = cache.base_mean(initial, n_int)
        if refs.discriminating:
            latched, first = cache.base_latch(initial, refs.midpoint)
        else:
            latched, first = False, -1
    else:
        gamma = _stitched_gamma(sys, protocol, initial, jumps, grid,
                                rtol, atol, cache)
        c_out = math.sqrt(sys.kappa_c) * gamma
        mean_c = complex(np.mean(c_out[:n_int]))
        if refs.discriminating:
            latched, first = _latch_scan(np.abs(c_out), refs.midpoint)
        else:
            latched, first = False, -1

    re, im = rng.standard_normal(2)
    iq = mean_c + noise.sigma_det * (re + 1j * im)
    t_bif = grid[first] if first >= 0 else math.nan

    assigned = QubitState.e if latched else QubitState.g
    return ShotRecord(prepared=prepared, initial=initial, jump_times=jumps,
                      integrated_iq=iq, latched=latched, assigned=assigned,
                      bifurcation_time=t_bif)


def shot_trace(sys: SystemParams, protocol: DriveProtocol,
               initial: QubitState, jump_times=(),
               rtol: float = DEFAULT_RTOL,
               atol: float = DEFAULT_ATOL):
    """Sampled output field c_out(t) for one deterministic shot.

    Diagnostic companion to simulate_shot: the same stitched
    integration with the qubit flipping at the given times, but
    returning the full 1 ns record (times, c_out) instead of the
    integrated point, and without detection noise.
    """
    duration = protocol.duration
    jumps = tuple(sorted(float(t) for t in jump_times))
    if any(t <= 0.0 or t >= duration for t in jumps):
        raise ValueError("jump times must lie inside the pulse")
    n = max(2, int(round(duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, duration, n)
    gamma = _stitched_gamma(sys, protocol, initial, jumps, grid,
                            rtol, atol, None)
    return grid, math.sqrt(sys.kappa_c) * gamma


def run_shots(sys: SystemParams, noise: NoiseModel,
              protocol: DriveProtocol, n_per_state: int,
              t_int: Optional[float] = None, first_index: int = 0,
              rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL):
    """Alternating g/e shot batch sharing one cache and reference set.

    Shot k of the batch uses shot_index = first_index + k, preparing g
    for even k and e for odd k, so a batch is reproducible from
    (rng_seed, first_index) alone.
    """
    refs = latch_references(sys, protocol.omega_d,
                            max(protocol.amplitudes))
    grid_n = max(2, int(round(protocol.duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, protocol.duration, grid_n)
    cache = TrajectoryCache(sys, protocol, grid, rtol, atol)
    shots = []
    for k in range(2 * n_per_state):
        prepared = QubitState.g if k % 2 == 0 else QubitState.e
        shots.append(simulate_shot(sys, noise, protocol, prepared,
                                   shot_index=first_index + k,
                                   t_int=t_int, refs=refs, cache=cache,
                                   rtol=rtol, atol=atol))
    return shots


@dataclass(frozen=True)
class FidelityReport:
    """Confusion statistics of IQ-threshold assignment."""

    P_e_given_g: float
    P_g_given_e: float
    F_RO: float
    threshold: float
    counts: tuple  # ((g->g, g->e), (e->g, e->e)) by prepared state
    overlap_error: float
    preparation_error: float
    pre_bifurcation_error: float


def _project_iq(shots):
    """Rotate the IQ plane so the two prepared-state centers are real.

    Returns (projected values, labels) with the excited-state center on
    the positive side.
    """
    iq = np.array([s.integrated_iq for s in shots], dtype=complex)
    lab = np.array([s.prepared is QubitState.e for s in shots], dtype=bool)
    if not lab.any() or lab.all():
        raise ValueError("shots from both preparations are required")
    center_g = iq[~lab].mean()
    center_e = iq[lab].mean()
    axis = center_e - center_g
    if abs(axis) == 0.0:
        axis = 1.0 + 0j
    phase = axis / abs(axis)
    return np.real(iq / phase), lab


def threshold_optimize(shots) -> float:
    """Threshold on the projected quadrature that maximizes F_RO.

    Scans the midpoints between neighbouring sorted samples; ties go to
    the smallest candidate.  With the excited cluster on the positive
    side the rule is assign e when the projection exceeds the
    threshold.
    """
    x, lab = _project_iq(shots)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    es = lab[order].astype(float)
    n_e = es.sum()
    n_g = len(es) - n_e
    # a threshold between sorted positions k-1 and k assigns the top
    # len - k samples to e; scan all len + 1 cut positions
    cum_e = np.concatenate([[0.0], np.cumsum(es)])
    cum_g = np.concatenate([[0.0], np.cumsum(1.0 - es)])
    p_eg = (n_g - cum_g) / max(n_g, 1)  # g shots above threshold
    p_ge = cum_e / max(n_e, 1)          # e shots below threshold
    score = 1.0 - 0.5 * (p_eg + p_ge)
    best = int(np.argmax(score))
    if best == 0:
        return xs[0] - 1.0
    if best == len(xs):
        return xs[-1] + 1.0
    return 0.5 * (xs[best - 1] + xs[best])


def fidelity_report(shots, threshold="auto") -> FidelityReport:
    """Threshold the projected IQ samples and tabulate the confusion.

    The error decomposition is the simulator's own bookkeeping: the
    preparation term counts shots whose actual initial state differed
    from the intent, the pre-bifurcation term counts excited shots that
    relaxed before the detector fired, and the overlap term counts
    misassignments among shots whose latch outcome matched their
    preparation (detection noise is the only mechanism left for those).
    """
    x, lab = _project_iq(shots)
    if threshold == "auto":
        thr = threshold_optimize(shots)
    else:
        thr = float(threshold)
    assigned_e = x > thr
    n_e = int(lab.sum())
    n_g = len(shots) - n_e
    eg = int(np.sum(assigned_e & ~lab))   # prepared g, assigned e
    ge = int(np.sum(~assigned_e & lab))   # prepared e, assigned g
    p_eg = eg / n_g
    p_ge = ge / n_e
    counts = ((n_g - eg, eg), (ge, n_e - ge))

    prep_err = sum(1 for s in shots if s.initial is not s.prepared)
    pre_bif = sum(1 for s in shots
                  if s.prepared is QubitState.e
                  and s.initial is QubitState.e and not s.latched)
    clean = [(xi, li, s) for xi, li, s in zip(x, lab, shots)
             if (s.latched == (s.prepared is QubitState.e))]
    overlap = sum(1 for xi, li, _ in clean if (xi > thr) != li)

    return FidelityReport(
        P_e_given_g=p_eg, P_g_given_e=p_ge,
        F_RO=1.0 - 0.5 * (p_eg + p_ge), threshold=thr, counts=counts,
        overlap_error=overlap / len(shots),
        preparation_error=prep_err / len(shots),
        pre_bifurcation_error=pre_bif / len(shots))


def error_budget(sys: SystemParams, t_int: float, t_b: float):
    """Relaxation error without and with latching.

    Without latching the qubit must survive the full integration
    window; with latching only the time until bifurcation matters.
    """
    if t_b > t_int:
        raise ValueError("t_b must not exceed t_int")
    if t_int < 0.0 or t_b < 0.0:
        raise ValueError("times must be >= 0")
    no_latch = 1.0 - math.exp(-t_int / (2.0 * sys.T1))
    with_latch = 1.0 - math.exp(-t_b / (2.0 * sys.T1))
    return no_latch, with_latch


def calibrate_sigma_det(separation: float,
                        overlap_error: float = 1e-3) -> float:
    """Per-quadrature noise scale hitting a target overlap error.

    For two Gaussian clusters a distance `separation` apart with a
    midpoint threshold, the symmetric misassignment probability is
    erfc(d / (2 sqrt(2) sigma)) / 2 per side; inverting for sigma.
    """
    if separation <= 0.0:
        raise ValueError("separation must be > 0")
    if not 0.0 < overlap_error < 0.5:
        raise ValueError("overlap_error must lie in (0, 0.5)")
    u = special.erfcinv(2.0 * overlap_error)
    return separation / (2.0 * math.sqrt(2.0) * u)


def measure_bifurcation_time(sys: SystemParams, omega_d: float,
                             amplitude: float,
                             pulse_duration: float = 500e-9,
                             rtol: float = DEFAULT_RTOL,
                             atol: float = DEFAULT_ATOL) -> float:
    """Detector firing time for a jump-free excited-state shot.

    nan when the detector never fires (drive below the switching
    threshold or non-discriminating point).
    """
    protocol = DriveProtocol.constant(omega_d, amplitude, pulse_duration)
    refs = latch_references(sys, omega_d, amplitude)
    if not refs.discriminating:
        return math.nan
    n = max(2, int(round(pulse_duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, pulse_duration, n)
    samples = _run_kernel(sys, QubitState.e, protocol, (0j, 0j), 0.0,
                          grid, rtol, atol)
    gamma = samples[:, 2] + 1j * samples[:, 3]
    mags = math.sqrt(sys.kappa_c) * np.abs(gamma)
    _, first = _latch_scan(mags, refs.midpoint)
    return grid[first] if first >= 0 else math.nan


@dataclass(frozen=True)
class FidelityScan:
    """Latching-readout discrimination map.

    F[i, j] is the latching fidelity max(0, P(latch|e) - P(latch|g)) at
    omega_grid[i], amplitudes[i, j]; star is the (i, j) argmax.  Cells
    where the detector cannot discriminate (no fold for either qubit
    state, or low/high references too close) are zero without
    simulation.
    """

    omega_grid: np.ndarray
    amplitudes: np.ndarray
    F: np.ndarray
    P_latch_e: np.ndarray
    P_latch_g: np.ndarray
    evaluated: np.ndarray
    star: tuple


def fidelity_map(sys: SystemParams, noise: NoiseModel, omega_grid,
                 amplitudes, shots_per_point: int = 200,
                 pulse_duration: float = 500e-9,
                 t_int: Optional[float] = None,
                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                 threads: int = 1) -> FidelityScan:
    """Monte-Carlo latching-fidelity map over a drive grid.

    shots_per_point counts each preparation separately.  amplitudes may
    be one shared vector or one row per frequency.  Shot seeds are
    global across the map (master seed plus a running index) so the
    result is independent of evaluation order and thread count.
    """
    if shots_per_point < 1:
        raise ValueError("shots_per_point must be >= 1")
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

    n_w, n_a = omega_grid.size, amp_rows.shape[1]
    jobs = []
    for i in range(n_w):
        for j in range(n_a):
            first = 2 * shots_per_point * (i * n_a + j)
            jobs.append((sys, noise, omega_grid[i], amp_rows[i, j],
                         shots_per_point, pulse_duration, t_int, first,
                         rtol, atol))
    if threads > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(threads) as pool:
            flat = pool.map(_fidelity_cell, jobs)
    else:
        flat = [_fidelity_cell(job) for job in jobs]

    F = np.zeros((n_w, n_a))
    p_e = np.zeros((n_w, n_a))
    p_g = np.zeros((n_w, n_a))
    evaluated = np.zeros((n_w, n_a), dtype=bool)
    for (i, j), (f, pe, pg, ev) in zip(
            ((i, j) for i in range(n_w) for j in range(n_a)), flat):
        F[i, j] = f
        p_e[i, j] = pe
        p_g[i, j] = pg
        evaluated[i, j] = ev
    star = np.unravel_index(int(np.argmax(F)), F.shape)
    return FidelityScan(omega_grid=omega_grid,
                        amplitudes=np.array(amp_rows), F=F,
                        P_latch_e=p_e, P_latch_g=p_g, evaluated=evaluated,
                        star=(int(star[0]), int(star[1])))


def _fidelity_cell(args):
    (sys, noise, omega_d, amplitude, n_per_state, pulse_duration, t_int,
     first_index, rtol, atol) = args
    refs = latch_references(sys, omega_d, amplitude)
    if not refs.discriminating:
        return 0.0, 0.0, 0.0, False
    protocol = DriveProtocol.constant(omega_d, amplitude, pulse_duration)
    grid_n = max(2, int(round(pulse_duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, pulse_duration, grid_n)
    cache = TrajectoryCache(sys, protocol, grid, rtol, atol)
    latch_e = 0
    latch_g = 0
    for k in range(2 * n_per_state):
        prepared = QubitState.g if k % 2 == 0 else QubitState.e
        try:
            rec = simulate_shot(sys, noise, protocol, prepared,
                                shot_index=first_index + k, t_int=t_int,
                                refs=refs, cache=cache, rtol=rtol,
                                atol=atol)
        except IntegrationError as exc:
            raise IntegrationError(
                f"{exc} [grid cell omega_d/2pi = "
                f"{omega_d / math.tau:.9e} Hz, Omega_c = "
                f"{amplitude:.9e} rad/s, shot {first_index + k}]",
                exc.t_fail) from exc
        if rec.latched:
            if prepared is QubitState.e:
                latch_e += 1
            else:
                latch_g += 1
    pe = latch_e / n_per_state
    pg = latch_g / n_per_state
    return max(0.0, pe - pg), pe, pg, True
