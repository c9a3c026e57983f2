"""Shot simulation, latch detection, and fidelity statistics."""

import math

import numpy as np
import pytest

import oracles
from conftest import _ghz
from polatch.dynamics import DriveProtocol
from polatch.model import QubitState, shifted_ancilla_frequency
from polatch.readout import (SAMPLE_DT, FidelityReport, NoiseModel,
                             ShotRecord, TrajectoryCache, _latch_scan,
                             calibrate_sigma_det, error_budget,
                             fidelity_map, fidelity_report,
                             latch_references, measure_bifurcation_time,
                             run_shots, shot_trace, simulate_shot,
                             threshold_optimize)

W_REF = _ghz(7.508)
# latches the excited state but not the ground state at W_REF
AMP_LATCH = 6.0e8
PULSE = 500e-9


# --- noise model -------------------------------------------------------------

def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(sigma_det=-1.0, Gamma_down=0.0)
    with pytest.raises(ValueError):
        NoiseModel(sigma_det=1.0, Gamma_down=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(sigma_det=1.0, Gamma_down=0.0, prep_error=1.0)
    with pytest.raises(ValueError):
        NoiseModel(sigma_det=1.0, Gamma_down=0.0, rng_seed=-3)


def test_noise_model_from_system(flux5):
    nm = NoiseModel.from_system(flux5, sigma_det=10.0, rng_seed=5)
    assert nm.Gamma_down == pytest.approx(1.0 / flux5.T1)
    assert nm.Gamma_up == 0.0
    assert nm.rng_seed == 5


# --- latch references --------------------------------------------------------

def test_latch_references_discriminating_point(flux5):
    refs = latch_references(flux5, W_REF, AMP_LATCH)
    assert refs.any_fold
    assert 0.0 < refs.low < refs.high
    assert refs.low / refs.high < 0.5
    assert refs.discriminating
    assert refs.midpoint == pytest.approx(0.5 * (refs.low + refs.high))


def test_latch_references_plain_point(flux5):
    # far above every resonance: no fold for either qubit state
    refs = latch_references(flux5, _ghz(7.90), 1.0e8)
    assert not refs.any_fold
    assert not refs.discriminating


def test_latch_references_below_every_fold(flux5):
    # the frequency folds, but the drive is too weak to reach any high
    # branch: thresholding would read dispersive shifts, not a latch
    refs = latch_references(flux5, W_REF, 1.0e7)
    assert refs.any_fold
    assert not refs.reachable
    assert not refs.discriminating


# --- debounced detector on synthetic series ----------------------------------

def test_latch_scan_fires_after_debounce():
    mags = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0])
    state, first = _latch_scan(mags, 0.5, debounce=3)
    assert state is True
    assert first == 4          # third consecutive sample above


def test_latch_scan_ignores_short_blips():
    mags = np.array([0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    state, first = _latch_scan(mags, 0.5, debounce=3)
    assert state is False and first == -1


def test_latch_scan_can_unlatch():
    mags = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    state, first = _latch_scan(mags, 0.5, debounce=3)
    assert state is False
    assert first == 2          # the firing time is kept


def test_latch_scan_all_low():
    state, first = _latch_scan(np.zeros(10), 0.5)
    assert state is False and first == -1


# --- single-shot simulation ---------------------------------------------------

@pytest.fixture(scope="module")
def latch_protocol():
    return DriveProtocol.constant(W_REF, AMP_LATCH, PULSE)


@pytest.fixture(scope="module")
def quiet_noise(flux5):
    return NoiseModel.from_system(flux5, sigma_det=1.0, rng_seed=42,
                                  prep_error=0.003)


def test_shot_is_deterministic(flux5, quiet_noise, latch_protocol):
    a = simulate_shot(flux5, quiet_noise, latch_protocol, QubitState.e,
                      shot_index=7)
    b = simulate_shot(flux5, quiet_noise, latch_protocol, QubitState.e,
                      shot_index=7)
    assert a == b
    c = simulate_shot(flux5, quiet_noise, latch_protocol, QubitState.e,
                      shot_index=8)
    assert c.integrated_iq != a.integrated_iq


def test_clean_shots_latch_by_prepared_state(flux5, latch_protocol):
    noiseless = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.0)
    e_shot = simulate_shot(flux5, noiseless, latch_protocol, QubitState.e)
    g_shot = simulate_shot(flux5, noiseless, latch_protocol, QubitState.g)
    assert e_shot.latched and e_shot.assigned is QubitState.e
    assert not g_shot.latched and g_shot.assigned is QubitState.g
    assert 0.0 < e_shot.bifurcation_time < 100e-9
    assert math.isnan(g_shot.bifurcation_time)
    # latched high output well above the unlatched one
    assert abs(e_shot.integrated_iq) > 2.0 * abs(g_shot.integrated_iq)


def test_post_bifurcation_decay_keeps_assignment(flux5, latch_protocol):
    # the qubit relaxes long after the detector fired: the latch holds
    noiseless = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.0)
    rec = simulate_shot(flux5, noiseless, latch_protocol, QubitState.e,
                        forced_jump_times=[400e-9])
    assert rec.jump_times == (400e-9,)
    assert rec.latched
    assert rec.assigned is QubitState.e


def test_pre_bifurcation_decay_loses_the_shot(flux5, latch_protocol):
    # relaxation before the latch fires leaves the output low
    noiseless = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.0)
    rec = simulate_shot(flux5, noiseless, latch_protocol, QubitState.e,
                        forced_jump_times=[2e-9])
    assert not rec.latched
    assert rec.assigned is QubitState.g


def test_forced_jump_validation(flux5, quiet_noise, latch_protocol):
    with pytest.raises(ValueError):
        simulate_shot(flux5, quiet_noise, latch_protocol, QubitState.e,
                      forced_jump_times=[2 * PULSE])
    with pytest.raises(ValueError):
        simulate_shot(flux5, quiet_noise, latch_protocol, QubitState.e,
                      t_int=0.0)


def test_heralding_discards_preparation_errors(flux5, latch_protocol):
    sloppy = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.4,
                        herald=True, rng_seed=3)
    flips = sum(
        simulate_shot(flux5, sloppy, latch_protocol, QubitState.e,
                      shot_index=k).initial is not QubitState.e
        for k in range(40))
    assert flips == 0

    unheralded = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.4,
                            herald=False, rng_seed=3)
    flips = sum(
        simulate_shot(flux5, unheralded, latch_protocol, QubitState.e,
                      shot_index=k).initial is not QubitState.e
        for k in range(40))
    assert 5 < flips < 30      # ~16 expected


def test_cache_matches_uncached_path(flux5, quiet_noise, latch_protocol):
    n = max(2, int(round(latch_protocol.duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, latch_protocol.duration, n)
    cache = TrajectoryCache(flux5, latch_protocol, grid, 1e-9, 1e-12)
    for idx in range(6):
        for prepared in (QubitState.g, QubitState.e):
            a = simulate_shot(flux5, quiet_noise, latch_protocol,
                              prepared, shot_index=idx, cache=cache)
            b = simulate_shot(flux5, quiet_noise, latch_protocol,
                              prepared, shot_index=idx, cache=None)
            assert a.latched == b.latched
            assert a.integrated_iq == pytest.approx(b.integrated_iq,
                                                    rel=1e-6, abs=1e-6)


def test_cache_splices_jumpy_shots(flux5, latch_protocol):
    noiseless = NoiseModel(sigma_det=0.0, Gamma_down=0.0, prep_error=0.0)
    n = max(2, int(round(latch_protocol.duration / SAMPLE_DT)) + 1)
    grid = np.linspace(0.0, latch_protocol.duration, n)
    cache = TrajectoryCache(flux5, latch_protocol, grid, 1e-9, 1e-12)
    for t_jump in (37.5e-9, 250e-9, 499.5e-9):
        a = simulate_shot(flux5, noiseless, latch_protocol, QubitState.e,
                          forced_jump_times=[t_jump], cache=cache)
        b = simulate_shot(flux5, noiseless, latch_protocol, QubitState.e,
                          forced_jump_times=[t_jump], cache=None)
        assert a.latched == b.latched
        assert a.integrated_iq == pytest.approx(b.integrated_iq, rel=1e-6)


# --- shot trace against the reference solver ----------------------------------

@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_shot_trace_matches_piecewise_reference(flux5, latch_protocol):
    t_jump = 150.5e-9          # off the sample grid on purpose
    grid, c_out = shot_trace(flux5, latch_protocol, QubitState.e,
                             jump_times=[t_jump])
    assert grid.size == int(round(PULSE / SAMPLE_DT)) + 1

    dc = W_REF - flux5.omega_c
    da_e = W_REF - shifted_ancilla_frequency(flux5, QubitState.e)
    da_g = W_REF - shifted_ancilla_frequency(flux5, QubitState.g)
    env_t = (0.0, PULSE)
    env_a = (AMP_LATCH, AMP_LATCH)

    pre = grid[grid <= t_jump]
    t_stage1 = np.append(pre, t_jump)
    a1, c1 = oracles.trajectory_reference(
        flux5.kappa_a, flux5.kappa_c, da_e, dc, flux5.U_a, flux5.g_ac,
        env_t, env_a, t_stage1)
    post = grid[grid > t_jump]
    a2, c2 = oracles.trajectory_reference(
        flux5.kappa_a, flux5.kappa_c, da_g, dc, flux5.U_a, flux5.g_ac,
        (t_jump, PULSE), env_a, np.concatenate([[t_jump], post]),
        y0=(a1[-1].real, a1[-1].imag, c1[-1].real, c1[-1].imag))

    ref = math.sqrt(flux5.kappa_c) * np.concatenate([c1[:-1], c2[1:]])
    scale = np.max(np.abs(ref))
    assert np.allclose(c_out, ref, rtol=1e-5, atol=1e-5 * scale)


def test_shot_trace_jump_validation(flux5, latch_protocol):
    with pytest.raises(ValueError):
        shot_trace(flux5, latch_protocol, QubitState.e,
                   jump_times=[PULSE])


# --- batches -------------------------------------------------------------------

def test_run_shots_alternates_and_reproduces(flux5, quiet_noise,
                                             latch_protocol):
    shots = run_shots(flux5, quiet_noise, latch_protocol, n_per_state=8)
    assert len(shots) == 16
    assert all(s.prepared is QubitState.g for s in shots[0::2])
    assert all(s.prepared is QubitState.e for s in shots[1::2])
    again = run_shots(flux5, quiet_noise, latch_protocol, n_per_state=8)
    assert shots == again


# --- fidelity statistics on synthetic shots -------------------------------------

def _fake_shots(center_g, center_e, sigma, n, seed=0, latched_by_label=True):
    rng = np.random.default_rng(seed)
    shots = []
    for k in range(2 * n):
        e = k % 2 == 1
        center = center_e if e else center_g
        iq = center + sigma * complex(*rng.standard_normal(2))
        eta = QubitState.e if e else QubitState.g
        shots.append(ShotRecord(
            prepared=eta, initial=eta, jump_times=(), integrated_iq=iq,
            latched=e if latched_by_label else False,
            assigned=eta if latched_by_label else QubitState.g,
            bifurcation_time=10e-9 if e else math.nan))
    return shots


def test_fidelity_report_well_separated_clusters():
    shots = _fake_shots(0.0 + 0.0j, 10.0 + 0.0j, 0.5, 400)
    rep = fidelity_report(shots)
    assert rep.F_RO > 0.999
    assert rep.P_e_given_g < 0.01 and rep.P_g_given_e < 0.01
    (gg, ge), (eg, ee) = rep.counts
    assert gg + ge == 400 and eg + ee == 400
    assert rep.F_RO == pytest.approx(1.0 - 0.5 * (ge / 400 + eg / 400))


def test_fidelity_report_rotated_clusters():
    # projection must find the separation axis regardless of phase
    axis = complex(math.cos(1.1), math.sin(1.1))
    shots = _fake_shots(2.0 * axis, 9.0 * axis, 0.4, 300, seed=5)
    rep = fidelity_report(shots)
    assert rep.F_RO > 0.999


def test_fidelity_report_indistinguishable_clusters():
    shots = _fake_shots(1.0 + 1.0j, 1.0 + 1.0j, 0.8, 300, seed=2,
                        latched_by_label=False)
    rep = fidelity_report(shots)
    assert rep.F_RO < 0.60     # coin toss up to sampling noise


def test_threshold_is_optimal():
    shots = _fake_shots(0.0 + 0j, 4.0 + 0j, 1.2, 150, seed=9)
    rep = fidelity_report(shots)
    iq = np.array([s.integrated_iq.real for s in shots])
    lab = np.array([s.prepared is QubitState.e for s in shots])

    def score(thr):
        p_eg = np.mean(iq[~lab] > thr)
        p_ge = np.mean(iq[lab] <= thr)
        return 1.0 - 0.5 * (p_eg + p_ge)

    brute = max(score(t) for t in np.linspace(iq.min() - 1,
                                              iq.max() + 1, 4001))
    assert rep.F_RO == pytest.approx(brute, abs=1e-9)


def test_fidelity_report_error_bookkeeping():
    shots = _fake_shots(0.0 + 0j, 10.0 + 0j, 0.1, 100)
    rep = fidelity_report(shots)
    assert rep.preparation_error == 0.0
    assert rep.pre_bifurcation_error == 0.0
    assert rep.overlap_error <= 1.0 - rep.F_RO + 1e-12


def test_fidelity_report_needs_both_labels():
    shots = _fake_shots(0.0 + 0j, 10.0 + 0j, 0.1, 10)
    with pytest.raises(ValueError):
        fidelity_report([s for s in shots
                         if s.prepared is QubitState.e])


# --- calibration helpers ---------------------------------------------------------

def test_calibrate_sigma_roundtrip():
    for target in (1e-3, 1e-2, 0.1):
        sigma = calibrate_sigma_det(100.0, overlap_error=target)
        # misassignment per side for two Gaussians at distance d with a
        # midpoint threshold
        err = 0.5 * math.erfc(100.0 / (2.0 * math.sqrt(2.0) * sigma))
        assert err == pytest.approx(target, rel=1e-10)
    assert calibrate_sigma_det(100.0) == pytest.approx(100.0 / 6.180464,
                                                       rel=1e-6)


def test_calibrate_sigma_validation():
    with pytest.raises(ValueError):
        calibrate_sigma_det(0.0)
    with pytest.raises(ValueError):
        calibrate_sigma_det(1.0, overlap_error=0.7)


def test_error_budget_latching_advantage(flux5):
    no_latch, with_latch = error_budget(flux5, 500e-9, 9e-9)
    assert no_latch == pytest.approx(
        1.0 - math.exp(-500e-9 / (2.0 * flux5.T1)), rel=1e-12)
    assert no_latch == pytest.approx(0.073, abs=5e-4)
    assert with_latch < 0.002
    assert with_latch < no_latch
    with pytest.raises(ValueError):
        error_budget(flux5, 100e-9, 200e-9)


def test_measure_bifurcation_time(flux5):
    t_b = measure_bifurcation_time(flux5, W_REF, AMP_LATCH)
    assert 2e-9 <= t_b <= 100e-9
    # below the excited-state switching threshold: never fires
    assert math.isnan(measure_bifurcation_time(flux5, W_REF, 2.0e8))
    # no folds at all far off resonance
    assert math.isnan(measure_bifurcation_time(flux5, _ghz(7.90), 2.0e8))


# --- fidelity map -----------------------------------------------------------------

def test_fidelity_map_small_grid(flux5):
    noise = NoiseModel.from_system(flux5, sigma_det=50.0, rng_seed=11)
    omega = np.array([W_REF])
    amps = np.array([1.0e7, AMP_LATCH])
    scan = fidelity_map(flux5, noise, omega, amps, shots_per_point=30)
    assert scan.F.shape == (1, 2)
    assert not scan.evaluated[0, 0]        # non-discriminating cell
    assert scan.F[0, 0] == 0.0
    assert scan.evaluated[0, 1]
    assert scan.F[0, 1] > 0.9
    assert scan.star == (0, 1)
    assert scan.P_latch_e[0, 1] > 0.9
    assert scan.P_latch_g[0, 1] < 0.1


def test_fidelity_map_thread_invariance(flux5):
    noise = NoiseModel.from_system(flux5, sigma_det=50.0, rng_seed=11)
    omega = _ghz(np.array([7.506, 7.510]))
    amps = np.array([AMP_LATCH])
    a = fidelity_map(flux5, noise, omega, amps, shots_per_point=12,
                     threads=1)
    b = fidelity_map(flux5, noise, omega, amps, shots_per_point=12,
                     threads=2)
    assert np.array_equal(a.F, b.F)
    assert np.array_equal(a.P_latch_e, b.P_latch_e)
    assert a.star == b.star


def test_fidelity_map_validation(flux5, quiet_noise):
    with pytest.raises(ValueError):
        fidelity_map(flux5, quiet_noise, np.array([W_REF]),
                     np.array([1e8]), shots_per_point=0)
    with pytest.raises(ValueError):
        fidelity_map(flux5, quiet_noise, np.array([]), np.array([1e8]))
