"""Steady-state cubic: oracle equivalence, stability, folds, branches."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from conftest import _ghz, _mhz, make_flux5
from polatch.model import QubitState, polariton_params
from polatch.steady import (CubicCoefficients, DriveSpec,
                            coupled_steady_states,
                            duffing_cubic_photon_numbers, fold_amplitudes,
                            jacobian_matrix, output_field, pointer_distance,
                            polariton_steady_state, proportions,
                            ramp_up_branch)

W_REF = _ghz(7.508)


# --- cubic roots against the companion matrix ----------------------------

coeff_st = st.builds(
    CubicCoefficients,
    A=st.floats(1e5, 1e9),
    B=st.floats(-2e9, 2e9),
    # zero Kerr exercises the linear degenerate path; otherwise keep C
    # in a physical range so the companion-matrix oracle stays sane
    C=st.one_of(st.just(0.0), st.floats(1e-2, 5e8)),
    D=st.complex_numbers(max_magnitude=1e10).filter(
        lambda z: abs(z) > 1e2),
)


@settings(max_examples=300, deadline=None)
@given(coeffs=coeff_st)
def test_roots_match_companion_matrix(coeffs):
    mine = duffing_cubic_photon_numbers(coeffs)
    # inside the fold band the companion matrix is itself ambiguous
    # about the merged pair, so compare only clean examples
    assume(not any(r.marginal for r in mine))
    ref = oracles.photon_cubic_roots(coeffs.A, coeffs.B, coeffs.C,
                                     abs(coeffs.D) ** 2)
    ref = ref[ref > -1e-9]
    assert len(mine) == len(ref)
    for root, x_ref in zip(mine, ref):
        assert root.x == pytest.approx(max(x_ref, 0.0),
                                       rel=1e-7, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(coeffs=coeff_st)
def test_root_count_and_ordering(coeffs):
    roots = duffing_cubic_photon_numbers(coeffs)
    assert len(roots) in (1, 2, 3)
    xs = [r.x for r in roots]
    assert xs == sorted(xs)
    assert all(x >= 0.0 for x in xs)
    if len(roots) == 3:
        assert roots[0].stable and roots[2].stable
        assert not roots[1].stable


def test_linear_mode_single_root():
    coeffs = CubicCoefficients(A=1e7, B=-3e7, C=0.0, D=1e9 + 0j)
    roots = duffing_cubic_photon_numbers(coeffs)
    assert len(roots) == 1
    expect = abs(coeffs.D) ** 2 / (coeffs.A ** 2 + coeffs.B ** 2)
    assert roots[0].x == pytest.approx(expect, rel=1e-12)


def test_tiny_root_beside_near_merged_negative_pair():
    # roots spanning 21 orders of magnitude: the physical root must
    # survive the cancellation in the closed forms
    coeffs = CubicCoefficients(A=1e5, B=250000041.0, C=1.0, D=101 + 0j)
    roots = duffing_cubic_photon_numbers(coeffs)
    assert len(roots) == 1
    assert roots[0].x == pytest.approx(1.6321592035062645e-13, rel=1e-9)


# --- coupled fixed points satisfy the raw equations of motion ------------

def _residual(sys, eta, drive, branch):
    """Norm of the EOM time derivative at the branch, via the oracle rhs."""
    delta_a = drive.omega_d - (sys.omega_a - sys.g_zz * eta.sigma_z
                               if eta is not None else sys.omega_a)
    delta_c = drive.omega_d - sys.omega_c
    dy = oracles.eom_rhs(
        0.0, [branch.alpha.real, branch.alpha.imag,
              branch.gamma.real, branch.gamma.imag],
        sys.kappa_a, sys.kappa_c, delta_a, delta_c, sys.U_a, sys.g_ac,
        drive.Omega_c)
    scale = max(abs(branch.alpha), abs(branch.gamma), 1e-12)
    return np.linalg.norm(dy) / (scale * sys.kappa_c)


@settings(max_examples=120, deadline=None)
@given(
    w_off=st.floats(-_mhz(400.0), _mhz(150.0)),
    amp=st.floats(1e6, 3e9),
    eta=st.sampled_from([QubitState.g, QubitState.e, None]),
)
def test_fixed_points_null_the_equations_of_motion(w_off, amp, eta):
    sys = make_flux5()
    drive = DriveSpec(W_REF + w_off, amp)
    for branch in coupled_steady_states(sys, eta, drive):
        assert _residual(sys, eta, drive, branch) < 1e-6


# --- stability against the finite-difference Jacobian ---------------------

@settings(max_examples=60, deadline=None)
@given(
    w_off=st.floats(-_mhz(400.0), _mhz(150.0)),
    amp=st.floats(1e7, 2e9),
    eta=st.sampled_from([QubitState.g, QubitState.e]),
)
def test_stability_matches_fd_jacobian(w_off, amp, eta):
    sys = make_flux5()
    drive = DriveSpec(W_REF + w_off, amp)
    delta_a = drive.omega_d - (sys.omega_a - sys.g_zz * eta.sigma_z)
    delta_c = drive.omega_d - sys.omega_c
    for branch in coupled_steady_states(sys, eta, drive):
        if branch.marginal:
            continue
        J = oracles.jacobian_fd(sys.kappa_a, sys.kappa_c, delta_a,
                                delta_c, sys.U_a, sys.g_ac, drive.Omega_c,
                                branch.alpha, branch.gamma)
        lam = np.linalg.eigvals(J)
        assume(abs(max(lam.real)) > 1e-4 * sys.kappa_c)
        assert branch.stable == bool(max(lam.real) < 0.0)


def test_jacobian_matrix_matches_fd(flux5):
    drive = DriveSpec(W_REF, 3.0e8)
    branch = coupled_steady_states(flux5, QubitState.e, drive)[1]
    delta_a = drive.omega_d - (flux5.omega_a - flux5.g_zz)
    delta_c = drive.omega_d - flux5.omega_c
    J_fd = oracles.jacobian_fd(flux5.kappa_a, flux5.kappa_c, delta_a,
                               delta_c, flux5.U_a, flux5.g_ac,
                               drive.Omega_c, branch.alpha, branch.gamma)
    J = jacobian_matrix(flux5, QubitState.e, drive, branch.alpha,
                        branch.gamma)
    assert np.allclose(J, J_fd, rtol=1e-5, atol=1e-5 * np.abs(J).max())


# --- reference point inside the excited-state hysteresis window ----------
# frozen regression values computed from the frozen fixture constants

def test_reference_point_three_branches(flux5):
    drive = DriveSpec(W_REF, 3.0e8)
    branches = coupled_steady_states(flux5, QubitState.e, drive)
    assert [b.stable for b in branches] == [True, False, True]
    n_a = [b.n_a for b in branches]
    assert n_a[0] == pytest.approx(0.34646514344099494, rel=1e-9)
    assert n_a[1] == pytest.approx(3.711768116959659, rel=1e-9)
    assert n_a[2] == pytest.approx(6.0919439850406265, rel=1e-9)
    ru = ramp_up_branch(branches)
    assert ru.n_a == pytest.approx(n_a[0], rel=1e-12)
    assert abs(output_field(ru, flux5.kappa_c)) == pytest.approx(
        2993.0463231731246, rel=1e-9)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_relaxation_reaches_cubic_branches(flux5):
    # vacuum start relaxes onto the low branch; a seed beyond the
    # unstable root relaxes onto the high branch (independent DOP853;
    # its rejected opening trial steps overflow harmlessly)
    drive = DriveSpec(W_REF, 3.0e8)
    branches = coupled_steady_states(flux5, QubitState.e, drive)
    delta_a = drive.omega_d - (flux5.omega_a - flux5.g_zz)
    delta_c = drive.omega_d - flux5.omega_c
    args = (flux5.kappa_a, flux5.kappa_c, delta_a, delta_c, flux5.U_a,
            flux5.g_ac, drive.Omega_c)

    a_lo, c_lo = oracles.relax_to_steady(*args)
    assert abs(a_lo) == pytest.approx(abs(branches[0].alpha), rel=1e-6)
    assert abs(c_lo) == pytest.approx(abs(branches[0].gamma), rel=1e-6)

    hi = branches[2]
    seed = (hi.alpha.real * 1.1, hi.alpha.imag * 1.1,
            hi.gamma.real * 1.1, hi.gamma.imag * 1.1)
    a_hi, c_hi = oracles.relax_to_steady(*args, y0=seed)
    assert abs(a_hi) == pytest.approx(abs(hi.alpha), rel=1e-6)
    assert abs(c_hi) == pytest.approx(abs(hi.gamma), rel=1e-6)


# --- fold amplitudes -------------------------------------------------------

def test_fold_amplitudes_frozen_values(flux5):
    lo_e, up_e = fold_amplitudes(flux5, QubitState.e, W_REF)
    assert lo_e == pytest.approx(121063642.20942895, rel=1e-9)
    assert up_e == pytest.approx(476869572.6551131, rel=1e-9)
    lo_g, up_g = fold_amplitudes(flux5, QubitState.g, W_REF)
    assert lo_g == pytest.approx(171046260.9683681, rel=1e-9)
    assert up_g == pytest.approx(1330264158.6676393, rel=1e-9)
    # the excited state switches first under a red-detuned drive
    assert up_e < up_g


def test_fold_amplitudes_bound_the_three_root_region(flux5):
    folds = fold_amplitudes(flux5, QubitState.e, W_REF)
    lo, up = folds
    for amp, n_roots in ((0.5 * lo, 1), (math.sqrt(lo * up), 3),
                         (2.0 * up, 1)):
        branches = coupled_steady_states(flux5, QubitState.e,
                                         DriveSpec(W_REF, amp))
        real = [b for b in branches if not b.marginal]
        assert len(real) == n_roots


def test_no_fold_on_blue_side(flux5):
    # drive far above every conditioned resonance: softening Kerr
    # cannot fold the response
    assert fold_amplitudes(flux5, QubitState.e, _ghz(7.80)) is None


def test_no_fold_for_linear_system(flux5):
    linear = flux5.replace(U_a=0.0)
    assert fold_amplitudes(linear, QubitState.e, W_REF) is None


# --- linear response against the closed-form solution ---------------------

@settings(max_examples=100, deadline=None)
@given(
    w_off=st.floats(-_mhz(500.0), _mhz(500.0)),
    amp=st.floats(1e3, 1e8),
)
def test_linear_limit_matches_closed_form(w_off, amp):
    sys = make_flux5().replace(U_a=0.0)
    drive = DriveSpec(W_REF + w_off, amp)
    branches = coupled_steady_states(sys, None, drive)
    assert len(branches) == 1
    delta_a = drive.omega_d - sys.omega_a
    delta_c = drive.omega_d - sys.omega_c
    a_ref, c_ref = oracles.linear_two_mode_response(
        sys.kappa_a, sys.kappa_c, delta_a, delta_c, sys.g_ac,
        drive.Omega_c)
    assert branches[0].alpha == pytest.approx(a_ref, rel=1e-9)
    assert branches[0].gamma == pytest.approx(c_ref, rel=1e-9)


# --- reduced polariton model vs the coupled model --------------------------

def test_single_polariton_route_agrees_near_resonance(flux5):
    # moderate drive at the upper mode: the uncoupled polariton Duffing
    # response should track the coupled two-mode answer
    pp = polariton_params(flux5, QubitState.g)
    drive = DriveSpec(_ghz(7.600), 2.0e7)
    red = polariton_steady_state(pp, "u", None, drive)
    full = coupled_steady_states(flux5, QubitState.g, drive)
    assert len(red) == len(full) == 1
    out_red = abs(output_field(red[0], flux5.kappa_c))
    out_full = abs(output_field(full[0], flux5.kappa_c))
    assert out_red == pytest.approx(out_full, rel=0.05)


def test_single_polariton_route_tracks_bistable_branches(flux5):
    # inside the wedge both routes must fold, with branch-wise agreement
    pp = polariton_params(flux5, QubitState.g)
    drive = DriveSpec(_ghz(7.590), 5.0e7)
    red = polariton_steady_state(pp, "u", None, drive)
    full = coupled_steady_states(flux5, QubitState.g, drive)
    assert len(red) == len(full) == 3
    assert [b.stable for b in red] == [b.stable for b in full]
    for b_red, b_full in zip(red, full):
        out_red = abs(output_field(b_red, flux5.kappa_c))
        out_full = abs(output_field(b_full, flux5.kappa_c))
        assert out_red == pytest.approx(out_full, rel=0.10)


def test_fold_occupation_near_critical_photon_number(flux5):
    # at the fold birth the lower-branch occupation is of order N_crit;
    # probe a few linewidths below the (shifted) upper mode
    from polatch.model import critical_photon_number
    pp = polariton_params(flux5, QubitState.e)
    w_probe = pp.omega_u - pp.chi_u - 2.0 * pp.kappa_u
    folds = fold_amplitudes(flux5, QubitState.e, w_probe)
    assert folds is not None
    branches = coupled_steady_states(flux5, QubitState.e,
                                     DriveSpec(w_probe, folds[1] * 0.999))
    n_tot = branches[0].n_a + branches[0].n_c
    n_crit = critical_photon_number(pp.kappa_u, pp.U_uu)
    assert 0.1 * n_crit < n_tot < 20.0 * n_crit


# --- misc helpers ----------------------------------------------------------

def test_output_field_scale(flux5):
    drive = DriveSpec(W_REF, 1.0e7)
    b = coupled_steady_states(flux5, QubitState.g, drive)[0]
    assert abs(output_field(b, flux5.kappa_c)) == pytest.approx(
        math.sqrt(flux5.kappa_c) * abs(b.gamma), rel=1e-12)


def test_proportions(flux5):
    drive = DriveSpec(W_REF, 3.0e8)
    b = coupled_steady_states(flux5, QubitState.e, drive)[0]
    p_a, p_c = proportions(b)
    assert p_a + p_c == pytest.approx(1.0, rel=1e-12)
    assert p_a == pytest.approx(b.n_a / (b.n_a + b.n_c), rel=1e-12)


def test_pointer_distance_positive_at_conditional_peak(flux5):
    d = pointer_distance(flux5, DriveSpec(_ghz(7.552), 1.0e7))
    assert d > 0.0


def test_drive_spec_validation():
    with pytest.raises(ValueError):
        DriveSpec(-1.0, 1.0)
    with pytest.raises(ValueError):
        DriveSpec(W_REF, -1.0)
