"""Semiclassical simulator for a driven cavity-ancilla-qubit circuit.

The package models two linearly coupled microwave modes (a readout
cavity and a weakly anharmonic ancilla that carries a longitudinal
qubit coupling) in the mesoscopic Kerr regime: polariton hybridization,
qubit-conditioned bistability of the driven response, hysteresis under
amplitude ramps, and the shot statistics of a latching readout built on
the bifurcation.

Conventions: angular frequencies and rates in rad/s, times in seconds,
field amplitudes dimensionless (sqrt photons), drive amplitudes and
output fields in rad/s and sqrt(photons/s).
"""

from .model import (
    QubitState,
    SystemParams,
    PolaritonParams,
    hybridization_angle,
    polariton_params,
    shifted_ancilla_frequency,
    shifted_polariton_frequency,
    critical_photon_number,
    parameter_curves,
)
from .steady import (
    DriveSpec,
    CubicCoefficients,
    CubicRoot,
    SteadyStateBranch,
    duffing_cubic_photon_numbers,
    coupled_cubic,
    coupled_steady_states,
    polariton_steady_state,
    jacobian_matrix,
    jacobian_stability,
    fold_amplitudes,
    output_field,
    pointer_distance,
    proportions,
    ramp_up_branch,
)
from .dynamics import (
    DriveProtocol,
    Trajectory,
    HysteresisResult,
    BistabilityScan,
    IntegrationError,
    integrate,
    ramp_hysteresis,
    bistability_map,
    multistable_mask,
    pointer_trajectory_distance,
)
from .readout import (
    NoiseModel,
    ShotRecord,
    FidelityReport,
    FidelityScan,
    LatchReferences,
    simulate_shot,
    run_shots,
    latch_references,
    threshold_optimize,
    fidelity_report,
    error_budget,
    calibrate_sigma_det,
    measure_bifurcation_time,
    fidelity_map,
)

__version__ = "0.1.0"
