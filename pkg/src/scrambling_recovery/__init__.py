"""Scrambling-based recovery of damaged quantum information.

Desk-scale simulator and analysis library: twirling channels, recovery
schemes with post-selection (switch-controlled, measurement-direction
dependent, and their combination), iterative recovery recursions, noise
calibration predictors, and a finite-shot experiment emulator.
"""

from .linalg import (
    DensityMatrix,
    SystemLayout,
    fidelity_with_pure,
    hs_inner,
    hs_norm,
    kron,
    partial_trace,
)
from .ensembles import (
    RngStream,
    UnitaryEnsemble,
    clifford_group_1q,
    haar_sample,
    pauli_group_1q,
    scrambler_3q,
    verify_2design,
    weingarten_moment,
)
from .channels import (
    KrausChannel,
    MeasurementDirection,
    apply,
    average_fidelity_from_p,
    choi_matrix,
    depolarizing_channel,
    orthogonal_unitary_basis,
    projective_measurement_channel,
    recovery_rate,
    werner_fidelity,
)
from .twirl import TwirlBackend, TwirlResult, asymptotic_residual, twirl_output
from .schemes import (
    SchemeReport,
    analytic_curves,
    run_combined,
    run_ico,
    run_mdd,
    run_original,
)
from .iterative import (
    RecursionSpec,
    RecursionTrace,
    convergence_coefficients,
    eico_success_probability,
    iterate,
    simulate_iteration_matrix,
)
from .calibration import (
    CalibrationRecord,
    NoisyPrediction,
    load_calibration,
    predict_combined,
    predict_expectation,
    predict_fidelity_ico,
    predict_fidelity_mdd,
    save_calibration,
    synthesize_calibration,
)
from .shots import ShotPlan, ShotTally, run_emulated_experiment, sample_outcomes

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "SystemLayout",
    "fidelity_with_pure",
    "hs_inner",
    "hs_norm",
    "kron",
    "partial_trace",
    "RngStream",
    "UnitaryEnsemble",
    "clifford_group_1q",
    "haar_sample",
    "pauli_group_1q",
    "scrambler_3q",
    "verify_2design",
    "weingarten_moment",
    "KrausChannel",
    "MeasurementDirection",
    "apply",
    "average_fidelity_from_p",
    "choi_matrix",
    "depolarizing_channel",
    "orthogonal_unitary_basis",
    "projective_measurement_channel",
    "recovery_rate",
    "werner_fidelity",
    "TwirlBackend",
    "TwirlResult",
    "asymptotic_residual",
    "twirl_output",
    "SchemeReport",
    "analytic_curves",
    "run_combined",
    "run_ico",
    "run_mdd",
    "run_original",
    "RecursionSpec",
    "RecursionTrace",
    "convergence_coefficients",
    "eico_success_probability",
    "iterate",
    "simulate_iteration_matrix",
    "CalibrationRecord",
    "NoisyPrediction",
    "load_calibration",
    "predict_combined",
    "predict_expectation",
    "predict_fidelity_ico",
    "predict_fidelity_mdd",
    "save_calibration",
    "synthesize_calibration",
    "ShotPlan",
    "ShotTally",
    "run_emulated_experiment",
    "sample_outcomes",
]
