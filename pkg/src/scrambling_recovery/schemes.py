"""The four recovery schemes with post-selection statistics.

Each scheme scrambles a damaged target (optionally with a bath), undoes the
scrambling, and reads side information out of extra qubits:

* ``original``: plain twirl, no side qubits; the output is a mixture of the
  input with the maximally mixed state.
* ``ico``: a control qubit in |+> switches between forward and backward
  scrambling orders; measuring it in the x basis records the recovery rate
  and post-selecting + distills the state.
* ``mdd``: an auxiliary qubit in |+> conjugates a projective-measurement
  perturbation with sigma_x; it records the squared x component of the
  measurement axis and enables complete recovery when that component is 0.
* ``combined``: both of the above at once.

Two modes are exposed per scheme. The ``analytic`` backend evaluates the
large-bath closed forms (a pure formula evaluator, no large matrices); the
``clifford-exact`` and ``haar-mc`` backends simulate the full composite
including control/auxiliary qubits, which at a single-qubit composite
reproduces the exact finite-dimension curves. Reports label the mode used,
and post-selection returns every branch with its probability, so nothing is
silently discarded.

Direction convention: measurement axes sweep the x-z plane,
r = (sin theta, 0, cos theta); the conjugated partner axis is
r' = (r_x, -r_y, -r_z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    KrausChannel,
    MeasurementDirection,
    projective_measurement_channel,
    recovery_rate,
)
from .ensembles import SIGMA_X, clifford_group_1q, haar_batch
from .linalg import (
    DensityMatrix,
    SystemLayout,
    fidelity_with_pure,
    kron,
    kron_all,
    partial_trace_matrix,
)
from .twirl import TwirlBackend, twirl_matrix

__all__ = [
    "SCHEME_KINDS",
    "SchemeReport",
    "AnalyticCurves",
    "analytic_curves",
    "ico_distilled_rate",
    "mdd_distilled_rate",
    "combined_distilled_rate",
    "ico_success",
    "mdd_success",
    "combined_success",
    "run_original",
    "run_ico",
    "run_mdd",
    "run_combined",
    "ico_output_for_unitary",
    "mdd_output_for_unitary",
    "combined_output_for_unitary",
    "original_output_for_unitary",
]

SCHEME_KINDS = ("original", "ico", "mdd", "combined")

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_PLUS = np.full((2, 2), 0.5, dtype=complex)
_BRA_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
_BRA_MINUS = np.array([1.0, -1.0]) / np.sqrt(2)


# ---------------------------------------------------------------------------
# Distillation-rate and success-probability formulas (large-bath limit)

def ico_distilled_rate(p: float) -> float:
    return 2 * p / (1 + p)


def mdd_distilled_rate(p: float, rx2: float) -> float:
    return 2 * p / (1 + rx2)


def combined_distilled_rate(p: float, rx2: float) -> float:
    return 4 * p / (1 + rx2 + 2 * p)


def ico_success(p: float) -> float:
    return (1 + p) / 2


def mdd_success(rx2: float) -> float:
    return (1 + rx2) / 2


def combined_success(p: float, rx2: float) -> float:
    return (1 + rx2) / 4 + p / 2


# ---------------------------------------------------------------------------
# Exact single-qubit-composite curves (the overlay lines)

@dataclass(frozen=True)
class AnalyticCurves:
    """Closed-form curves for the canonical single-qubit-composite runs:
    pure |0> target, projective perturbation along (sin theta, 0, cos theta)."""

    sigma_c_x: float | None
    sigma_a_x: float | None
    success: float
    fidelity: float


def analytic_curves(scheme: str, theta: float) -> AnalyticCurves:
    """Exact theory values at composite dimension 2 versus the sweep angle."""
    if not -1e-12 <= theta <= np.pi + 1e-12:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    rx2 = float(np.sin(theta) ** 2)
    rz2 = float(np.cos(theta) ** 2)
    if scheme == "ico":
        return AnalyticCurves(2 / 3, None, 5 / 6, (7 + rz2) / 10)
    if scheme == "mdd":
        return AnalyticCurves(None, rx2, (1 + rx2) / 2, 2 / (3 * (1 + rx2)) + 1 / 3)
    if scheme == "combined":
        return AnalyticCurves(
            2 / 3, rx2, (2 * rx2 + 3) / 6, 9 / (8 * rx2 + 12) + 1 / 4
        )
    if scheme == "original":
        # p = 1/3 for a projective qubit measurement; F = p + (1 - p)/2.
        return AnalyticCurves(None, None, 1.0, 2 / 3)
    raise ValueError(f"unknown scheme {scheme!r}")


def _exact_fidelity_ico(direction: MeasurementDirection, target: DensityMatrix) -> float:
    # Tr(rho rho^+) with rho^+ = rho/2 + s rho s/10 + (2/5) I/2 and
    # Tr(rho s rho s) = <s>^2 for pure rho.
    overlap = float(np.trace(target.matrix @ direction.sigma()).real)
    return (7 + overlap**2) / 10


def _exact_fidelity_mdd(direction: MeasurementDirection) -> float:
    rx2 = direction.r_x**2
    return 2 / (3 * (1 + rx2)) + 1 / 3


def _exact_fidelity_combined(
    direction: MeasurementDirection, target: DensityMatrix
) -> float:
    rx2 = direction.r_x**2
    a = float(np.trace(target.matrix @ direction.sigma()).real)
    b = float(np.trace(target.matrix @ direction.partner().sigma()).real)
    return ((3 - rx2 / 2) + (a * b + a * a) / 4 + rx2) / (3 + 2 * rx2)


# ---------------------------------------------------------------------------
# Reports

@dataclass(frozen=True)
class SchemeReport:
    """Per-run record of a recovery scheme."""

    scheme: str
    mode: str  # "exact" (simulated composite) or "asymptotic" (formulas)
    backend: str
    direction: MeasurementDirection | None
    recovery_rate: float
    sigma_c_x: float | None
    sigma_a_x: float | None
    success_probability: float
    post_selected_state: DensityMatrix
    distilled_rate: float
    fidelity: float
    fidelity_analytic: float | None
    branches: dict[str, tuple[float, DensityMatrix]]

    def __post_init__(self):
        if not -1e-9 <= self.success_probability <= 1 + 1e-9:
            raise ValueError(f"success probability {self.success_probability} out of range")
        if not -1e-9 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} out of range")


# ---------------------------------------------------------------------------
# Per-unitary circuit simulators (shared with the shot emulator)

def original_output_for_unitary(
    ch: KrausChannel, rho_tb: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Forward scramble, perturb, backward scramble."""
    out = np.zeros_like(rho_tb)
    udag = u.conj().T
    for m in ch.kraus:
        a = u @ m @ udag
        out += a @ rho_tb @ a.conj().T
    return out


def ico_output_for_unitary(
    ch: KrausChannel, rho_tb: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Switch-controlled twirl: control |+> picks forward (U M U^dag) or
    backward (U^dag M U) conjugation; output lives on control (x) composite."""
    udag = u.conj().T
    rho_in = kron(_PLUS, rho_tb)
    out = np.zeros_like(rho_in)
    for m in ch.kraus:
        w = kron(_P0, u @ m @ udag) + kron(_P1, udag @ m @ u)
        out += w @ rho_in @ w.conj().T
    return out


def _mdd_middle_kraus(
    r: MeasurementDirection, dim_tb: int, bath_dim: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(N_+, N_-) on auxiliary (x) composite, plus the conjugation gate C."""
    d_b = bath_dim
    eye_tb = np.eye(dim_tb, dtype=complex)
    flip = kron(SIGMA_X, np.eye(d_b, dtype=complex))
    c_gate = kron(_P0, eye_tb) + kron(_P1, flip)
    plus, minus = r.projectors()
    n_plus = c_gate @ kron(np.eye(2), kron(plus, np.eye(d_b))) @ c_gate
    n_minus = c_gate @ kron(np.eye(2), kron(minus, np.eye(d_b))) @ c_gate
    return n_plus, n_minus, c_gate


def mdd_output_for_unitary(
    r: MeasurementDirection,
    rho_tb: np.ndarray,
    u: np.ndarray,
    bath_dim: int = 1,
    outcomes: tuple[int, ...] = (1, -1),
) -> np.ndarray:
    """Auxiliary-conjugated measurement inside the twirl.

    The target qubit is the first factor of the composite. ``outcomes``
    selects which measurement branches are kept (both by default, i.e. the
    non-selective channel); a single outcome gives the unnormalized
    selective branch.
    """
    dim_tb = rho_tb.shape[0]
    n_plus, n_minus, _ = _mdd_middle_kraus(r, dim_tb, bath_dim)
    scram = kron(np.eye(2), u)
    middles = {1: n_plus, -1: n_minus}
    rho_in = kron(_PLUS, rho_tb)
    out = np.zeros_like(rho_in)
    for s in outcomes:
        k = scram @ middles[s] @ scram.conj().T
        out += k @ rho_in @ k.conj().T
    return out


def combined_output_for_unitary(
    r: MeasurementDirection,
    rho_tb: np.ndarray,
    u: np.ndarray,
    bath_dim: int = 1,
) -> np.ndarray:
    """Switch control around the auxiliary-conjugated measurement; output
    lives on control (x) auxiliary (x) composite."""
    dim_tb = rho_tb.shape[0]
    n_plus, n_minus, _ = _mdd_middle_kraus(r, dim_tb, bath_dim)
    fwd = kron(np.eye(2), u)
    rho_in = kron_all(_PLUS, _PLUS, rho_tb)
    out = np.zeros_like(rho_in)
    for n_s in (n_plus, n_minus):
        k = kron(_P0, fwd @ n_s @ fwd.conj().T) + kron(
            _P1, fwd.conj().T @ n_s @ fwd
        )
        out += k @ rho_in @ k.conj().T
    return out


def _ensemble_average(per_unitary, backend: TwirlBackend, dim_scrambled: int):
    if backend.kind == "clifford-exact":
        if dim_scrambled != 2:
            raise ValueError(
                "clifford-exact backend requires a scrambled composite of dimension 2"
            )
        members = clifford_group_1q().members
        return sum(per_unitary(g) for g in members) / len(members)
    if backend.kind == "haar-mc":
        gen = backend.rng.generator()
        us = haar_batch(dim_scrambled, backend.samples, gen)
        return sum(per_unitary(u) for u in us) / backend.samples
    raise ValueError(f"ensemble average undefined for backend {backend.kind!r}")


# ---------------------------------------------------------------------------
# Post-selection helpers

def _x_basis_block(rho: np.ndarray, rest_dim: int, sign: int) -> np.ndarray:
    bra = _BRA_PLUS if sign > 0 else _BRA_MINUS
    e = np.kron(bra, np.eye(rest_dim))
    return e @ rho @ e.conj().T


def _sigma_x_expectation(rho: np.ndarray, rest_dim: int) -> float:
    op = np.kron(SIGMA_X, np.eye(rest_dim))
    return float(np.trace(op @ rho).real)


def _reduce_to_target(mat: np.ndarray, d_t: int, bath_dim: int) -> np.ndarray:
    if bath_dim == 1:
        return mat
    return partial_trace_matrix(mat, (d_t, bath_dim), (0,))


def _resolve_target(
    rho_tb: DensityMatrix, d_t: int, bath_dim: int, target: DensityMatrix | None
) -> DensityMatrix:
    if target is not None:
        if target.dim != d_t:
            raise ValueError(f"target dim {target.dim} != {d_t}")
        return target
    reduced = DensityMatrix(_reduce_to_target(rho_tb.matrix, d_t, bath_dim))
    if not reduced.is_pure():
        raise ValueError(
            "initial target state is mixed; pass an explicit pure target "
            "for the fidelity reference"
        )
    return reduced


def _split_dims(dim_tb: int, bath_dim: int) -> int:
    if bath_dim < 1 or dim_tb % bath_dim:
        raise ValueError(f"bath dimension {bath_dim} incompatible with composite {dim_tb}")
    return dim_tb // bath_dim


# ---------------------------------------------------------------------------
# Scheme runners

def run_original(
    ch: KrausChannel,
    rho_t: DensityMatrix,
    rho_b: DensityMatrix | None,
    backend: TwirlBackend,
    target: DensityMatrix | None = None,
) -> SchemeReport:
    """Plain twirl of the perturbation; recovers p rho + (1 - p) I/D."""
    rho_tb = rho_t.matrix if rho_b is None else kron(rho_t.matrix, rho_b.matrix)
    bath_dim = 1 if rho_b is None else rho_b.dim
    dim_tb = rho_tb.shape[0]
    if ch.dim != dim_tb:
        raise ValueError(f"channel dim {ch.dim} != composite dim {dim_tb}")
    p = recovery_rate(ch)
    target = target if target is not None else rho_t
    if not target.is_pure():
        raise ValueError("fidelity reference must be pure")

    if backend.kind == "analytic":
        out_tb = twirl_matrix(ch, rho_tb, backend)
        mode = "asymptotic"
    else:
        out_tb = _ensemble_average(
            lambda u: original_output_for_unitary(ch, rho_tb, u), backend, dim_tb
        )
        mode = "exact"
    out_t = DensityMatrix(_reduce_to_target(out_tb, rho_t.dim, bath_dim))
    fid = fidelity_with_pure(out_t, target)
    fid_analytic = p + (1 - p) / rho_t.dim
    return SchemeReport(
        scheme="original",
        mode=mode,
        backend=backend.label(),
        direction=None,
        recovery_rate=p,
        sigma_c_x=None,
        sigma_a_x=None,
        success_probability=1.0,
        post_selected_state=out_t,
        distilled_rate=p,
        fidelity=fid,
        fidelity_analytic=fid_analytic,
        branches={"unconditional": (1.0, out_t)},
    )


def _branch_states(
    rho_full: np.ndarray, dim_tb: int, d_t: int, bath_dim: int
) -> dict[str, tuple[float, DensityMatrix]]:
    branches = {}
    for name, sign in (("+", 1), ("-", -1)):
        block = _x_basis_block(rho_full, dim_tb, sign)
        prob = float(np.trace(block).real)
        if prob > 1e-12:
            state = DensityMatrix(_reduce_to_target(block / prob, d_t, bath_dim))
            branches[name] = (prob, state)
    return branches


def run_ico(
    ch: KrausChannel,
    rho_tb: DensityMatrix,
    backend: TwirlBackend,
    bath_dim: int = 1,
    target: DensityMatrix | None = None,
    direction: MeasurementDirection | None = None,
) -> SchemeReport:
    """Switch-controlled recovery; the control qubit is prepared in |+>
    internally and measured in the x basis.

    ``direction`` is optional metadata used only to fill the closed-form
    reference fidelity when the composite is a single qubit.
    """
    dim_tb = rho_tb.dim
    d_t = _split_dims(dim_tb, bath_dim)
    if ch.dim != dim_tb:
        raise ValueError(f"channel dim {ch.dim} != composite dim {dim_tb}")
    p = recovery_rate(ch)
    target = _resolve_target(rho_tb, d_t, bath_dim, target)

    fid_analytic = None
    if dim_tb == 2 and direction is not None:
        fid_analytic = _exact_fidelity_ico(direction, target)

    if backend.kind == "analytic":
        rho_t_in = _reduce_to_target(rho_tb.matrix, d_t, bath_dim)
        rate = ico_distilled_rate(p)
        plus = DensityMatrix(rate * rho_t_in + (1 - rate) * np.eye(d_t) / d_t)
        minus = DensityMatrix.maximally_mixed(d_t)
        p_plus = ico_success(p)
        branches = {"+": (p_plus, plus), "-": (1 - p_plus, minus)}
        return SchemeReport(
            scheme="ico",
            mode="asymptotic",
            backend=backend.label(),
            direction=direction,
            recovery_rate=p,
            sigma_c_x=p,
            sigma_a_x=None,
            success_probability=p_plus,
            post_selected_state=plus,
            distilled_rate=rate,
            fidelity=fidelity_with_pure(plus, target),
            fidelity_analytic=fid_analytic,
            branches=branches,
        )

    rho_full = _ensemble_average(
        lambda u: ico_output_for_unitary(ch, rho_tb.matrix, u), backend, dim_tb
    )
    sigma_c = _sigma_x_expectation(rho_full, dim_tb)
    branches = _branch_states(rho_full, dim_tb, d_t, bath_dim)
    p_plus, plus_state = branches["+"]
    return SchemeReport(
        scheme="ico",
        mode="exact",
        backend=backend.label(),
        direction=direction,
        recovery_rate=p,
        sigma_c_x=sigma_c,
        sigma_a_x=None,
        success_probability=p_plus,
        post_selected_state=plus_state,
        distilled_rate=ico_distilled_rate(p),
        fidelity=fidelity_with_pure(plus_state, target),
        fidelity_analytic=fid_analytic,
        branches=branches,
    )


def run_mdd(
    r: MeasurementDirection,
    rho_tb: DensityMatrix,
    backend: TwirlBackend,
    bath_dim: int = 1,
    target: DensityMatrix | None = None,
) -> SchemeReport:
    """Direction-recording recovery for a projective qubit measurement.

    The perturbation is restricted by construction: it is the non-selective
    projective measurement along ``r`` on the target qubit (first factor).
    """
    dim_tb = rho_tb.dim
    d_t = _split_dims(dim_tb, bath_dim)
    if d_t != 2:
        raise ValueError("the direction-recording scheme needs a qubit target")
    target = _resolve_target(rho_tb, d_t, bath_dim, target)
    rx2 = r.r_x**2

    if bath_dim == 1:
        ch = projective_measurement_channel(r)
    else:
        lay = SystemLayout.of(target=2, bath=bath_dim)
        ch = projective_measurement_channel(r, lay, "target")
    p = recovery_rate(ch)
    fid_analytic = _exact_fidelity_mdd(r) if dim_tb == 2 else None

    if backend.kind == "analytic":
        rho_t_in = _reduce_to_target(rho_tb.matrix, d_t, bath_dim)
        rate = mdd_distilled_rate(p, rx2)
        plus = DensityMatrix(rate * rho_t_in + (1 - rate) * np.eye(d_t) / d_t)
        minus = DensityMatrix.maximally_mixed(d_t)
        p_plus = mdd_success(rx2)
        branches = {"+": (p_plus, plus), "-": (1 - p_plus, minus)}
        return SchemeReport(
            scheme="mdd",
            mode="asymptotic",
            backend=backend.label(),
            direction=r,
            recovery_rate=p,
            sigma_c_x=None,
            sigma_a_x=rx2,
            success_probability=p_plus,
            post_selected_state=plus,
            distilled_rate=rate,
            fidelity=fidelity_with_pure(plus, target),
            fidelity_analytic=fid_analytic,
            branches=branches,
        )

    rho_full = _ensemble_average(
        lambda u: mdd_output_for_unitary(r, rho_tb.matrix, u, bath_dim),
        backend,
        dim_tb,
    )
    sigma_a = _sigma_x_expectation(rho_full, dim_tb)
    branches = _branch_states(rho_full, dim_tb, d_t, bath_dim)
    p_plus, plus_state = branches["+"]
    return SchemeReport(
        scheme="mdd",
        mode="exact",
        backend=backend.label(),
        direction=r,
        recovery_rate=p,
        sigma_c_x=None,
        sigma_a_x=sigma_a,
        success_probability=p_plus,
        post_selected_state=plus_state,
        distilled_rate=mdd_distilled_rate(p, rx2),
        fidelity=fidelity_with_pure(plus_state, target),
        fidelity_analytic=fid_analytic,
        branches=branches,
    )


def run_combined(
    r: MeasurementDirection,
    rho_tb: DensityMatrix,
    backend: TwirlBackend,
    bath_dim: int = 1,
    target: DensityMatrix | None = None,
) -> SchemeReport:
    """Switch control and direction recording together; post-selects the
    (+, +) outcome of the control and auxiliary qubits."""
    dim_tb = rho_tb.dim
    d_t = _split_dims(dim_tb, bath_dim)
    if d_t != 2:
        raise ValueError("the combined scheme needs a qubit target")
    target = _resolve_target(rho_tb, d_t, bath_dim, target)
    rx2 = r.r_x**2

    if bath_dim == 1:
        ch = projective_measurement_channel(r)
    else:
        lay = SystemLayout.of(target=2, bath=bath_dim)
        ch = projective_measurement_channel(r, lay, "target")
    p = recovery_rate(ch)
    fid_analytic = _exact_fidelity_combined(r, target) if dim_tb == 2 else None

    if backend.kind == "analytic":
        rho_t_in = _reduce_to_target(rho_tb.matrix, d_t, bath_dim)
        rate = combined_distilled_rate(p, rx2)
        state = DensityMatrix(rate * rho_t_in + (1 - rate) * np.eye(d_t) / d_t)
        p_pp = combined_success(p, rx2)
        return SchemeReport(
            scheme="combined",
            mode="asymptotic",
            backend=backend.label(),
            direction=r,
            recovery_rate=p,
            sigma_c_x=p,
            sigma_a_x=rx2,
            success_probability=p_pp,
            post_selected_state=state,
            distilled_rate=rate,
            fidelity=fidelity_with_pure(state, target),
            fidelity_analytic=fid_analytic,
            branches={"++": (p_pp, state)},
        )

    rho_full = _ensemble_average(
        lambda u: combined_output_for_unitary(r, rho_tb.matrix, u, bath_dim),
        backend,
        dim_tb,
    )
    dim_atb = 2 * dim_tb
    sigma_c = _sigma_x_expectation(rho_full, dim_atb)
    rho_no_c = partial_trace_matrix(rho_full, (2, 2, dim_tb), (1, 2))
    sigma_a = _sigma_x_expectation(rho_no_c, dim_tb)

    branches = {}
    for c_name, c_sign in (("+", 1), ("-", -1)):
        c_block = _x_basis_block(rho_full, dim_atb, c_sign)
        for a_name, a_sign in (("+", 1), ("-", -1)):
            block = _x_basis_block(c_block, dim_tb, a_sign)
            prob = float(np.trace(block).real)
            if prob > 1e-12:
                state = DensityMatrix(_reduce_to_target(block / prob, d_t, bath_dim))
                branches[c_name + a_name] = (prob, state)
    p_pp, state_pp = branches["++"]
    return SchemeReport(
        scheme="combined",
        mode="exact",
        backend=backend.label(),
        direction=r,
        recovery_rate=p,
        sigma_c_x=sigma_c,
        sigma_a_x=sigma_a,
        success_probability=p_pp,
        post_selected_state=state_pp,
        distilled_rate=combined_distilled_rate(p, rx2),
        fidelity=fidelity_with_pure(state_pp, target),
        fidelity_analytic=fid_analytic,
        branches=branches,
    )
