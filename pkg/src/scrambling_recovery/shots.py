"""Finite-shot emulation of the scheme experiments.

For every sweep angle the exact per-element outcome distributions are
computed from the scheme circuits (one distribution per ensemble element),
optionally corrupted by independent per-qubit readout flips, and sampled
multinomially with a fixed per-(angle, element) random stream. Pooling the
counts over the ensemble reproduces the statistics of running the circuit
element by element on hardware.

Measured bits: control and auxiliary qubits in the x basis (+ maps to bit
0), the target in the z basis. The fidelity estimator is the frequency of
target outcome 0 among post-selected shots, which equals Tr(rho^+ |0><0|)
in expectation for the |0> target preparation. Intervals are Wilson at 95%.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import MeasurementDirection, projective_measurement_channel, recovery_rate
from .ensembles import RngStream, UnitaryEnsemble, clifford_group_1q
from .linalg import DensityMatrix
from .schemes import (
    AnalyticCurves,
    analytic_curves,
    combined_output_for_unitary,
    ico_output_for_unitary,
    mdd_output_for_unitary,
    original_output_for_unitary,
)

__all__ = [
    "ShotPlan",
    "ShotTally",
    "EmulatedPoint",
    "sample_outcomes",
    "wilson_interval",
    "outcome_distribution",
    "tally_outcomes",
    "run_emulated_experiment",
]

_Z95 = 1.959963984540054

_KET_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
_KET_MINUS = np.array([1.0, -1.0]) / np.sqrt(2)
_KET_0 = np.array([1.0, 0.0])
_KET_1 = np.array([0.0, 1.0])


@dataclass(frozen=True)
class ShotPlan:
    """Sampling plan: shots per circuit, sweep angles, ensemble, stream.

    ``readout_flips`` is an optional pair (p(read 1 | true 0),
    p(read 0 | true 1)) applied independently to every measured qubit.
    """

    shots: int
    thetas: tuple[float, ...]
    rng: RngStream
    ensemble: UnitaryEnsemble | None = None
    readout_flips: tuple[float, float] | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        thetas = tuple(float(t) for t in self.thetas)
        if any(t < -1e-12 or t > np.pi + 1e-12 for t in thetas):
            raise ValueError("sweep angles must lie in [0, pi]")
        object.__setattr__(self, "thetas", thetas)
        if self.readout_flips is not None:
            e0, e1 = self.readout_flips
            if not (0 <= e0 <= 1 and 0 <= e1 <= 1):
                raise ValueError("readout flip probabilities must lie in [0, 1]")

    def members(self) -> tuple[np.ndarray, ...]:
        ens = self.ensemble if self.ensemble is not None else clifford_group_1q()
        if not ens.is_finite:
            raise ValueError("shot emulation needs a finite ensemble")
        return ens.members


@dataclass(frozen=True)
class ShotTally:
    """Outcome counts per (angle, ensemble element).

    ``clamp_events``/``worst_clamp`` record how often (and how far below
    zero) probability dust had to be clamped before sampling.
    """

    scheme: str
    thetas: tuple[float, ...]
    outcome_labels: tuple[str, ...]
    counts: np.ndarray  # (n_theta, n_elements, n_outcomes)
    shots: int
    clamp_events: int = 0
    worst_clamp: float = 0.0

    def pooled(self, theta_index: int) -> np.ndarray:
        return self.counts[theta_index].sum(axis=0)


@dataclass(frozen=True)
class EmulatedPoint:
    """Pooled estimators at one sweep angle, with the exact references."""

    theta: float
    rx2: float
    recovery_rate: float
    sigma_c_x: float | None
    sigma_a_x: float | None
    success: float
    fidelity: float
    fidelity_ci: tuple[float, float]
    selected_count: int
    total_shots: int
    analytic: AnalyticCurves


def sample_outcomes(
    probabilities, shots: int, rng, clamp_log: list | None = None
) -> np.ndarray:
    """Multinomial draw of ``shots`` outcomes; deterministic given the rng.

    Probabilities more negative than -1e-12 are an error. Negative dust
    above that threshold is clamped to zero and the vector renormalized;
    each clamp is appended to ``clamp_log`` when one is supplied.
    """
    probs = np.asarray(probabilities, dtype=float)
    if probs.min() < -1e-12:
        raise ValueError(f"negative probability {probs.min()} beyond tolerance")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")
    if probs.min() < 0:
        if clamp_log is not None:
            clamp_log.append(float(probs.min()))
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return gen.multinomial(shots, probs)


def wilson_interval(successes: int, total: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1 + z**2 / total
    center = (phat + z**2 / (2 * total)) / denom
    half = z * np.sqrt(phat * (1 - phat) / total + z**2 / (4 * total**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _measurement_vectors(n_x_qubits: int) -> tuple[list[np.ndarray], tuple[str, ...]]:
    """Product measurement vectors: n x-basis qubits then the z-basis target.
    Bit order puts + (and target 0) first."""
    vectors = [np.array([1.0])]
    labels = [""]
    for _ in range(n_x_qubits):
        vectors = [np.kron(v, k) for v in vectors for k in (_KET_PLUS, _KET_MINUS)]
        labels = [lab + s for lab in labels for s in ("+", "-")]
    vectors = [np.kron(v, k) for v in vectors for k in (_KET_0, _KET_1)]
    labels = [lab + s for lab in labels for s in ("0", "1")]
    return vectors, tuple(labels)


_SCHEME_X_QUBITS = {"original": 0, "ico": 1, "mdd": 1, "combined": 2}


def outcome_distribution(
    scheme: str,
    direction: MeasurementDirection,
    u: np.ndarray,
    target: DensityMatrix | None = None,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Exact joint outcome probabilities of one circuit instance.

    The composite is a bare qubit (virtual bath); ``u`` is the scrambling
    element in force for this instance.
    """
    if scheme not in _SCHEME_X_QUBITS:
        raise ValueError(f"unknown scheme {scheme!r}")
    rho_t = (target if target is not None else DensityMatrix.pure([1, 0])).matrix
    ch = projective_measurement_channel(direction)
    if scheme == "original":
        rho = original_output_for_unitary(ch, rho_t, u)
    elif scheme == "ico":
        rho = ico_output_for_unitary(ch, rho_t, u)
    elif scheme == "mdd":
        rho = mdd_output_for_unitary(direction, rho_t, u)
    else:
        rho = combined_output_for_unitary(direction, rho_t, u)
    vectors, labels = _measurement_vectors(_SCHEME_X_QUBITS[scheme])
    probs = np.array([float((v.conj() @ rho @ v).real) for v in vectors])
    return probs, labels


def _apply_readout_flips(probs: np.ndarray, n_bits: int, flips) -> np.ndarray:
    e0, e1 = flips
    f = np.array([[1 - e0, e1], [e0, 1 - e1]])
    tensor = probs.reshape((2,) * n_bits)
    for axis in range(n_bits):
        tensor = np.tensordot(f, tensor, axes=([1], [axis]))
        tensor = np.moveaxis(tensor, 0, axis)
    return tensor.reshape(-1)


def tally_outcomes(
    scheme: str, plan: ShotPlan, target: DensityMatrix | None = None
) -> ShotTally:
    """Sample every (angle, element) circuit of the plan."""
    members = plan.members()
    n_bits = _SCHEME_X_QUBITS[scheme] + 1
    counts = None
    labels: tuple[str, ...] = ()
    clamp_log: list[float] = []
    for i, theta in enumerate(plan.thetas):
        direction = MeasurementDirection.from_angle(theta)
        for j, g in enumerate(members):
            probs, labels = outcome_distribution(scheme, direction, g, target)
            if plan.readout_flips is not None:
                probs = _apply_readout_flips(probs, n_bits, plan.readout_flips)
            if counts is None:
                counts = np.zeros(
                    (len(plan.thetas), len(members), len(labels)), dtype=np.int64
                )
            stream = plan.rng.stream(i * len(members) + j)
            counts[i, j] = sample_outcomes(probs, plan.shots, stream, clamp_log)
    return ShotTally(
        scheme,
        plan.thetas,
        labels,
        counts,
        plan.shots,
        clamp_events=len(clamp_log),
        worst_clamp=min(clamp_log) if clamp_log else 0.0,
    )


def run_emulated_experiment(
    scheme: str, plan: ShotPlan, target: DensityMatrix | None = None
) -> list[EmulatedPoint]:
    """Pooled shot estimates at every sweep angle with Wilson intervals."""
    tally = tally_outcomes(scheme, plan, target)
    labels = tally.outcome_labels
    n = plan.shots * len(plan.members())
    points = []
    for i, theta in enumerate(plan.thetas):
        pooled = tally.pooled(i)
        direction = MeasurementDirection.from_angle(theta)
        p_channel = recovery_rate(projective_measurement_channel(direction))

        def marginal(bit: int, symbol: str) -> int:
            return int(sum(c for lab, c in zip(labels, pooled) if lab[bit] == symbol))

        sigma_c = sigma_a = None
        if scheme == "ico":
            sigma_c = (marginal(0, "+") - marginal(0, "-")) / n
        elif scheme == "mdd":
            sigma_a = (marginal(0, "+") - marginal(0, "-")) / n
        elif scheme == "combined":
            sigma_c = (marginal(0, "+") - marginal(0, "-")) / n
            sigma_a = (marginal(1, "+") - marginal(1, "-")) / n

        select_prefix = {"original": "", "ico": "+", "mdd": "+", "combined": "++"}[
            scheme
        ]
        n_sel = int(
            sum(c for lab, c in zip(labels, pooled) if lab.startswith(select_prefix))
        )
        n_sel_zero = int(
            sum(
                c
                for lab, c in zip(labels, pooled)
                if lab.startswith(select_prefix) and lab.endswith("0")
            )
        )
        success = n_sel / n
        fidelity = n_sel_zero / n_sel if n_sel else float("nan")
        ci = wilson_interval(n_sel_zero, n_sel)
        points.append(
            EmulatedPoint(
                theta=theta,
                rx2=float(np.sin(theta) ** 2),
                recovery_rate=p_channel,
                sigma_c_x=sigma_c,
                sigma_a_x=sigma_a,
                success=success,
                fidelity=fidelity,
                fidelity_ci=ci,
                selected_count=n_sel,
                total_shots=n,
                analytic=analytic_curves(scheme, theta),
            )
        )
    return points
