"""CPTP channels in Kraus form, standard constructors, and the scalar
functionals built on them: recovery rate, average fidelity, and the
channel-state (Choi) correspondence.

Convention: a channel acts as ``Lambda(rho) = sum_k M_k rho M_k^dag`` with
completeness ``sum_k M_k^dag M_k = I``. All quantitative results in this
library depend only on ``|Tr M_k|^2`` or on self-adjoint Kraus sets, so the
choice is observationally equivalent to the adjoint convention; it is fixed
here once to avoid drift.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DensityMatrix,
    SystemLayout,
    as_complex_matrix,
    hs_inner,
    kron_all,
)
from .ensembles import PAULI_1Q, haar_sample

__all__ = [
    "COMPLETENESS_TOL",
    "KrausChannel",
    "MeasurementDirection",
    "apply",
    "projective_measurement_channel",
    "depolarizing_channel",
    "orthogonal_unitary_basis",
    "recovery_rate",
    "projective_recovery_rate",
    "average_fidelity_from_p",
    "choi_matrix",
    "choi_apply",
    "werner_fidelity",
    "random_cptp_channel",
]

#: Tolerance on ||sum_k M_k^dag M_k - I||_max.
COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map held as a finite list of Kraus operators."""

    dim: int
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(as_complex_matrix(m) for m in self.kraus)
        if not mats:
            raise ValueError("a channel needs at least one Kraus operator")
        for m in mats:
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"Kraus shape {m.shape} != ({self.dim}, {self.dim})")
        total = sum(m.conj().T @ m for m in mats)
        defect = float(np.max(np.abs(total - np.eye(self.dim))))
        if defect > COMPLETENESS_TOL:
            raise ValueError(f"Kraus completeness violated: max defect {defect:.3e}")
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "kraus", mats)

    @classmethod
    def identity(cls, dim: int) -> "KrausChannel":
        return cls(dim, (np.eye(dim, dtype=complex),))

    @classmethod
    def from_unitary(cls, u) -> "KrausChannel":
        u = as_complex_matrix(u)
        return cls(u.shape[0], (u,))

    def apply_matrix(self, mat: np.ndarray) -> np.ndarray:
        """sum_k M_k mat M_k^dag on a raw (possibly unnormalized) matrix."""
        mat = as_complex_matrix(mat)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"state dim {mat.shape} != channel dim {self.dim}")
        return sum(m @ mat @ m.conj().T for m in self.kraus)

    def compose(self, inner: "KrausChannel") -> "KrausChannel":
        """Channel equal to applying ``inner`` first, then this one."""
        if inner.dim != self.dim:
            raise ValueError("composed channels must share a dimension")
        products = tuple(a @ b for a in self.kraus for b in inner.kraus)
        return KrausChannel(self.dim, products)


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply a channel to a state; trace and positivity are preserved."""
    return DensityMatrix(ch.apply_matrix(rho.matrix))


@dataclass(frozen=True)
class MeasurementDirection:
    """A unit 3-vector fixing a projective qubit measurement axis."""

    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self):
        norm2 = self.r_x**2 + self.r_y**2 + self.r_z**2
        if abs(norm2 - 1.0) > 1e-10:
            raise ValueError(f"direction must be a unit vector, |r|^2 = {norm2}")

    @classmethod
    def from_angle(cls, theta: float) -> "MeasurementDirection":
        """Direction (sin theta, 0, cos theta) in the x-z plane."""
        return cls(float(np.sin(theta)), 0.0, float(np.cos(theta)))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.r_x, self.r_y, self.r_z])

    def sigma(self) -> np.ndarray:
        """The operator r . sigma."""
        sx, sy, sz = PAULI_1Q[1], PAULI_1Q[2], PAULI_1Q[3]
        return self.r_x * sx + self.r_y * sy + self.r_z * sz

    def partner(self) -> "MeasurementDirection":
        """The direction obtained by rotating pi about the x axis."""
        return MeasurementDirection(self.r_x, -self.r_y, -self.r_z)

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(Pi_+, Pi_-) with Pi_s = (I + s r.sigma)/2."""
        rs = self.sigma()
        return (np.eye(2) + rs) / 2, (np.eye(2) - rs) / 2


def projective_measurement_channel(
    r: MeasurementDirection,
    layout: SystemLayout | None = None,
    target: str | None = None,
) -> KrausChannel:
    """Non-selective projective measurement along ``r`` on a qubit.

    With no layout the channel acts on a bare qubit. Otherwise the two
    projectors act on the ``target`` subsystem (which must have dimension 2)
    and as identity on everything else.
    """
    plus, minus = r.projectors()
    if layout is None:
        return KrausChannel(2, (plus, minus))
    if target is None:
        raise ValueError("a layout requires a target label")
    if layout.dim_of(target) != 2:
        raise ValueError(
            f"projective measurement needs a qubit target; {target!r} has "
            f"dimension {layout.dim_of(target)}"
        )
    t = layout.index(target)
    factors = [np.eye(d, dtype=complex) for d in layout.dims]
    ops = []
    for proj in (plus, minus):
        factors[t] = proj
        ops.append(kron_all(*factors))
    return KrausChannel(layout.dim, tuple(ops))


def orthogonal_unitary_basis(dim: int) -> list[np.ndarray]:
    """D^2 pairwise HS-orthogonal unitaries with U_0 = I and Tr(U_i^dag U_j) = D delta_ij.

    Powers of two use Pauli strings; any other dimension uses the
    clock-and-shift (Weyl) pairs X^a Z^b.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    n = dim.bit_length() - 1
    if dim == 2**n:
        basis = []
        for combo in itertools.product(PAULI_1Q, repeat=n) if n else [()]:
            basis.append(kron_all(*combo) if combo else np.eye(1, dtype=complex))
        return basis
    shift = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        shift[(j + 1) % dim, j] = 1.0
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def depolarizing_channel(dim: int, keep: float) -> KrausChannel:
    """Channel rho -> keep * rho + (1 - keep) * I/D.

    Kraus operators come from the orthogonal unitary basis with weight
    ((D^2 - 1) keep + 1)/D^2 on the identity and (1 - keep)/D^2 on each of
    the other D^2 - 1 elements.
    """
    if not 0.0 <= keep <= 1.0:
        raise ValueError(f"keep probability must lie in [0, 1], got {keep}")
    basis = orthogonal_unitary_basis(dim)
    w0 = ((dim**2 - 1) * keep + 1) / dim**2
    wi = (1 - keep) / dim**2
    ops = [np.sqrt(w0) * basis[0]]
    if wi > 0:
        ops.extend(np.sqrt(wi) * u for u in basis[1:])
    return KrausChannel(dim, tuple(ops))


def recovery_rate(ch: KrausChannel) -> float:
    """The scalar p = (sum_k |Tr M_k|^2 - 1) / (D^2 - 1).

    This is the weight of the input state surviving a Haar twirl of the
    channel. It can be negative for some channels; the value is returned
    as-is rather than clamped, so a modeling error upstream stays visible.
    """
    if ch.dim < 2:
        raise ValueError("recovery rate requires dim >= 2")
    total = sum(abs(np.trace(m)) ** 2 for m in ch.kraus)
    return float((total - 1) / (ch.dim**2 - 1))


def projective_recovery_rate(d_target: int, d_total: int) -> float:
    """Recovery rate (D^2/D_t - 1)/(D^2 - 1) of a rank-1 projective
    measurement on a ``d_target``-dimensional system inside a
    ``d_total``-dimensional composite; tends to 1/D_t for large D."""
    if d_total % d_target:
        raise ValueError("target dimension must divide the composite dimension")
    return (d_total**2 / d_target - 1) / (d_total**2 - 1)


def average_fidelity_from_p(p: float, dim: int) -> float:
    """Average fidelity (1 - 1/D) p + 1/D of the twirled channel over
    Haar-random pure inputs."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    return (1 - 1 / dim) * p + 1 / dim


def choi_matrix(ch: KrausChannel) -> DensityMatrix:
    """Trace-normalized Choi state (I x E)(|phi+><phi+|) of the channel.

    The first tensor factor is the untouched reference, the second is the
    channel output. The channel is recovered through :func:`choi_apply`,
    which carries the compensating factor D.
    """
    d = ch.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    units = np.eye(d, dtype=complex)
    for j in range(d):
        for k in range(d):
            ejk = np.outer(units[j], units[k].conj())
            out += np.kron(ejk, ch.apply_matrix(ejk))
    return DensityMatrix(out / d)


def choi_apply(choi: DensityMatrix, rho: np.ndarray) -> np.ndarray:
    """Reconstruct the channel action E(rho) = D Tr_ref[J (rho^T x I)]."""
    d2 = choi.dim
    d = int(round(np.sqrt(d2)))
    if d * d != d2:
        raise ValueError("Choi state dimension must be a perfect square")
    rho = as_complex_matrix(rho)
    j = choi.matrix.reshape(d, d, d, d)  # [ref_row, out_row, ref_col, out_col]
    # Tr_ref[J (rho^T x I)] contracts rho[a, c] against the two ref axes.
    return d * np.einsum("abcd,ac->bd", j, rho)


def werner_fidelity(p: float) -> float:
    """Overlap (1 + 3p)/4 of the two-qubit Werner state with weight p on the
    maximally entangled component."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (1 + 3 * p) / 4


def random_cptp_channel(dim: int, n_kraus: int, rng) -> KrausChannel:
    """Random CPTP channel drawn by slicing a Haar isometry (Stinespring)."""
    big = haar_sample(dim * n_kraus, rng)
    v = big[:, :dim]
    mats = tuple(v[i * dim : (i + 1) * dim, :] for i in range(n_kraus))
    return KrausChannel(dim, mats)
