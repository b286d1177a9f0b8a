"""Unitary ensembles: Haar sampling, the 24-element single-qubit Clifford
group, the Pauli group, moment formulas for Haar averages, and the 3-qubit
approximate scrambler.

Randomness is always routed through :class:`RngStream` so that identical
(seed, stream index) pairs reproduce identical sample sequences, including
across parallel sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .linalg import kron

__all__ = [
    "UNITARITY_TOL",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULI_1Q",
    "RngStream",
    "UnitaryEnsemble",
    "haar_sample",
    "haar_batch",
    "clifford_group_1q",
    "pauli_group_1q",
    "weingarten_moment",
    "Design2Report",
    "verify_2design",
    "scrambler_3q",
]

#: Tolerance on ||U^dag U - I||_max for unitarity validation.
UNITARITY_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
#: I, X, Y, Z in that order.
PAULI_1Q = (np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by (master seed, stream index).

    Streams with distinct indices are statistically independent; the split
    uses numpy's SeedSequence spawn keys, so no two indices collide.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))

    def stream(self, index: int) -> "RngStream":
        """Derived stream for worker ``index`` under the same master seed."""
        return RngStream(self.master_seed, index)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def haar_batch(dim: int, count: int, rng) -> np.ndarray:
    """``count`` independent Haar-distributed unitaries, shape (count, dim, dim).

    Construction: QR-factorize a complex standard-Gaussian matrix and
    rescale each column by the phase of the corresponding diagonal entry of
    R, so that R has positive real diagonal. The raw QR factor alone is not
    Haar; the phase fix restores the correct distribution.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    gen = _as_generator(rng)
    z = gen.normal(size=(count, dim, dim)) + 1j * gen.normal(size=(count, dim, dim))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.einsum("bii->bi", r)
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def haar_sample(dim: int, rng) -> np.ndarray:
    """One Haar-distributed ``dim x dim`` unitary."""
    return haar_batch(dim, 1, rng)[0]


def _check_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> None:
    d = u.shape[0]
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
    if defect > tol:
        raise ValueError(f"matrix is not unitary: max defect {defect:.3e}")


@dataclass(frozen=True, eq=False)
class UnitaryEnsemble:
    """A finite set of unitaries, or a Haar Monte-Carlo sampling recipe.

    ``kind`` is one of ``"clifford-1q"``, ``"pauli-1q"``, ``"explicit"``,
    ``"haar-mc"``. Finite kinds carry their members (each validated
    unitary); the Monte-Carlo kind carries a sample count and stream.
    """

    kind: str
    dim: int
    members: tuple[np.ndarray, ...] | None = None
    samples: int | None = None
    rng: RngStream | None = None

    def __post_init__(self):
        if self.kind == "haar-mc":
            if self.samples is None or self.samples < 1 or self.rng is None:
                raise ValueError("haar-mc ensemble needs samples >= 1 and an RngStream")
            if self.members is not None:
                raise ValueError("haar-mc ensemble does not store members")
            return
        if self.members is None:
            raise ValueError(f"{self.kind} ensemble needs explicit members")
        members = tuple(np.asarray(m, dtype=complex) for m in self.members)
        for m in members:
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"member shape {m.shape} != ({self.dim}, {self.dim})")
            _check_unitary(m)
            m.setflags(write=False)
        if self.kind == "clifford-1q" and len(members) != 24:
            raise ValueError("the single-qubit Clifford group has exactly 24 elements")
        if self.kind == "pauli-1q" and len(members) != 4:
            raise ValueError("the single-qubit Pauli group has exactly 4 elements")
        object.__setattr__(self, "members", members)

    @property
    def is_finite(self) -> bool:
        return self.members is not None

    def __len__(self) -> int:
        if not self.is_finite:
            raise TypeError("haar-mc ensemble has no fixed member count")
        return len(self.members)

    @classmethod
    def explicit(cls, members) -> "UnitaryEnsemble":
        members = tuple(np.asarray(m, dtype=complex) for m in members)
        if not members:
            raise ValueError("explicit ensemble needs at least one member")
        return cls("explicit", members[0].shape[0], members)

    @classmethod
    def haar_mc(cls, dim: int, samples: int, rng: RngStream) -> "UnitaryEnsemble":
        return cls("haar-mc", dim, None, samples, rng)


def _rotation(axis: str, angle: float) -> np.ndarray:
    sigma = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}[axis]
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * sigma


_GATES = {
    "X": _rotation("x", np.pi),
    "Y": _rotation("y", np.pi),
    "Z": _rotation("z", np.pi),
    "X/2": _rotation("x", np.pi / 2),
    "-X/2": _rotation("x", -np.pi / 2),
    "Y/2": _rotation("y", np.pi / 2),
    "-Y/2": _rotation("y", -np.pi / 2),
}

# Gate strings for the 24 Clifford elements, rightmost gate applied first:
# identity, the three pi rotations, six pi/2 rotations about the coordinate
# axes, six pi rotations about face diagonals, and eight +-2pi/3 rotations
# about body diagonals. The published gate table lists "-X/2 -Y/2" twice and
# omits "X/2 Y/2"; the final entry here restores the missing element so the
# set closes under multiplication.
_CLIFFORD_STRINGS = (
    "I",
    "X",
    "Y",
    "Z",
    "X/2",
    "-X/2",
    "Y/2",
    "-Y/2",
    "-X/2 Y/2 X/2",
    "-X/2 -Y/2 X/2",
    "X -Y/2",
    "X Y/2",
    "Y X/2",
    "Y -X/2",
    "X/2 Y/2 X/2",
    "-X/2 Y/2 -X/2",
    "Y/2 X/2",
    "Y/2 -X/2",
    "-Y/2 X/2",
    "-Y/2 -X/2",
    "-X/2 -Y/2",
    "X/2 -Y/2",
    "-X/2 Y/2",
    "X/2 Y/2",
)


def _gate_string_to_matrix(spec: str) -> np.ndarray:
    if spec == "I":
        return np.eye(2, dtype=complex)
    mats = [_GATES[tok] for tok in spec.split()]
    return reduce(np.matmul, mats)


@lru_cache(maxsize=1)
def clifford_group_1q() -> UnitaryEnsemble:
    """The 24-element single-qubit Clifford group.

    Elements are built as products of +-pi/2 and pi rotations; global phases
    are irrelevant everywhere in this library since unitaries only ever act
    by conjugation.
    """
    members = tuple(_gate_string_to_matrix(s) for s in _CLIFFORD_STRINGS)
    return UnitaryEnsemble("clifford-1q", 2, members)


@lru_cache(maxsize=1)
def pauli_group_1q() -> UnitaryEnsemble:
    """The set {I, X, Y, Z}; a 1-design but not a 2-design."""
    return UnitaryEnsemble("pauli-1q", 2, PAULI_1Q)


def weingarten_moment(
    m1: int, n1: int, k1: int, l1: int, m2: int, n2: int, k2: int, l2: int, dim: int
) -> float:
    """Exact Haar average of U[m1,n1] U*[k1,l1] U[m2,n2] U*[k2,l2].

    Closed form from the degree-(2,2) Weingarten calculus:

        ( d_id + d_sw - (d_mix1 + d_mix2)/D ) / (D^2 - 1)

    where the four delta products pair row indices (m with k) and column
    indices (n with l) in the direct and swapped orders.
    """
    if dim < 2:
        raise ValueError("moment formula requires dim >= 2 (divides by D^2 - 1)")
    for idx in (m1, n1, k1, l1, m2, n2, k2, l2):
        if idx < 0 or idx >= dim:
            raise ValueError(f"index {idx} out of range for dim {dim}")

    def d(a, b):
        return 1.0 if a == b else 0.0

    direct_rows = d(m1, k1) * d(m2, k2)
    swapped_rows = d(m1, k2) * d(m2, k1)
    direct_cols = d(n1, l1) * d(n2, l2)
    swapped_cols = d(n1, l2) * d(n2, l1)
    value = (
        direct_rows * direct_cols
        + swapped_rows * swapped_cols
        - (direct_rows * swapped_cols + swapped_rows * direct_cols) / dim
    )
    return value / (dim**2 - 1)


@dataclass(frozen=True)
class Design2Report:
    """Outcome of a 2-design check: worst deviation over tested monomials."""

    max_deviation: float
    tolerance: float
    passed: bool
    monomials_checked: int
    exhaustive: bool


def verify_2design(
    ensemble: UnitaryEnsemble, trials: int = 200, tol: float = 1e-12, rng=None
) -> Design2Report:
    """Compare ensemble averages of degree-(2,2) monomials with Haar values.

    For every tested index tuple the ensemble mean of
    U[m1,n1] U*[k1,l1] U[m2,n2] U*[k2,l2] is compared against
    :func:`weingarten_moment`. Small dimensions are checked exhaustively
    (all ``dim**8`` tuples); larger ones fall back to ``trials`` random
    tuples drawn from ``rng``.
    """
    if not ensemble.is_finite:
        raise ValueError("2-design verification needs a finite ensemble")
    d = ensemble.dim
    stack = np.stack(ensemble.members)

    # avg[m1,n1,k1,l1,m2,n2,k2,l2] over the ensemble
    if d**8 <= 65536:
        avg = np.einsum(
            "sab,scd,sef,sgh->abcdefgh", stack, stack.conj(), stack, stack.conj()
        ) / len(ensemble)
        want = np.empty((d,) * 8)
        for idx in np.ndindex(*(d,) * 8):
            want[idx] = weingarten_moment(*idx, dim=d)
        max_dev = float(np.max(np.abs(avg - want)))
        checked = d**8
        exhaustive = True
    else:
        gen = _as_generator(rng) if rng is not None else np.random.default_rng(0)
        max_dev = 0.0
        for _ in range(trials):
            m1, n1, k1, l1, m2, n2, k2, l2 = gen.integers(0, d, size=8)
            got = np.mean(
                stack[:, m1, n1]
                * stack[:, k1, l1].conj()
                * stack[:, m2, n2]
                * stack[:, k2, l2].conj()
            )
            want_v = weingarten_moment(m1, n1, k1, l1, m2, n2, k2, l2, dim=d)
            max_dev = max(max_dev, abs(got - want_v))
        checked = trials
        exhaustive = False

    return Design2Report(max_dev, tol, max_dev < tol, checked, exhaustive)


@lru_cache(maxsize=1)
def scrambler_3q() -> np.ndarray:
    """The 8x8 unitary that approximately scrambles one working qubit.

    Acting on (working qubit) x (two bath qubits), it permutes the bath
    basis while applying I, X, -iY, -Z on the working qubit:

        I x |01><00| + X x |00><01| - iY x |11><10| - Z x |10><11|.

    With both bath qubits prepared in |+>, conjugating any single-qubit
    channel by this unitary and tracing out the bath realizes the
    Pauli-group average of the channel (normalized by the group size so the
    induced map is trace preserving).
    """
    basis = np.eye(4, dtype=complex)

    def bath_op(out, in_):
        return np.outer(basis[out], basis[in_])

    u = (
        kron(np.eye(2), bath_op(0b01, 0b00))
        + kron(SIGMA_X, bath_op(0b00, 0b01))
        + kron(-1j * SIGMA_Y, bath_op(0b11, 0b10))
        + kron(-SIGMA_Z, bath_op(0b10, 0b11))
    )
    _check_unitary(u, tol=1e-12)
    u.setflags(write=False)
    return u
