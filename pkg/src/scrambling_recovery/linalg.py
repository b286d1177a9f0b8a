"""Dense complex matrix primitives and quantum-state bookkeeping.

All matrices are numpy ``complex128`` arrays in row-major order. States are
wrapped in :class:`DensityMatrix`, which validates Hermiticity, unit trace
and positivity once at construction, so everything downstream can assume a
well-formed state. Composite systems are described by a
:class:`SystemLayout`; tensor factors are always addressed by label, never
by position, to keep qubit-ordering mistakes out of the calling code.

Values are immutable after construction (arrays are marked read-only) and
safe to share between workers.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from string import ascii_letters

import numpy as np

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "EIGENVALUE_FLOOR",
    "PURITY_TOL",
    "as_complex_matrix",
    "kron",
    "kron_all",
    "hs_inner",
    "hs_norm",
    "SystemLayout",
    "DensityMatrix",
    "partial_trace",
    "partial_trace_matrix",
    "fidelity_with_pure",
]

#: Entrywise tolerance on max |A - A^dag| for Hermiticity checks.
HERMITICITY_TOL = 1e-10
#: Tolerance on |Tr(rho) - 1|.
TRACE_TOL = 1e-10
#: Eigenvalue floor for positive-semidefiniteness checks; chosen for
#: double-precision accumulation over composites of dimension <= ~64.
EIGENVALUE_FLOOR = -1e-9
#: Tolerance on |Tr(rho^2) - 1| where a pure state is required.
PURITY_TOL = 1e-9


def as_complex_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array.

    :raises ValueError: if the input is not 2-D or contains NaN/Inf.
    """
    mat = np.asarray(a, dtype=np.complex128)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
        raise ValueError("matrix entries must be finite")
    return mat


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices; dimensions multiply."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def kron_all(*mats) -> np.ndarray:
    """Left-to-right Kronecker product of any number of matrices."""
    if not mats:
        raise ValueError("kron_all needs at least one factor")
    out = as_complex_matrix(mats[0])
    for m in mats[1:]:
        out = np.kron(out, as_complex_matrix(m))
    return out


def _require_square_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise ValueError("operands must be square matrices")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dag b).

    Both operands must be square and of equal dimension.
    """
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    _require_square_same_dim(a, b)
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    """Hilbert-Schmidt norm sqrt(Tr(a^dag a)); real and non-negative."""
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("operand must be a square matrix")
    return float(np.sqrt(np.vdot(a, a).real))


@dataclass(frozen=True)
class SystemLayout:
    """Ordered subsystem labels with dimensions for a composite system.

    The order of ``subsystems`` fixes the tensor-factor order of every
    matrix built against this layout. Labels must be unique.
    """

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(name), int(dim)) for name, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [name for name, _ in subs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        if any(dim < 1 for _, dim in subs):
            raise ValueError("subsystem dimensions must be >= 1")

    @classmethod
    def of(cls, **subsystems: int) -> "SystemLayout":
        """Build a layout from keyword order, e.g. ``of(control=2, target=2)``."""
        return cls(tuple(subsystems.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        """Dimension of the composite (product of subsystem dimensions)."""
        out = 1
        for _, d in self.subsystems:
            out *= d
        return out

    def index(self, label: str) -> int:
        for i, (name, _) in enumerate(self.subsystems):
            if name == label:
                return i
        raise KeyError(f"unknown subsystem label {label!r}; have {self.labels}")

    def dim_of(self, label: str) -> int:
        return self.subsystems[self.index(label)][1]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit-trace, positive semidefinite.

    Validation happens once in ``__post_init__``; the wrapped array is
    marked read-only. The PSD check runs a Hermitian eigensolver on the
    symmetrized matrix (A + A^dag)/2, which is robust against the tiny
    anti-Hermitian dust left by floating-point arithmetic.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got {mat.shape}")
        herm_defect = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
        if herm_defect > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max |A - A^dag| = {herm_defect:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {tr}")
        sym = (mat + mat.conj().T) / 2
        eigmin = float(np.linalg.eigvalsh(sym)[0])
        if eigmin < EIGENVALUE_FLOOR:
            raise ValueError(f"not positive semidefinite: min eigenvalue {eigmin:.3e}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, amplitudes) -> "DensityMatrix":
        """|psi><psi| from a (not necessarily normalized) state vector."""
        vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot build a state from the zero vector")
        vec = vec / norm
        return cls(np.outer(vec, vec.conj()))

    @classmethod
    def basis_state(cls, dim: int, index: int = 0) -> "DensityMatrix":
        """Computational basis state |index><index| in the given dimension."""
        vec = np.zeros(dim, dtype=np.complex128)
        vec[index] = 1.0
        return cls.pure(vec)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return abs(self.purity() - 1.0) <= tol


def partial_trace_matrix(
    mat: np.ndarray, dims: Iterable[int], keep_axes: Iterable[int]
) -> np.ndarray:
    """Partial trace of a raw (possibly unnormalized) matrix.

    ``dims`` are the tensor-factor dimensions in order; ``keep_axes`` are
    the factor positions to retain, returned in their original order.
    """
    mat = as_complex_matrix(mat)
    dims = tuple(int(d) for d in dims)
    keep_axes = tuple(sorted(int(k) for k in keep_axes))
    n = len(dims)
    total = int(np.prod(dims))
    if mat.shape != (total, total):
        raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
    if not keep_axes:
        raise ValueError("must keep at least one subsystem")
    if any(k < 0 or k >= n for k in keep_axes):
        raise ValueError(f"keep axes {keep_axes} out of range for {n} subsystems")
    if 2 * n > len(ascii_letters):
        raise ValueError("too many tensor factors")

    row = list(ascii_letters[:n])
    col = list(ascii_letters[n : 2 * n])
    keep = set(keep_axes)
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = [row[i] for i in keep_axes] + [col[i] for i in keep_axes]
    spec = "".join(row) + "".join(col) + "->" + "".join(out)
    tensor = mat.reshape(dims + dims)
    kept = int(np.prod([dims[i] for i in keep_axes]))
    return np.einsum(spec, tensor).reshape(kept, kept)


def partial_trace(
    rho: DensityMatrix, layout: SystemLayout, keep: str | Iterable[str]
) -> DensityMatrix:
    """Reduced state over the kept subsystems, in layout order.

    ``keep`` is a label or set of labels from ``layout``; the trace is
    preserved exactly up to floating-point rounding.
    """
    labels = (keep,) if isinstance(keep, str) else tuple(keep)
    if not labels:
        raise ValueError("must keep at least one subsystem")
    if rho.dim != layout.dim:
        raise ValueError(
            f"state dimension {rho.dim} does not match layout dimension {layout.dim}"
        )
    keep_axes = sorted(layout.index(lab) for lab in labels)
    reduced = partial_trace_matrix(rho.matrix, layout.dims, keep_axes)
    return DensityMatrix(reduced)


def fidelity_with_pure(rho: DensityMatrix, target: DensityMatrix) -> float:
    """Overlap Tr(rho * target) with a pure reference state.

    For a pure ``target`` this is the standard fidelity and lies in [0, 1].

    :raises ValueError: if ``target`` is not pure within :data:`PURITY_TOL`.
    """
    if rho.dim != target.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {target.dim}")
    if not target.is_pure():
        raise ValueError(
            f"target must be pure: Tr(target^2) = {target.purity():.12f}"
        )
    return float(np.trace(rho.matrix @ target.matrix).real)
