"""The twirled channel: average of U . Lambda . U^dag over random unitaries.

Three interchangeable backends compute the same map:

* ``analytic`` evaluates the closed form p rho + (1 - p) I/D directly,
  with p the channel's recovery rate;
* ``clifford-exact`` averages over the 24 single-qubit Clifford elements,
  which reproduces the Haar average exactly (2-design) but is only defined
  when the scrambled composite is a single qubit;
* ``haar-mc`` is a plain Monte-Carlo mean over sampled unitaries, kept
  deliberately free of variance-reduction tricks so its 1/sqrt(N)
  convergence doubles as a correctness check.

The integrand is U Lambda(U^dag rho U) U^dag, i.e. Kraus operators are
conjugated as U M U^dag. The reversed composition is a different map and is
intentionally not provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, recovery_rate
from .ensembles import RngStream, clifford_group_1q, haar_batch
from .linalg import DensityMatrix, as_complex_matrix, hs_norm

__all__ = [
    "TwirlBackend",
    "TwirlResult",
    "twirl_output",
    "twirl_matrix",
    "clifford_exact_equals_analytic",
    "ico_coherent_block",
    "AsymptoticResidual",
    "asymptotic_residual",
]


@dataclass(frozen=True)
class TwirlBackend:
    """Which average realizes the twirl; see module docstring."""

    kind: str
    samples: int | None = None
    rng: RngStream | None = None

    def __post_init__(self):
        if self.kind not in ("analytic", "clifford-exact", "haar-mc"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "haar-mc" and (
            self.samples is None or self.samples < 1 or self.rng is None
        ):
            raise ValueError("haar-mc backend needs samples >= 1 and an RngStream")

    @classmethod
    def analytic(cls) -> "TwirlBackend":
        return cls("analytic")

    @classmethod
    def clifford_exact(cls) -> "TwirlBackend":
        return cls("clifford-exact")

    @classmethod
    def haar_mc(cls, samples: int, rng: RngStream) -> "TwirlBackend":
        return cls("haar-mc", samples, rng)

    def label(self) -> str:
        if self.kind == "haar-mc":
            return f"haar:{self.samples}"
        return {"analytic": "analytic", "clifford-exact": "clifford"}[self.kind]


@dataclass(frozen=True)
class TwirlResult:
    output: DensityMatrix
    recovery_rate: float
    backend: TwirlBackend
    samples_used: int


def _conjugated_apply(ch: KrausChannel, u: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """sum_k (U M_k U^dag) mat (U M_k U^dag)^dag."""
    udag = u.conj().T
    out = np.zeros_like(mat)
    for m in ch.kraus:
        a = u @ m @ udag
        out += a @ mat @ a.conj().T
    return out


def _haar_mc_apply(
    ch: KrausChannel, mat: np.ndarray, samples: int, rng: RngStream
) -> np.ndarray:
    d = ch.dim
    gen = rng.generator()
    acc = np.zeros((d, d), dtype=complex)
    remaining = samples
    batch = 20_000
    while remaining > 0:
        n = min(batch, remaining)
        us = haar_batch(d, n, gen)
        for m in ch.kraus:
            a = np.einsum("bij,jk,blk->bil", us, m, us.conj())
            acc += np.einsum("bij,jk,blk->il", a, mat, a.conj())
        remaining -= n
    return acc / samples


def twirl_matrix(ch: KrausChannel, mat: np.ndarray, backend: TwirlBackend) -> np.ndarray:
    """Twirl applied to a raw matrix (used internally and by callers that
    work with unnormalized blocks)."""
    mat = as_complex_matrix(mat)
    if mat.shape != (ch.dim, ch.dim):
        raise ValueError(f"state dim {mat.shape} != channel dim {ch.dim}")
    if backend.kind == "analytic":
        p = recovery_rate(ch)
        return p * mat + (1 - p) * np.trace(mat) * np.eye(ch.dim) / ch.dim
    if backend.kind == "clifford-exact":
        if ch.dim != 2:
            raise ValueError(
                "clifford-exact twirl is only defined for a scrambled composite "
                f"of dimension 2, got {ch.dim}"
            )
        members = clifford_group_1q().members
        return sum(_conjugated_apply(ch, g, mat) for g in members) / len(members)
    return _haar_mc_apply(ch, mat, backend.samples, backend.rng)


def twirl_output(
    ch: KrausChannel, rho_in: DensityMatrix, backend: TwirlBackend
) -> TwirlResult:
    """Output state of the twirled channel together with its recovery rate.

    Every backend's output is a valid state; the reported rate is the exact
    scalar computed from the Kraus traces (it is a property of the channel,
    not of the averaging method).
    """
    out = twirl_matrix(ch, rho_in.matrix, backend)
    samples = backend.samples or 0
    if backend.kind == "clifford-exact":
        samples = 24
    return TwirlResult(DensityMatrix(out), recovery_rate(ch), backend, samples)


def clifford_exact_equals_analytic(ch: KrausChannel) -> float:
    """Max entrywise deviation between the 24-element group average and the
    closed-form twirl, probed on a spanning set of qubit input states.

    Both maps are linear, so agreement on four spanning states implies
    agreement on every input. For any CPTP qubit channel this deviation is
    at floating-point level.
    """
    if ch.dim != 2:
        raise ValueError("only defined for qubit channels")
    probes = [
        DensityMatrix.pure([1, 0]),
        DensityMatrix.pure([0, 1]),
        DensityMatrix.pure([1, 1]),
        DensityMatrix.pure([1, 1j]),
    ]
    analytic = TwirlBackend.analytic()
    clifford = TwirlBackend.clifford_exact()
    dev = 0.0
    for rho in probes:
        a = twirl_matrix(ch, rho.matrix, analytic)
        c = twirl_matrix(ch, rho.matrix, clifford)
        dev = max(dev, float(np.max(np.abs(a - c))))
    return dev


def ico_coherent_block(ch: KrausChannel, rho: np.ndarray) -> np.ndarray:
    """The cross block produced when forward and backward twirls interfere.

    For a channel with Kraus set {M_k} on a D-dimensional composite this is

        (p + 1/(D^2-1)) rho + (1/(D^2-1)) sum_k M_k^dag rho M_k
        - (1/(D (D^2-1))) sum_k [Tr(M_k^dag) rho M_k + Tr(M_k) M_k^dag rho],

    the exact Haar average of sum_k (U M_k U^dag) rho (U^dag M_k^dag U).
    Its trace is the coherent-control expectation; as D grows it tends to
    p * rho.
    """
    rho = as_complex_matrix(rho)
    d = ch.dim
    if d < 2:
        raise ValueError("requires dim >= 2")
    p = recovery_rate(ch)
    c = d**2 - 1
    out = (p + 1 / c) * rho
    for m in ch.kraus:
        out += (m.conj().T @ rho @ m) / c
        tr = np.trace(m)
        out -= (tr.conjugate() * (rho @ m) + tr * (m.conj().T @ rho)) / (d * c)
    return out


@dataclass(frozen=True)
class AsymptoticResidual:
    """Distance of the coherent block from p*rho, with its a-priori bound."""

    residual: float
    bound: float
    bound_terms: tuple[float, float, float]


def asymptotic_residual(ch: KrausChannel, rho: DensityMatrix) -> AsymptoticResidual:
    """How far the coherent block sits from its large-D limit p * rho.

    The bound adds three terms controlling the correction pieces:
    1/sqrt(D^2-1) for the bare rho term, 1/sqrt(D^2-1) for the
    channel-conjugated term, and 4/(D^2-1)^2 for the trace-weighted cross
    terms. The input state must be pure (the bound derivation uses
    Tr(rho^2) <= 1 with equality machinery for pure states).
    """
    if not rho.is_pure():
        raise ValueError("residual bound is stated for pure input states")
    d = ch.dim
    p = recovery_rate(ch)
    block = ico_coherent_block(ch, rho.matrix)
    residual = hs_norm(block - p * rho.matrix)
    c = d**2 - 1
    terms = (1 / np.sqrt(c), 1 / np.sqrt(c), 4 / c**2)
    return AsymptoticResidual(residual, float(sum(terms)), terms)
