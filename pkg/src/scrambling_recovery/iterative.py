"""Recursion engines and fixed-point analysis for iterated recovery.

Five scalar recursions are provided, each mapping the recovery rate of one
round to the next:

* ``plain``: re-scramble the target with a fresh bath each round;
  1 - p^(n) = s (1 - p^(n-1)) with shrink factor
  s = (1 - 1/D_t^2)/(1 - 1/D_tb^2). The first scramble leaves the rate
  unchanged (a single twirl preserves the recovery rate), so the closed
  form is p^(n) = 1 - (1 - p) s^(n-1) for n >= 1.
* ``plain-noisy``: the same with a depolarizing error of keep rate x folded
  into every round: p^(n) = x [1 - s (1 - p^(n-1))]. Writing
  sigma = 1 - s, this is p^(n) = (1 - sigma) x p^(n-1) + sigma x with fixed
  point sigma x / (1 - (1 - sigma) x).
* ``ico``: switch-controlled rounds in the large-bath limit,
  p^(n) = 2 p^(n-1)/(1 + p^(n-1)), closed form 2^n p/((2^n - 1) p + 1).
* ``eico``: the finite-bath switch rounds, whose map has an attractive
  fixed point at 1 and an unstable one at -1/(D_tb^2 - 1).
* ``eico-noisy``: the D_tb = 2 case with depolarizing noise of keep rate x
  on the control qubit, p^(n) = 4x (2 p^(n-1) + 1) / (3 [2 + x (1 + p^(n-1))]),
  with fixed points 5/6 - 1/x +- sqrt(73 x^2 - 60 x + 36)/(6 x). Note the
  quadratic 73 x^2 - 60 x + 36 has negative discriminant and is strictly
  positive for every real x, so the advertised disappearance of the fixed
  points never triggers; the discriminant is computed and reported instead
  of being special-cased.

Trace convention: entry 0 is the starting rate p0 (the rate of the bare
perturbation). For the two ``plain`` variants entry 1 repeats p0 (the first
twirl does not shrink the depolarized weight; shrinkage starts when the
already-twirled channel is re-scrambled with a fresh bath) and the
recursion drives entries 2..n. The switch variants improve from the first
round, so their recursion drives entries 1..n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, depolarizing_channel, recovery_rate
from .linalg import (
    DensityMatrix,
    as_complex_matrix,
    hs_norm,
    kron,
    partial_trace_matrix,
)
from .schemes import ico_output_for_unitary
from .twirl import TwirlBackend, ico_coherent_block, twirl_matrix
from .ensembles import clifford_group_1q, haar_batch

__all__ = [
    "VARIANTS",
    "RecursionSpec",
    "FixedPoint",
    "RecursionTrace",
    "iterate",
    "ConvergenceCoefficients",
    "convergence_coefficients",
    "eico_success_probability",
    "noisy_fixed_point",
    "eico_noisy_fixed_points",
    "simulate_iteration_matrix",
]

VARIANTS = ("plain", "plain-noisy", "ico", "eico", "eico-noisy")

#: Max Hilbert-Schmidt residual orthogonal to span{rho_in, I/D} accepted
#: when reading a rate off a simulated state with an exact backend.
EXTRACTION_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class RecursionSpec:
    variant: str
    p0: float
    d_t: int
    d_tb: int
    steps: int
    noise_keep: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError(f"p0 must lie in [0, 1], got {self.p0}")
        if not 0.0 <= self.noise_keep <= 1.0:
            raise ValueError(f"noise keep rate must lie in [0, 1], got {self.noise_keep}")
        if self.d_t < 2 or self.d_t > self.d_tb:
            raise ValueError("need 2 <= d_t <= d_tb")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.variant == "eico-noisy" and self.d_tb != 2:
            raise ValueError(
                "the noisy switch recursion is only solved for a composite of "
                "dimension 2; larger composites have no closed fixed point"
            )

    @property
    def shrink_factor(self) -> float:
        """s = (1 - 1/D_t^2)/(1 - 1/D_tb^2); multiplies 1 - p each plain round."""
        return (1 - 1 / self.d_t**2) / (1 - 1 / self.d_tb**2)

    @property
    def noisy_mixing(self) -> float:
        """sigma = 1 - s = (D_tb^2/D_t^2 - 1)/(D_tb^2 - 1), the weight of the
        fresh-rate term in the noisy recursion."""
        return 1 - self.shrink_factor


@dataclass(frozen=True)
class FixedPoint:
    value: float
    derivative: float
    #: True = attractive, False = repelling, None = neutral (|f'| = 1).
    stable: bool | None


@dataclass(frozen=True)
class RecursionTrace:
    variant: str
    rates: tuple[float, ...]
    fixed_points: tuple[FixedPoint, ...]
    success_probabilities: tuple[float, ...] | None = None
    discriminant: float | None = None
    extraction_residuals: tuple[float, ...] | None = None


def _eico_map_coefficients(d_tb: int) -> tuple[float, float]:
    c = (d_tb**2 - 2) / (d_tb**2 * (d_tb**2 - 1))
    two_over_d2 = 2 / d_tb**2
    return c, two_over_d2


def _step_map(spec: RecursionSpec):
    s = spec.shrink_factor
    x = spec.noise_keep
    if spec.variant == "plain":
        return lambda q: 1 - s * (1 - q)
    if spec.variant == "plain-noisy":
        return lambda q: x * (1 - s * (1 - q))
    if spec.variant == "ico":
        return lambda q: 2 * q / (1 + q)
    if spec.variant == "eico":
        c, t = _eico_map_coefficients(spec.d_tb)
        return lambda q: (2 * q + c * (1 - q)) / (1 + q + t * (1 - q))
    # eico-noisy, d_tb == 2
    return lambda q: 4 * x * (2 * q + 1) / (3 * (2 + x * (1 + q)))


def _step_derivative(spec: RecursionSpec):
    s = spec.shrink_factor
    x = spec.noise_keep
    if spec.variant == "plain":
        return lambda q: s
    if spec.variant == "plain-noisy":
        return lambda q: x * s
    if spec.variant == "ico":
        return lambda q: 2 / (1 + q) ** 2
    if spec.variant == "eico":
        c, t = _eico_map_coefficients(spec.d_tb)

        def deriv(q):
            n = 2 * q + c * (1 - q)
            m = 1 + q + t * (1 - q)
            return ((2 - c) * m - n * (1 - t)) / m**2

        return deriv
    return lambda q: 4 * x * (4 + x) / (3 * (2 + x * (1 + q)) ** 2)


def _closed_form(spec: RecursionSpec, n: int) -> float | None:
    p, s, x = spec.p0, spec.shrink_factor, spec.noise_keep
    if spec.variant == "plain":
        return p if n == 0 else 1 - (1 - p) * s ** (n - 1)
    if spec.variant == "plain-noisy":
        if n == 0:
            return p
        fp = noisy_fixed_point(spec.noisy_mixing, x)
        return fp - (s * x) ** (n - 1) * (fp - p)
    if spec.variant == "ico":
        return 2**n * p / ((2**n - 1) * p + 1)
    return None


def noisy_fixed_point(mixing: float, x: float) -> float:
    """sigma x / (1 - (1 - sigma) x), the limit of the noisy plain recursion."""
    return mixing * x / (1 - (1 - mixing) * x)


def eico_noisy_fixed_points(x: float) -> tuple[float, float, float]:
    """Both roots of the noisy switch fixed-point quadratic at D_tb = 2,
    5/6 - 1/x +- sqrt(73 x^2 - 60 x + 36)/(6 x), plus the radicand.

    The radicand is strictly positive for all real x (its own discriminant
    is negative), so both roots always exist.
    """
    if not 0.0 < x <= 1.0:
        raise ValueError("keep rate x must lie in (0, 1]")
    radicand = 73 * x**2 - 60 * x + 36
    root = np.sqrt(radicand)
    plus = 5 / 6 - 1 / x + root / (6 * x)
    minus = 5 / 6 - 1 / x - root / (6 * x)
    return float(plus), float(minus), float(radicand)


def eico_success_probability(p_prev: float, d_tb: int) -> float:
    """(1 + p)/2 + (1 - p)/D^2: chance of the + outcome on the control qubit
    in one switch round entered with rate ``p_prev``."""
    if not 0.0 <= p_prev <= 1.0:
        raise ValueError("p_prev must lie in [0, 1]")
    if d_tb < 2:
        raise ValueError("d_tb must be >= 2")
    return (1 + p_prev) / 2 + (1 - p_prev) / d_tb**2


def _fixed_points(spec: RecursionSpec) -> tuple[FixedPoint, ...]:
    deriv = _step_derivative(spec)

    def classify(value: float) -> FixedPoint:
        d = float(deriv(value))
        stable: bool | None
        if abs(abs(d) - 1.0) < 1e-12:
            stable = None
        else:
            stable = abs(d) < 1.0
        return FixedPoint(float(value), d, stable)

    if spec.variant == "plain":
        if spec.d_t == spec.d_tb:
            # s = 1: every rate is fixed; report the starting point as neutral.
            return (FixedPoint(spec.p0, 1.0, None),)
        return (classify(1.0),)
    if spec.variant == "plain-noisy":
        x = spec.noise_keep
        if x == 0.0:
            return (classify(0.0),)
        if spec.d_t == spec.d_tb and x == 1.0:
            return (FixedPoint(spec.p0, 1.0, None),)
        return (classify(noisy_fixed_point(spec.noisy_mixing, x)),)
    if spec.variant == "ico":
        return (classify(1.0), classify(0.0))
    if spec.variant == "eico":
        return (classify(1.0), classify(-1 / (spec.d_tb**2 - 1)))
    # eico-noisy
    if spec.noise_keep == 0.0:
        return (classify(0.0),)
    plus, minus, _ = eico_noisy_fixed_points(spec.noise_keep)
    return (classify(plus), classify(minus))


def iterate(spec: RecursionSpec) -> RecursionTrace:
    """Run the recursion for ``spec.steps`` rounds.

    Where a closed form exists the step-by-step sequence is cross-validated
    against it to 1e-12; a mismatch raises, since it would mean the two
    encodings of the same recursion have drifted apart.
    """
    step = _step_map(spec)
    rates = [spec.p0]
    for n in range(1, spec.steps + 1):
        if spec.variant in ("plain", "plain-noisy") and n == 1:
            rates.append(rates[-1])
        else:
            rates.append(float(step(rates[-1])))

    for n, got in enumerate(rates):
        want = _closed_form(spec, n)
        if want is not None and abs(got - want) > 1e-12:
            raise RuntimeError(
                f"recursion/closed-form mismatch for {spec.variant} at step {n}: "
                f"{got} vs {want}"
            )

    success = None
    if spec.variant in ("eico", "eico-noisy"):
        vals = []
        for prev in rates[:-1]:
            base = eico_success_probability(prev, spec.d_tb)
            if spec.variant == "eico-noisy":
                base = spec.noise_keep * base + (1 - spec.noise_keep) / 2
            vals.append(base)
        success = tuple(vals)

    discriminant = None
    if spec.variant == "eico-noisy":
        discriminant = float(73 * spec.noise_keep**2 - 60 * spec.noise_keep + 36)

    return RecursionTrace(
        variant=spec.variant,
        rates=tuple(rates),
        fixed_points=_fixed_points(spec),
        success_probabilities=success,
        discriminant=discriminant,
    )


@dataclass(frozen=True)
class ConvergenceCoefficients:
    """Linearization slopes of the two iterations near the perfect-recovery
    point p = 1; smaller is faster."""

    eico: float
    plain: float


def convergence_coefficients(d_t: int, d_tb: int) -> ConvergenceCoefficients:
    if d_t < 2 or d_t > d_tb:
        raise ValueError("need 2 <= d_t <= d_tb")
    eico = 0.5 * (1 + 1 / (d_tb**2 - 1))
    plain = (1 - 1 / d_t**2) / (1 - 1 / d_tb**2)
    return ConvergenceCoefficients(eico, plain)


# ---------------------------------------------------------------------------
# Direct density-matrix simulation of the iterations

def _extract_rate(out: np.ndarray, rho_in: np.ndarray) -> tuple[float, float]:
    """Read a depolarizing weight off a state: solve out ~ a rho + b I/D in
    the Hilbert-Schmidt sense and return (a, orthogonal residual)."""
    d = rho_in.shape[0]
    eye = np.eye(d) / d
    g = np.array(
        [
            [np.vdot(rho_in, rho_in).real, np.vdot(rho_in, eye).real],
            [np.vdot(eye, rho_in).real, np.vdot(eye, eye).real],
        ]
    )
    rhs = np.array([np.vdot(rho_in, out).real, np.vdot(eye, out).real])
    a, b = np.linalg.solve(g, rhs)
    residual = hs_norm(out - a * rho_in - b * eye)
    return float(a), float(residual)


def _twirl_average(ch: KrausChannel, mat: np.ndarray, backend: TwirlBackend) -> np.ndarray:
    return twirl_matrix(ch, mat, backend)


def _ico_round(
    ch: KrausChannel, rho_tb: np.ndarray, backend: TwirlBackend
) -> tuple[np.ndarray, float]:
    """One switch round: twirl with control |+>, post-select +. Returns the
    normalized composite state and the success probability."""
    d = ch.dim
    if backend.kind == "analytic":
        p = recovery_rate(ch)
        diag = p * rho_tb + (1 - p) * np.trace(rho_tb) * np.eye(d) / d
        block = diag / 2 + ico_coherent_block(ch, rho_tb) / 2
    else:
        if backend.kind == "clifford-exact":
            if d != 2:
                raise ValueError("clifford-exact rounds need a dimension-2 composite")
            us = clifford_group_1q().members
            full = sum(ico_output_for_unitary(ch, rho_tb, u) for u in us) / len(us)
        else:
            gen = backend.rng.generator()
            samples = haar_batch(d, backend.samples, gen)
            full = sum(ico_output_for_unitary(ch, rho_tb, u) for u in samples)
            full /= backend.samples
        bra = np.kron(np.array([1.0, 1.0]) / np.sqrt(2), np.eye(d))
        block = bra @ full @ bra.conj().T
    p_plus = float(np.trace(block).real)
    return block / p_plus, p_plus


def simulate_iteration_matrix(
    spec: RecursionSpec,
    ch: KrausChannel,
    backend: TwirlBackend,
    rho_t: DensityMatrix | None = None,
) -> RecursionTrace:
    """Direct density-matrix simulation of the iterated schemes.

    ``plain``/``plain-noisy``: each round twirls the channel reconstructed
    from the previous round's extracted rate together with a fresh
    maximally mixed bath; ``ch`` is the round-1 perturbation on the full
    composite. ``eico``: each round is a switch round at composite dimension
    D_tb, entered with the reconstructed depolarizing channel; ``ch`` is the
    pre-twirled round-0 channel. The rate is read off each round's output by
    projecting onto span{rho_in, I/D}; with exact backends the orthogonal
    residual must stay below 1e-8, otherwise the depolarizing form has been
    violated (which indicates a convention error) and the run fails.

    The noisy switch variant is deliberately not simulated: its published
    scalar recursion is not consistent with the direct circuit at x < 1,
    so only :func:`iterate` exposes it.
    """
    if spec.d_tb > 8:
        raise ValueError("matrix simulation is desk-scale only: d_tb <= 8")
    if spec.variant == "eico-noisy":
        raise ValueError("the noisy switch variant is a scalar recursion only")
    if spec.variant == "ico":
        raise ValueError(
            "the large-bath switch recursion has no finite-matrix realization; "
            "use variant 'eico' for the finite-composite simulation"
        )
    exact = backend.kind in ("analytic", "clifford-exact")
    x = spec.noise_keep

    if spec.variant in ("plain", "plain-noisy"):
        if ch.dim != spec.d_tb:
            raise ValueError(f"round-1 channel dim {ch.dim} != d_tb {spec.d_tb}")
        bath_dim = spec.d_tb // spec.d_t
        if spec.d_t * bath_dim != spec.d_tb:
            raise ValueError("d_t must divide d_tb")
        rho_t = rho_t if rho_t is not None else DensityMatrix.basis_state(spec.d_t)
        rho_t_mat = rho_t.matrix
        bath = np.eye(bath_dim) / bath_dim

        noise = depolarizing_channel(spec.d_tb, x)
        rates = []
        residuals = []
        step_channel = ch.compose(noise) if x < 1.0 else ch
        rates.append(recovery_rate(step_channel))
        for _ in range(spec.steps):
            rho_in = kron(rho_t_mat, bath) if bath_dim > 1 else rho_t_mat
            out_tb = _twirl_average(step_channel, rho_in, backend)
            out_t = (
                partial_trace_matrix(out_tb, (spec.d_t, bath_dim), (0,))
                if bath_dim > 1
                else out_tb
            )
            rate, residual = _extract_rate(out_t, rho_t_mat)
            if exact and residual > EXTRACTION_RESIDUAL_TOL:
                raise RuntimeError(
                    f"non-depolarizing residual {residual:.3e} beyond tolerance"
                )
            rates.append(rate)
            residuals.append(residual)
            rebuilt = depolarizing_channel(spec.d_t, min(max(rate, 0.0), 1.0))
            if bath_dim > 1:
                extended = tuple(kron(m, np.eye(bath_dim)) for m in rebuilt.kraus)
                rebuilt = KrausChannel(spec.d_tb, extended)
            step_channel = rebuilt.compose(noise) if x < 1.0 else rebuilt
        return RecursionTrace(
            variant=spec.variant,
            rates=tuple(rates),
            fixed_points=_fixed_points(spec),
            extraction_residuals=tuple(residuals),
        )

    # eico: repeated switch rounds on the full composite
    d = spec.d_tb
    if ch.dim != d:
        raise ValueError(f"channel dim {ch.dim} != d_tb {d}")
    rho_t = rho_t if rho_t is not None else DensityMatrix.basis_state(d)
    rho_in = rho_t.matrix
    rates = [recovery_rate(ch)]
    residuals = []
    success = []
    current = min(max(rates[0], 0.0), 1.0)
    for _ in range(spec.steps):
        channel = depolarizing_channel(d, current)
        out, p_plus = _ico_round(channel, rho_in, backend)
        rate, residual = _extract_rate(out, rho_in)
        if exact and residual > EXTRACTION_RESIDUAL_TOL:
            raise RuntimeError(
                f"non-depolarizing residual {residual:.3e} beyond tolerance"
            )
        rates.append(rate)
        residuals.append(residual)
        success.append(p_plus)
        current = min(max(rate, 0.0), 1.0)
    return RecursionTrace(
        variant=spec.variant,
        rates=tuple(rates),
        fixed_points=_fixed_points(spec),
        success_probabilities=tuple(success),
        extraction_residuals=tuple(residuals),
    )
