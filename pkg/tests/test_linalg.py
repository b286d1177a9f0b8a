import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrambling_recovery.linalg import (
    DensityMatrix,
    SystemLayout,
    fidelity_with_pure,
    hs_inner,
    hs_norm,
    kron,
    kron_all,
    partial_trace,
    partial_trace_matrix,
)

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def partial_trace_by_summation(mat, dims, keep_axes):
    """Independent oracle: partial trace via explicit index summation."""
    n = len(dims)
    keep_axes = sorted(keep_axes)
    traced = [i for i in range(n) if i not in keep_axes]
    kept_dim = int(np.prod([dims[i] for i in keep_axes]))
    out = np.zeros((kept_dim, kept_dim), dtype=complex)

    def flat(idx):
        f = 0
        for i in range(n):
            f = f * dims[i] + idx[i]
        return f

    kept_ranges = [range(dims[i]) for i in keep_axes]
    traced_ranges = [range(dims[i]) for i in traced]
    import itertools

    for krow_pos, krow in enumerate(itertools.product(*kept_ranges)):
        for kcol_pos, kcol in enumerate(itertools.product(*kept_ranges)):
            acc = 0.0 + 0.0j
            for tvals in itertools.product(*traced_ranges):
                row = [0] * n
                col = [0] * n
                for a, v in zip(keep_axes, krow):
                    row[a] = v
                for a, v in zip(keep_axes, kcol):
                    col[a] = v
                for a, v in zip(traced, tvals):
                    row[a] = v
                    col[a] = v
                acc += mat[flat(row), flat(col)]
            out[krow_pos, kcol_pos] = acc
    return out


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


class TestKron:
    def test_identity_case(self):
        assert np.array_equal(kron(I2, I2), np.eye(4))

    def test_sigma_z_with_identity(self):
        assert np.allclose(kron(SZ, I2), np.diag([1, 1, -1, -1]))

    def test_sigma_x_involution(self):
        xx = kron(SX, SX)
        assert np.allclose(xx @ xx, np.eye(4))

    def test_associativity_exact_on_dyadic_entries(self):
        # Entries k/16 keep every product exactly representable, so the
        # two association orders must agree bit for bit.
        rng = np.random.default_rng(7)
        mats = [
            (rng.integers(-16, 17, size=(2, 3)) + 1j * rng.integers(-16, 17, size=(2, 3))) / 16
            for _ in range(3)
        ]
        a, b, c = mats
        assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))

    def test_kron_all_matches_pairwise(self):
        rng = np.random.default_rng(3)
        a, b, c = (rng.normal(size=(2, 2)) + 0j for _ in range(3))
        assert np.allclose(kron_all(a, b, c), kron(kron(a, b), c))


class TestHilbertSchmidt:
    def test_norm_of_identity(self):
        assert hs_norm(I2) == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_pauli_orthogonality(self):
        assert hs_inner(SX, SY) == pytest.approx(0, abs=1e-15)

    def test_norm_of_pure_state(self):
        rho = DensityMatrix.pure([1, 1j]).matrix
        assert hs_norm(rho) == pytest.approx(1.0, abs=1e-12)

    def test_norm_squared_equals_self_inner(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            assert hs_norm(a) ** 2 == pytest.approx(hs_inner(a, a).real, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert hs_norm(a + b) <= hs_norm(a) + hs_norm(b) + 1e-12

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            hs_inner(I2, np.eye(3))


class TestDensityMatrixValidation:
    def test_accepts_pure_and_mixed(self):
        DensityMatrix.pure([1, 0])
        DensityMatrix.maximally_mixed(4)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="semidefinite"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_rejects_nan(self):
        bad = np.eye(2, dtype=complex) / 2
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            DensityMatrix(bad)

    def test_matrix_is_read_only(self):
        rho = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 9.0


class TestSystemLayout:
    def test_dim_is_product(self):
        lay = SystemLayout.of(control=2, target=2, bath=4)
        assert lay.dim == 16
        assert lay.labels == ("control", "target", "bath")

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            SystemLayout((("a", 2), ("a", 2)))

    def test_unknown_label(self):
        lay = SystemLayout.of(target=2)
        with pytest.raises(KeyError):
            lay.index("bath")


class TestPartialTrace:
    def test_product_state_keeps_first_factor(self):
        rng = np.random.default_rng(0)
        rho = random_density(2, rng)
        sigma = random_density(3, rng)
        lay = SystemLayout.of(left=2, right=3)
        full = DensityMatrix(np.kron(rho, sigma))
        reduced = partial_trace(full, lay, "left")
        assert np.allclose(reduced.matrix, rho, atol=1e-12)

    def test_bell_state_reduces_to_maximally_mixed(self):
        bell = DensityMatrix.pure([1, 0, 0, 1])
        lay = SystemLayout.of(a=2, b=2)
        for keep in ("a", "b"):
            reduced = partial_trace(bell, lay, keep)
            assert np.allclose(reduced.matrix, I2 / 2, atol=1e-12)

    def test_random_three_qubit_against_summation_oracle(self):
        rng = np.random.default_rng(42)
        rho = random_density(8, rng)
        lay = SystemLayout.of(q0=2, q1=2, q2=2)
        for keep_labels, keep_axes in [(("q0",), (0,)), (("q1", "q2"), (1, 2)), (("q0", "q2"), (0, 2))]:
            got = partial_trace(DensityMatrix(rho), lay, keep_labels).matrix
            want = partial_trace_by_summation(rho, (2, 2, 2), keep_axes)
            assert np.allclose(got, want, atol=1e-13)
            assert abs(np.trace(got) - 1) < 1e-12

    def test_composition_over_disjoint_labels(self):
        rng = np.random.default_rng(5)
        rho = random_density(8, rng)
        lay = SystemLayout.of(a=2, b=2, c=2)
        one_shot = partial_trace(DensityMatrix(rho), lay, "c").matrix
        first = partial_trace(DensityMatrix(rho), lay, ("b", "c"))
        two_step = partial_trace(first, SystemLayout.of(b=2, c=2), "c").matrix
        assert np.allclose(one_shot, two_step, atol=1e-12)

    def test_unknown_label_and_dim_mismatch(self):
        lay = SystemLayout.of(a=2, b=2)
        rho = DensityMatrix.maximally_mixed(4)
        with pytest.raises(KeyError):
            partial_trace(rho, lay, "z")
        with pytest.raises(ValueError):
            partial_trace(DensityMatrix.maximally_mixed(2), lay, "a")

    def test_raw_matrix_helper_on_unnormalized_input(self):
        rng = np.random.default_rng(9)
        mat = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        got = partial_trace_matrix(mat, (2, 2), (0,))
        want = partial_trace_by_summation(mat, (2, 2), (0,))
        assert np.allclose(got, want, atol=1e-13)


class TestValidationClosure:
    def test_states_from_library_maps_always_validate(self):
        # Chain several library operations; every output must construct a
        # DensityMatrix without tripping the validators.
        from scrambling_recovery.channels import (
            MeasurementDirection,
            apply,
            depolarizing_channel,
            projective_measurement_channel,
            random_cptp_channel,
        )
        from scrambling_recovery.ensembles import RngStream
        from scrambling_recovery.schemes import run_combined, run_ico
        from scrambling_recovery.twirl import TwirlBackend, twirl_output

        rng = RngStream(2718).generator()
        for k in range(4):
            rho = random_density(4, rng)
            state = DensityMatrix(rho)
            ch = random_cptp_channel(4, 2, rng)
            state = apply(ch, state)
            state = apply(depolarizing_channel(4, 0.7), state)
            state = twirl_output(ch, state, TwirlBackend.analytic()).output
            reduced = partial_trace(state, SystemLayout.of(a=2, b=2), "a")
            r = MeasurementDirection.from_angle(0.3 + 0.7 * k)
            rep = run_ico(
                projective_measurement_channel(r),
                DensityMatrix.pure([1, 1j * k]),
                TwirlBackend.clifford_exact(),
            )
            for _, branch in rep.branches.values():
                assert isinstance(branch, DensityMatrix)
            rep2 = run_combined(r, DensityMatrix.pure([1, 0]), TwirlBackend.clifford_exact())
            assert isinstance(rep2.post_selected_state, DensityMatrix)
            assert isinstance(reduced, DensityMatrix)


class TestFidelityWithPure:
    def test_identical_pure_states(self):
        zero = DensityMatrix.pure([1, 0])
        assert fidelity_with_pure(zero, zero) == pytest.approx(1.0, abs=1e-15)

    def test_maximally_mixed_against_any_pure(self):
        mixed = DensityMatrix.maximally_mixed(2)
        plus = DensityMatrix.pure([1, 1])
        assert fidelity_with_pure(mixed, plus) == pytest.approx(0.5, abs=1e-15)

    def test_partially_depolarized_state(self):
        # Tr[(p rho + (1-p) I/2) rho] = p + (1-p)/2 for pure rho; at
        # p = 1/3 this is 2/3.
        p = 1 / 3
        rho = DensityMatrix.pure([1, 1j])
        mix = DensityMatrix(p * rho.matrix + (1 - p) * I2 / 2)
        expected = p + (1 - p) / 2
        assert expected == pytest.approx(2 / 3, abs=1e-15)
        assert fidelity_with_pure(mix, rho) == pytest.approx(expected, abs=1e-12)

    def test_non_pure_target_rejected(self):
        with pytest.raises(ValueError, match="pure"):
            fidelity_with_pure(
                DensityMatrix.maximally_mixed(2), DensityMatrix.maximally_mixed(2)
            )
