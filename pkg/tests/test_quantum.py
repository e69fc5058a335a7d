import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from povm_learn.quantum import (
    DensityMatrix,
    DimensionMismatch,
    Povm,
    QuantumError,
    QuantumRegister,
    RegisterBank,
    RegisterError,
    born_distribution,
    matrix_from_json,
    matrix_to_json,
    measure_register,
    psd_sqrt,
    random_povm,
    random_state,
    random_unitary,
    spectral_decompose,
)
from povm_learn.tolerances import TOL, override_tolerances

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PLUS = DensityMatrix.pure([1, 1])


class TestBornDistribution:
    def test_plus_state_in_computational_basis(self):
        assert born_distribution(Povm.computational_basis(2), PLUS) == pytest.approx([0.5, 0.5])

    def test_eigenstate(self):
        assert born_distribution(Povm.computational_basis(2), DensityMatrix.basis(2, 0)) == pytest.approx([1, 0])

    def test_trace_arithmetic(self):
        p = born_distribution(Povm.binary(np.diag([0.8, 0.2])), DensityMatrix.diag([0.3, 0.7]))
        assert p[0] == pytest.approx(0.3 * 0.8 + 0.7 * 0.2)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            born_distribution(Povm.computational_basis(3), PLUS)

    @settings(max_examples=60, deadline=None)
    @given(dim=st.integers(1, 6), k=st.integers(2, 4), seed=st.integers(0, 2**32 - 1))
    def test_is_probability_vector(self, dim, k, seed):
        rng = np.random.default_rng(seed)
        p = born_distribution(random_povm(dim, rng, k), random_state(dim, rng))
        assert np.all(p >= 0) and np.all(p <= 1)
        assert p.sum() == pytest.approx(1, abs=TOL.prob)


class TestValidation:
    def test_non_hermitian_state(self):
        with pytest.raises(QuantumError):
            DensityMatrix(np.array([[1, 1], [0, 0]], dtype=complex))

    def test_negative_state(self):
        with pytest.raises(QuantumError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_trace(self):
        with pytest.raises(QuantumError):
            DensityMatrix(np.diag([0.5, 0.4]))

    def test_effects_must_sum_to_identity(self):
        with pytest.raises(QuantumError):
            Povm(np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 0.9])]))

    def test_effect_must_be_psd(self):
        with pytest.raises(QuantumError):
            Povm(np.stack([np.diag([1.2, 0.0]), np.diag([-0.2, 1.0])]))

    def test_tolerance_override(self):
        rho = np.diag([0.5, 0.5 + 1e-7])
        with pytest.raises(QuantumError):
            DensityMatrix(rho)
        with override_tolerances(trace=1e-6):
            DensityMatrix(rho)


class TestSpectral:
    def test_identity(self):
        w, _ = spectral_decompose(np.eye(2))
        assert w == pytest.approx([1, 1])

    def test_diagonal(self):
        w, _ = spectral_decompose(np.diag([0.9, 0.2]))
        assert w == pytest.approx([0.2, 0.9])

    def test_pauli_x(self):
        w, v = spectral_decompose(PAULI_X)
        assert w == pytest.approx([-1, 1])
        minus = np.array([1, -1]) / np.sqrt(2)
        assert abs(np.vdot(minus, v[:, 0])) == pytest.approx(1)
        assert v @ np.diag(w) @ v.conj().T == pytest.approx(PAULI_X)

    def test_non_hermitian_rejected(self):
        with pytest.raises(QuantumError):
            spectral_decompose(np.array([[0, 1], [0, 0]]))

    @settings(max_examples=40, deadline=None)
    @given(dim=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_reconstruction_and_order(self, dim, seed):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = g + g.conj().T
        w, v = spectral_decompose(h)
        assert np.all(np.diff(w) >= 0)
        assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= TOL.eig

    def test_psd_sqrt(self):
        s = psd_sqrt(np.diag([0.64, 0.04]))
        assert s == pytest.approx(np.diag([0.8, 0.2]))


class TestMeasurement:
    def test_projective_collapse(self):
        r = QuantumRegister.prepare(PLUS)
        assert measure_register(r, Povm.computational_basis(2), forced_outcome=0) == 0
        assert r._oracle_state().op == pytest.approx(np.diag([1, 0]))

    def test_fixed_point(self, rng):
        r = QuantumRegister.prepare(DensityMatrix.basis(2, 0))
        for _ in range(20):
            assert measure_register(r, Povm.binary(np.diag([1.0, 0.0])), rng) == 0
        assert r._oracle_state().op == pytest.approx(np.diag([1, 0]))

    def test_post_state_uses_principal_root(self):
        r = QuantumRegister.prepare(DensityMatrix.diag([0.5, 0.5]))
        measure_register(r, Povm.binary(np.diag([0.64, 0.04])), forced_outcome=0)
        assert r._oracle_state().op == pytest.approx(np.diag([16 / 17, 1 / 17]))

    def test_zero_probability_never_sampled(self, rng):
        bank = RegisterBank.from_atoms(DensityMatrix.basis(2, 0).op[None], np.zeros(5000, dtype=int))
        out = bank.measure(slice(None), Povm.computational_basis(2), rng)
        assert np.all(out == 0)
        with pytest.raises(QuantumError):
            measure_register(bank.register(0), Povm.computational_basis(2), forced_outcome=1)

    def test_scalar_povm_leaves_state(self, rng):
        rho = random_state(3, rng)
        r = QuantumRegister.prepare(rho)
        measure_register(r, Povm(np.stack([0.3 * np.eye(3), 0.7 * np.eye(3)])), rng)
        assert r._oracle_state().op == pytest.approx(rho.op, abs=1e-12)

    def test_single_use(self, rng):
        r = QuantumRegister.prepare(PLUS, single_use=True)
        measure_register(r, Povm.computational_basis(2), rng)
        assert r.measurement_count == 1
        with pytest.raises(RegisterError):
            measure_register(r, Povm.computational_basis(2), rng)

    def test_destroyed(self, rng):
        r = QuantumRegister.prepare(PLUS)
        r.destroy()
        with pytest.raises(RegisterError):
            measure_register(r, Povm.computational_basis(2), rng)

    @settings(max_examples=30, deadline=None)
    @given(dim=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
    def test_post_states_are_valid(self, dim, seed):
        rng = np.random.default_rng(seed)
        bank = RegisterBank(np.stack([random_state(dim, rng).op for _ in range(8)]))
        povm = random_povm(dim, rng, 3)
        for _ in range(3):
            bank.measure(slice(None), povm, rng)
        for op in bank._oracle_states():
            DensityMatrix(op)

    def test_frequencies_match_born_rule(self, rng):
        povm, rho = random_povm(3, rng, 3), random_state(3, rng)
        n = 100_000
        bank = RegisterBank.from_atoms(rho.op[None], np.zeros(n, dtype=int))
        out = bank.measure(slice(None), povm, rng)
        p = born_distribution(povm, rho)
        freq = np.bincount(out, minlength=3) / n
        assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / n))


class TestSerialization:
    def test_matrix_round_trip(self, rng):
        m = random_unitary(3, rng)
        obj = json.loads(json.dumps(matrix_to_json(m)))
        assert np.array_equal(matrix_from_json(obj), m)
        assert obj["dim"] == 3 and len(obj["re"]) == 9

    def test_povm_round_trip(self, rng):
        p = random_povm(2, rng)
        q = Povm.from_json(json.loads(json.dumps(p.to_json())))
        assert q == p and q.content_hash == p.content_hash

    def test_state_round_trip(self, rng):
        rho = random_state(4, rng)
        assert DensityMatrix.from_json(json.loads(json.dumps(rho.to_json()))) == rho

    def test_entry_count_checked(self):
        with pytest.raises(ValueError):
            matrix_from_json({"dim": 2, "re": [1, 0, 0], "im": [0, 0, 0]})
