import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from povm_learn.calculus import (
    AllStates,
    ApproxJmElement,
    ChannelError,
    ClassicalChannel,
    FineGraining,
    FiniteSet,
    apply_fine_graining,
    dtv_matrix,
    dtv_povm,
    induced_povm,
    jm_smooth,
    tv_cover,
)
from povm_learn.quantum import DensityMatrix, DimensionMismatch, Povm, QuantumError, random_povm, random_state
from povm_learn.tolerances import TOL

Z = Povm.computational_basis(2)


def scalar(t):
    return Povm.binary(np.eye(2) * t)


def diag_family(step=0.01):
    return [scalar(t) for t in np.round(np.arange(0, 1 + step / 2, step), 10)]


def orthogonal_qutrit():
    return [Povm.binary(np.diag(np.eye(3)[j])) for j in range(3)]


class TestClassicalChannel:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ChannelError):
            ClassicalChannel([[0.5, 0.4], [0, 1]])

    def test_entries_in_unit_interval(self):
        with pytest.raises(ChannelError):
            ClassicalChannel([[1.5, -0.5]])

    def test_constructors(self):
        assert ClassicalChannel.binary_symmetric(0.1).matrix == pytest.approx(np.array([[0.9, 0.1], [0.1, 0.9]]))
        assert ClassicalChannel.constant(3, 1).matrix.tolist() == [[0, 1]] * 3
        assert ClassicalChannel.identity(2).n_inputs == 2

    def test_alphabet_mismatch(self):
        with pytest.raises(ChannelError):
            FineGraining(Povm.computational_basis(3), ClassicalChannel.identity(2))


class TestFineGraining:
    def test_identity_channel_reproduces_root(self, rng):
        root, rho = random_povm(3, rng, 2), random_state(3, rng)
        fg = FineGraining(root, ClassicalChannel.identity(2))
        from povm_learn.quantum import born_distribution
        assert apply_fine_graining(fg, rho) == pytest.approx(born_distribution(root, rho))
        assert induced_povm(fg) == root

    def test_bsc_on_basis_state(self):
        fg = FineGraining(Z, ClassicalChannel.binary_symmetric(0.1))
        assert apply_fine_graining(fg, DensityMatrix.basis(2, 0)) == pytest.approx([0.9, 0.1])
        assert induced_povm(fg).effects[0] == pytest.approx(np.diag([0.9, 0.1]))

    def test_constant_channel(self, rng):
        fg = FineGraining(random_povm(2, rng, 3), ClassicalChannel.constant(3, 0))
        assert apply_fine_graining(fg, random_state(2, rng)) == pytest.approx([1, 0])
        assert induced_povm(fg).effects[0] == pytest.approx(np.eye(2))

    @settings(max_examples=50, deadline=None)
    @given(dim=st.integers(1, 5), k=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
    def test_induced_povm_is_valid(self, dim, k, seed):
        rng = np.random.default_rng(seed)
        root = random_povm(dim, rng, k)
        fg = FineGraining(root, ClassicalChannel(rng.dirichlet(np.ones(2), size=k)))
        povm = induced_povm(fg)
        rho = random_state(dim, rng)
        from povm_learn.quantum import born_distribution
        assert born_distribution(povm, rho) == pytest.approx(apply_fine_graining(fg, rho), abs=1e-12)


class TestDtv:
    def test_identical(self, rng):
        p = random_povm(3, rng)
        assert dtv_povm(p, p, AllStates(3)) == pytest.approx(0, abs=1e-12)

    def test_diag_vs_maximally_mixed(self, rng):
        p1, p2 = Povm.binary(np.diag([1.0, 0.0])), Povm.binary(np.diag([0.5, 0.5]))
        assert dtv_povm(p1, p2, AllStates(2)) == pytest.approx(0.5)
        # random pure states approach the value from below
        vecs = rng.standard_normal((10_000, 2)) + 1j * rng.standard_normal((10_000, 2))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        sampled = np.abs(np.abs(vecs[:, 0]) ** 2 - 0.5)
        assert sampled.max() <= 0.5 + 1e-12
        assert sampled.max() > 0.49

    @pytest.mark.parametrize("t,s", [(0.1, 0.7), (0.0, 1.0), (0.33, 0.33)])
    def test_scalar_family(self, t, s):
        assert dtv_povm(scalar(t), scalar(s), AllStates(2)) == pytest.approx(abs(t - s))

    def test_witness_attains_value(self):
        p1, p2 = Povm.binary(np.diag([0.9, 0.4])), Povm.binary(np.diag([0.2, 0.5]))
        value, w = dtv_povm(p1, p2, AllStates(2), return_witness=True)
        from povm_learn.quantum import born_distribution
        tv = 0.5 * np.abs(born_distribution(p1, w) - born_distribution(p2, w)).sum()
        assert tv == pytest.approx(value) == pytest.approx(0.7)

    def test_finite_set_takes_max_over_listed_states(self):
        p1, p2 = Povm.binary(np.diag([1.0, 0.0])), Povm.binary(np.diag([0.5, 0.5]))
        assert dtv_povm(p1, p2, FiniteSet([DensityMatrix.diag([0.5, 0.5])])) == pytest.approx(0)

    def test_all_states_needs_two_outcomes(self):
        with pytest.raises(QuantumError):
            dtv_povm(Povm.computational_basis(3), Povm.computational_basis(3), AllStates(3))

    def test_dims_checked(self):
        with pytest.raises(DimensionMismatch):
            dtv_povm(scalar(0.1), scalar(0.2), AllStates(3))

    def test_matrix_matches_pairwise(self, rng):
        ps = [random_povm(2, rng) for _ in range(5)]
        m = dtv_matrix(ps, AllStates(2))
        assert m[1, 3] == pytest.approx(dtv_povm(ps[1], ps[3], AllStates(2)))
        assert m == pytest.approx(m.T)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 4), k=st.integers(2, 4))
    def test_pseudometric_on_finite_set(self, seed, dim, k):
        rng = np.random.default_rng(seed)
        dom = FiniteSet([random_state(dim, rng) for _ in range(4)])
        a, b, c = (random_povm(dim, rng, k) for _ in range(3))
        assert dtv_povm(a, a, dom) == pytest.approx(0, abs=1e-12)
        assert dtv_povm(a, b, dom) == pytest.approx(dtv_povm(b, a, dom))
        assert dtv_povm(a, c, dom) <= dtv_povm(a, b, dom) + dtv_povm(b, c, dom) + 1e-12
        assert 0 <= dtv_povm(a, b, dom) <= 1


class TestTvCover:
    def test_singleton(self):
        assert tv_cover([scalar(0.3)], 0.1, AllStates(2)) == [0]

    def test_diag_family(self):
        povms = diag_family()
        centers = tv_cover(povms, 0.1, AllStates(2))
        assert 5 <= len(centers) <= 6
        d = dtv_matrix(povms, AllStates(2))
        assert np.all(d[:, centers].min(axis=1) <= 0.1 + TOL.dtv)

    def test_orthogonal_qutrit(self):
        assert len(tv_cover(orthogonal_qutrit(), 0.5, AllStates(3))) == 3

    def test_gamma_positive(self):
        with pytest.raises(ValueError):
            tv_cover([scalar(0.1)], 0.0, AllStates(2))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30), gamma=st.floats(0.02, 0.5))
    def test_is_a_cover(self, seed, n, gamma):
        rng = np.random.default_rng(seed)
        povms = [random_povm(2, rng) for _ in range(n)]
        centers = tv_cover(povms, gamma, AllStates(2))
        d = dtv_matrix(povms, AllStates(2))
        assert np.all(d[:, centers].min(axis=1) <= gamma + TOL.dtv)


class TestApproxJmElement:
    def test_exact_element_smoothing_is_exact(self, rng):
        ch = rng.dirichlet(np.ones(2), size=(6, 2))
        el = ApproxJmElement.jointly_measurable(Z, ch)
        states = [random_state(2, rng) for _ in range(5)]
        for i in range(6):
            smoothed = induced_povm(jm_smooth(el, i))
            assert dtv_povm(smoothed, el.member(i), FiniteSet(states)) == pytest.approx(0, abs=1e-12)

    def test_displaced_root_identity_channel(self):
        root = Povm.binary(np.diag([0.95, 0.05]))
        el = ApproxJmElement(Z, [root], [0], [np.eye(2)], gamma=0.05)
        assert dtv_povm(induced_povm(jm_smooth(el, 0)), el.member(0), AllStates(2)) == pytest.approx(0.05)

    def test_root_too_far(self):
        root = Povm.binary(np.diag([0.8, 0.2]))
        with pytest.raises(QuantumError):
            ApproxJmElement(Z, [root], [0], [np.eye(2)], gamma=0.05)

    def test_commuting_projectors_share_root(self):
        p = Povm.binary(np.diag([1.0, 0.0]))
        q = Povm.binary(np.diag([0.0, 1.0]))
        el = ApproxJmElement.jointly_measurable(Z, [np.eye(2), np.eye(2)[::-1]], members=[p, q])
        for i, h in enumerate([p, q]):
            assert induced_povm(jm_smooth(el, i)) == h

    def test_member_not_reproduced(self):
        with pytest.raises(QuantumError):
            ApproxJmElement.jointly_measurable(Z, [np.eye(2)], members=[scalar(0.5)])

    def test_channel_rows(self):
        with pytest.raises(ChannelError):
            ApproxJmElement.jointly_measurable(Z, [[[0.5, 0.2], [0, 1]]])

    def test_json_round_trip(self, rng):
        root = Povm.binary(np.diag([0.97, 0.03]))
        el = ApproxJmElement(Z, [Z, root], [0, 1, 1], rng.dirichlet(np.ones(2), size=(3, 2)), gamma=0.05)
        back = ApproxJmElement.from_json(json.loads(json.dumps(el.to_json())))
        states = np.stack([random_state(2, rng).op for _ in range(3)])
        assert back.one_probabilities(states) == pytest.approx(el.one_probabilities(states))
        assert back.gamma == el.gamma and len(back.roots) == 2

    def test_smoothed_probabilities_use_center(self):
        root = Povm.binary(np.diag([0.95, 0.05]))
        el = ApproxJmElement(Z, [root], [0], [np.eye(2)], gamma=0.05)
        s = DensityMatrix.basis(2, 0).op[None]
        assert el.one_probabilities(s)[0, 0] == pytest.approx(0.05)
        assert el.smoothed_one_probabilities(s)[0, 0] == pytest.approx(0.0)
