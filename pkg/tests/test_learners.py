import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from povm_learn.calculus import ApproxJmElement
from povm_learn.complexity import bound_derm, fat_dim
from povm_learn.data import (
    DataDistribution,
    erm_counterexample_distribution,
    planted_distribution,
    sample_dataset,
    true_risk,
    true_risks,
)
from povm_learn.learners import (
    CoveringCapExceeded,
    LearnerError,
    PartitionSpec,
    covering_learner,
    denoised_empirical_risk,
    denoised_risks,
    derm,
    erm,
    finite_class_learner,
    plugin_pocc_learner,
)
from povm_learn.quantum import Povm, random_state
from povm_learn.zoo import (
    ApproxJmPartitioned,
    JointlyMeasurable,
    PoccClass,
    make_noisy_function_class,
    make_planted_class,
    make_scalar_family,
    pocc_to_povm,
)

Z = Povm.computational_basis(2)
IDENTITY = np.eye(2)
FLIP = np.eye(2)[::-1]


class TestPartitionSpec:
    def test_equal_split(self):
        assert PartitionSpec.equal(3, 11).allocation.tolist() == [4, 4, 3]
        assert PartitionSpec.equal(3, 11).m == 11

    @settings(max_examples=50)
    @given(r=st.integers(1, 20), m=st.integers(0, 500))
    def test_equal_split_properties(self, r, m):
        a = PartitionSpec.equal(r, m).allocation
        assert a.sum() == m and a.max() - a.min() <= 1

    def test_empty(self):
        with pytest.raises(LearnerError):
            PartitionSpec([])


class TestErm:
    def test_singleton(self, rng):
        cls = JointlyMeasurable(Z, [IDENTITY])
        out = erm(cls, sample_dataset(planted_distribution(), 20, rng), rng)
        assert out.chosen == 0 and out.samples_used == 20

    def test_zero_risk_member_wins(self):
        cls = JointlyMeasurable(Z, [FLIP, IDENTITY])
        assert true_risks(cls, planted_distribution()) == pytest.approx([1, 0])
        wins = sum(erm(cls, sample_dataset(planted_distribution(), 200, t), t).chosen == 1 for t in range(100))
        assert wins / 100 >= 0.99

    def test_diagnostics(self, rng):
        cls = JointlyMeasurable(Z, [IDENTITY, IDENTITY])
        out = erm(cls, sample_dataset(planted_distribution(), 30, rng), rng)
        assert out.diagnostics["min_empirical_risk"] == 0
        assert out.diagnostics["n_minimizers"] == 2 and out.chosen == 0

    def test_needs_joint_measurability(self, rng):
        with pytest.raises(LearnerError):
            erm(make_scalar_family([0.5]), sample_dataset(planted_distribution(), 5, rng), rng)

    def test_channel_stream_is_separate(self):
        cls = pocc_to_povm(make_noisy_function_class((0.3,)))
        d = erm_counterexample_distribution()
        a = erm(cls, sample_dataset(d, 40, 1), 2, channel_rng=3)
        b = erm(cls, sample_dataset(d, 40, 1), 2, channel_rng=3)
        assert a.chosen == b.chosen and a.diagnostics == b.diagnostics


class TestDenoisedRisk:
    def element(self, p0=0.9):
        return ApproxJmElement.jointly_measurable(Z, [IDENTITY, [[p0, 1 - p0], [p0, 1 - p0]]])

    def test_identity_channel_matching_labels(self):
        assert denoised_empirical_risk(self.element(), 0, [0, 1, 1], [0, 1, 1]) == 0

    def test_single_sample(self):
        assert denoised_empirical_risk(self.element(), 1, [0], [1]) == pytest.approx(0.9)
        assert denoised_empirical_risk(self.element(), 1, [0], [0]) == pytest.approx(0.1)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 40), k=st.integers(2, 5))
    def test_count_form_matches_definition(self, seed, m, k):
        rng = np.random.default_rng(seed)
        root = Povm.computational_basis(k)
        el = ApproxJmElement.jointly_measurable(root, rng.dirichlet(np.ones(2), size=(6, k)))
        z, y = rng.integers(0, k, m), rng.integers(0, 2, m)
        ref = [denoised_empirical_risk(el, i, z, y) for i in range(6)]
        assert denoised_risks(el, z, y) == pytest.approx(ref, abs=1e-12)

    def test_outcome_outside_alphabet(self):
        from povm_learn.calculus import ChannelError
        with pytest.raises(ChannelError):
            denoised_risks(self.element(), [2], [0])

    def test_unbiased(self, rng):
        el = ApproxJmElement.jointly_measurable(Z, rng.dirichlet(np.ones(2), size=(3, 2)))
        d = DataDistribution([(0.3, random_state(2, rng), 0.2), (0.7, random_state(2, rng), 0.9)])
        trials, m = 4000, 5
        vals = np.empty((trials, 3))
        for t in range(trials):
            data = sample_dataset(d, m, rng)
            vals[t] = denoised_risks(el, data.measure(Z, rng), data.labels)
        exact = [true_risk(el.member(i), d) for i in range(3)]
        se = vals.std(axis=0, ddof=1) / np.sqrt(trials)
        assert np.all(np.abs(vals.mean(axis=0) - exact) <= 4 * se)


class TestDerm:
    def test_single_element_equals_denoised_erm(self, rng):
        jm = pocc_to_povm(make_noisy_function_class((0.1,)))
        part = ApproxJmPartitioned.from_jointly_measurable(jm, [np.arange(len(jm))])
        d = erm_counterexample_distribution()
        data = sample_dataset(d, 60, 4)
        out = derm(part, data, rng=5)
        z = sample_dataset(d, 60, 4).measure(jm.root, np.random.default_rng(5))
        assert out.chosen == int(np.argmin(denoised_risks(jm.element, z, data.labels)))

    def test_allocation_checks(self, rng):
        part = ApproxJmPartitioned.singletons(make_scalar_family([0.1, 0.2]).povms)
        data = sample_dataset(planted_distribution(), 10, rng)
        with pytest.raises(LearnerError):
            derm(part, data, PartitionSpec([5, 4]), rng)
        with pytest.raises(LearnerError):
            derm(part, data, PartitionSpec([10, 0]), rng)
        with pytest.raises(LearnerError):
            derm(part, data, PartitionSpec([10]), rng)

    def test_returns_member_of_winning_element(self, rng):
        povms = make_planted_class([0.2, 0.5]).povms
        part = ApproxJmPartitioned.singletons(povms)
        out = derm(part, sample_dataset(planted_distribution(), 300, rng), rng=rng)
        assert out.chosen == part.global_index(out.diagnostics["winning_element"], 0)
        assert out.diagnostics["allocation"].tolist() == [100, 100, 100]

    def test_realizable_at_bound_sample_size(self):
        pocc = make_noisy_function_class()
        jm = pocc_to_povm(pocc)
        part = ApproxJmPartitioned.from_jointly_measurable(jm, [np.arange(len(jm))])
        d = erm_counterexample_distribution()
        eps, delta = 0.1, 0.1
        dim, _ = fat_dim(part, d.states, eps / 8)
        m = int(np.ceil(bound_derm(1, dim, eps, delta).value))
        risks = true_risks(part, d)
        assert risks.min() == 0
        excess = [risks[derm(part, sample_dataset(d, m, t), rng=10_000 + t).chosen] for t in range(100)]
        assert np.mean(np.array(excess) <= eps) >= 0.9


class TestCoveringLearner:
    def test_clustered_class_one_center(self, rng):
        cls = make_scalar_family([0.50, 0.52, 0.54])
        out = covering_learner(cls, sample_dataset(planted_distribution(), 20, rng), 0.4, rng)
        assert out.diagnostics["n_centers"] == 1
        assert out.diagnostics["allocation"].tolist() == [20]

    def test_diag_family_five_centers(self, rng):
        cls = make_scalar_family(np.round(np.arange(0, 1.001, 0.01), 10))
        m = 103
        out = covering_learner(cls, sample_dataset(planted_distribution(), m, rng), 0.4, rng)
        assert out.diagnostics["n_centers"] == 5
        assert set(out.diagnostics["allocation"].tolist()) <= {m // 5, -(-m // 5)}

    def test_planted_class(self):
        from povm_learn.complexity import bound_finite_class
        cls = make_planted_class(np.linspace(0, 1, 9))
        d = planted_distribution()
        risks = true_risks(cls, d)
        eps, delta = 0.2, 0.2
        n = covering_learner(cls, sample_dataset(d, 100, 0), eps, 0).diagnostics["n_centers"]
        m = int(np.ceil(bound_finite_class([1] * n, eps, delta).value))
        got = [risks[covering_learner(cls, sample_dataset(d, m, t), eps, 500 + t).chosen] for t in range(100)]
        assert np.mean(np.array(got) <= 0.3) >= 0.9

    def test_cap(self, rng):
        cls = make_scalar_family(np.linspace(0, 1, 50))
        with pytest.raises(CoveringCapExceeded):
            covering_learner(cls, sample_dataset(planted_distribution(), 100, rng), 0.04, rng, cap=5)

    def test_finite_learner_needs_enough_samples(self, rng):
        with pytest.raises(LearnerError):
            finite_class_learner(make_scalar_family([0.1, 0.2, 0.3]).povms,
                                 sample_dataset(planted_distribution(), 2, rng), rng)


class TestPlugin:
    def test_exact_law_gives_minimizer(self):
        pocc = PoccClass([0, 1], [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
        # empirical law equal to the true one: x uniform, y = x
        assert plugin_pocc_learner(pocc, [0, 1, 0, 1], [0, 1, 0, 1]) == 0

    def test_tie_lowest_index(self):
        pocc = PoccClass([0], [[0.3], [0.3]])
        assert plugin_pocc_learner(pocc, [0, 0], [0, 1]) == 0

    def test_empty(self):
        with pytest.raises(LearnerError):
            plugin_pocc_learner(PoccClass([0], [[0.3]]), [], [])
