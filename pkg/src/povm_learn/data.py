"""Finite-support data distributions, register datasets and risks."""

from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from .calculus import FiniteSet
from .quantum import DensityMatrix, DimensionMismatch, Povm, QuantumError, RegisterBank, born_probabilities
from .rng import as_generator
from .tolerances import TOL
from .zoo import ERM_POINTS, HypothesisClass


class DistributionError(ValueError):
    pass


class DataDistribution:
    """Atoms ``(probability, state, P(y=1 | state))``."""

    def __init__(self, atoms: Sequence[tuple]):
        if not atoms:
            raise DistributionError("distribution needs at least one atom")
        probs = np.array([a[0] for a in atoms], dtype=float)
        states = [a[1] if isinstance(a[1], DensityMatrix) else DensityMatrix(a[1]) for a in atoms]
        cond = np.array([a[2] for a in atoms], dtype=float)
        if probs.min() < 0 or abs(probs.sum() - 1) > TOL.prob:
            raise DistributionError("atom probabilities must be non-negative and sum to 1")
        if cond.min() < 0 or cond.max() > 1:
            raise DistributionError("label conditionals must lie in [0, 1]")
        if len({s.dim for s in states}) != 1:
            raise DimensionMismatch("atom states differ in dimension")
        self.probs = probs / probs.sum()
        self.states = states
        self.conditionals = cond
        self._ops = np.stack([s.op for s in states])

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self):
        return len(self.states)

    @property
    def support(self) -> FiniteSet:
        return FiniteSet(self.states)

    def state_array(self) -> np.ndarray:
        return self._ops.copy()

    def joint_table(self) -> np.ndarray:
        """``table[a, y]`` = P(atom a, label y)."""
        return np.stack([self.probs * (1 - self.conditionals), self.probs * self.conditionals], axis=1)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {"p": float(p), "state": s.to_json(), "p_label1": float(q)}
                for p, s, q in zip(self.probs, self.states, self.conditionals)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DataDistribution":
        if "builtin" in obj:
            return builtin_distribution(obj["builtin"])
        dim = int(obj["dim"])
        atoms = []
        for a in obj["atoms"]:
            st = a["state"]
            state = DensityMatrix.basis(dim, int(st["basis"])) if "basis" in st else DensityMatrix.from_json(st)
            atoms.append((float(a["p"]), state, float(a["p_label1"])))
        return cls(atoms)

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]


def erm_counterexample_distribution() -> DataDistribution:
    """Uniform over the four two-bit basis states, label equal to the second bit."""
    return DataDistribution([(0.25, DensityMatrix.basis(4, i), float(x[1])) for i, x in enumerate(ERM_POINTS)])


def planted_distribution() -> DataDistribution:
    """Qubit basis states, equally likely, labelled by their index."""
    return DataDistribution([(0.5, DensityMatrix.basis(2, 0), 0.0), (0.5, DensityMatrix.basis(2, 1), 1.0)])


BUILTIN_DISTRIBUTIONS = {
    "erm_counterexample": erm_counterexample_distribution,
    "planted": planted_distribution,
}


def builtin_distribution(name: str) -> DataDistribution:
    try:
        return BUILTIN_DISTRIBUTIONS[name]()
    except KeyError:
        raise DistributionError(f"unknown built-in distribution {name!r}") from None


def load_distribution(path) -> DataDistribution:
    with open(path) as fh:
        return DataDistribution.from_json(json.load(fh))


class Dataset:
    """Labelled registers. The atom each register came from is hidden from learners.

    Datasets produced by :meth:`split` share the same register bank but own
    disjoint index ranges.
    """

    def __init__(self, bank: RegisterBank, labels, atom_index, provenance: dict, indices=None):
        self.bank = bank
        self.indices = np.arange(len(bank)) if indices is None else np.asarray(indices, dtype=np.int64)
        self._all_labels = np.asarray(labels, dtype=np.int64)
        self._all_atoms = np.asarray(atom_index, dtype=np.int64)
        self.provenance = dict(provenance)

    def __len__(self):
        return len(self.indices)

    @property
    def labels(self) -> np.ndarray:
        return self._all_labels[self.indices]

    @property
    def items(self) -> list:
        return [(self.bank.register(i), int(y)) for i, y in zip(self.indices, self.labels)]

    def measure(self, povm: Povm, rng) -> np.ndarray:
        """Measure every register of this dataset once with ``povm``."""
        return self.bank.measure(self.indices, povm, rng)

    def measurement_counts(self) -> np.ndarray:
        return self.bank.measurement_counts[self.indices]

    def split(self, sizes: Sequence[int]) -> list["Dataset"]:
        """Consecutive chunks of the given sizes."""
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.min(initial=0) < 0 or sizes.sum() != len(self):
            raise DistributionError("chunk sizes must be non-negative and sum to the dataset size")
        edges = np.concatenate([[0], np.cumsum(sizes)])
        return [
            Dataset(self.bank, self._all_labels, self._all_atoms, self.provenance, self.indices[a:b])
            for a, b in zip(edges[:-1], edges[1:])
        ]

    def _oracle_atoms(self) -> np.ndarray:
        """Test-oracle access to the source atoms. Never call from a learner."""
        return self._all_atoms[self.indices]


def sample_dataset(d: DataDistribution, m: int, rng, single_use: bool = True, stream: str = "dataset") -> Dataset:
    """``m`` independent draws from ``d``, each prepared in a fresh register."""
    if m < 1:
        raise DistributionError("m must be at least 1")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = as_generator(rng)
    atoms = gen.choice(len(d), size=m, p=d.probs)
    labels = (gen.random(m) < d.conditionals[atoms]).astype(np.int64)
    bank = RegisterBank.from_atoms(d._ops, atoms, single_use=single_use)
    prov = {"seed": None if seed is None else int(seed), "stream": stream, "distribution": d.content_hash, "m": m}
    return Dataset(bank, labels, atoms, prov)


def _risk_from_p1(p1, d: DataDistribution):
    q = d.conditionals
    return (p1 * (1 - q) + (1 - p1) * q) @ d.probs


def true_risk(h, d: DataDistribution) -> float:
    """Exact misclassification risk of a POVM under a finite-support distribution."""
    if not isinstance(h, Povm):
        raise TypeError("true_risk expects a Povm; use true_risks for classes")
    if h.dim != d.dim:
        raise DimensionMismatch("hypothesis and distribution differ in dimension")
    p1 = born_probabilities(h, d._ops)[:, 1]
    return float(_risk_from_p1(p1, d))


def true_risks(cls: HypothesisClass, d: DataDistribution) -> np.ndarray:
    """Exact risk of every member of a class."""
    if cls.dim != d.dim:
        raise DimensionMismatch("class and distribution differ in dimension")
    return _risk_from_p1(cls.one_probabilities(d._ops), d)


def risk_from_one_probabilities(p1, d: DataDistribution) -> np.ndarray:
    """Risk given ``P[answer 1]`` per atom (last axis)."""
    return _risk_from_p1(np.asarray(p1), d)


def empirical_risk(outcomes, labels) -> float:
    """Fraction of outcomes that differ from their labels."""
    outcomes = np.asarray(outcomes)
    labels = np.asarray(labels)
    if outcomes.size == 0:
        raise QuantumError("empirical risk of an empty sample")
    if outcomes.shape != labels.shape:
        raise ValueError("outcomes and labels differ in length")
    return float(np.mean(outcomes != labels))
