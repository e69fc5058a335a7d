"""Learning rules: ERM, denoised ERM over a partition, finite-class and covering learners."""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from . import kernels
from .calculus import ApproxJmElement, ChannelError, tv_cover
from .data import Dataset
from .rng import as_generator
from .zoo import ApproxJmPartitioned, HypothesisClass, JointlyMeasurable, PoccClass


class LearnerError(ValueError):
    pass


class CoveringCapExceeded(LearnerError):
    pass


@dataclasses.dataclass
class PartitionSpec:
    """Per-element sample counts for a partitioned class."""

    allocation: np.ndarray

    def __post_init__(self):
        self.allocation = np.asarray(self.allocation, dtype=np.int64)
        if self.allocation.ndim != 1 or len(self.allocation) == 0:
            raise LearnerError("allocation must be a non-empty vector")

    @classmethod
    def equal(cls, n_elements: int, m: int) -> "PartitionSpec":
        """``m // R`` samples each, one extra for the first ``m % R`` elements."""
        base, extra = divmod(int(m), int(n_elements))
        alloc = np.full(n_elements, base, dtype=np.int64)
        alloc[:extra] += 1
        return cls(alloc)

    @property
    def m(self) -> int:
        return int(self.allocation.sum())


@dataclasses.dataclass
class LearnerOutput:
    chosen: int
    samples_used: int
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def to_json(self) -> dict:
        return {"chosen": int(self.chosen), "samples_used": int(self.samples_used),
                "diagnostics": _jsonable(self.diagnostics)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# plain ERM

_ERM_BLOCK = 1 << 22


def erm(cls: JointlyMeasurable, data: Dataset, rng=None, channel_rng=None) -> LearnerOutput:
    """Empirical risk minimization over a jointly measurable class.

    Each register is measured once with the shared root. Every member then
    draws its own answer from its channel, independently per sample, and the
    member with the fewest mistakes wins (lowest index on ties). Channel
    draws come from ``channel_rng`` when given, else from ``rng``.
    """
    if not getattr(cls, "jointly_measurable", False):
        raise LearnerError("plain ERM needs a jointly measurable class")
    rng = as_generator(rng)
    z = data.measure(cls.root, rng)
    ch_rng = rng if channel_rng is None else as_generator(channel_rng)
    y = data.labels
    table = cls.channel_table
    m = len(y)
    counts = np.empty(len(table), dtype=np.int64)
    step = max(1, _ERM_BLOCK // m)
    for a in range(0, len(table), step):
        u = ch_rng.random((min(step, len(table) - a), m))
        counts[a:a + step] = kernels.channel_error_counts(table[a:a + step], z, y, u)
    chosen = int(np.argmin(counts))
    risks = counts / m
    return LearnerOutput(chosen, m, {
        "min_empirical_risk": float(risks[chosen]),
        "n_minimizers": int(np.sum(counts == counts[chosen])),
        "empirical_risk_chosen": float(risks[chosen]),
    })


# ---------------------------------------------------------------------------
# denoised ERM


def denoised_empirical_risk(element: ApproxJmElement, member_index: int, z, y) -> float:
    """Mean over samples of the member's channel probability of answering ``1 - y`` after ``z``."""
    z = np.asarray(z, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if z.size == 0:
        raise LearnerError("empty sample")
    ch = element.channels[member_index]
    if z.max() >= ch.shape[0]:
        raise ChannelError("root outcome outside the channel's input alphabet")
    return float(np.mean(ch[z, 1 - y]))


def denoised_risks(element: ApproxJmElement, z, y) -> np.ndarray:
    """Denoised empirical risk of every member, from (outcome, label) counts."""
    z = np.asarray(z, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    k = element.channels.shape[1]
    if z.size == 0:
        raise LearnerError("empty sample")
    if z.max() >= k:
        raise ChannelError("root outcome outside the channel's input alphabet")
    counts = np.bincount(z * 2 + y, minlength=2 * k).reshape(k, 2)
    # label 0 errs with P(answer 1 | z), label 1 with P(answer 0 | z)
    return (element.channels[:, :, 1] @ counts[:, 0] + element.channels[:, :, 0] @ counts[:, 1]) / z.size


def derm(cls: ApproxJmPartitioned, data: Dataset, spec: PartitionSpec | None = None, rng=None) -> LearnerOutput:
    """Denoised ERM over an approximately jointly measurable partition.

    The data is cut into consecutive chunks, one per element. Each chunk is
    measured once with its element's center; every member is scored by its
    denoised risk using its own channel over the center. The element with the
    smallest best score wins, and its best member (lowest index) is returned.
    """
    rng = as_generator(rng)
    spec = PartitionSpec.equal(len(cls.elements), len(data)) if spec is None else spec
    if len(spec.allocation) != len(cls.elements):
        raise LearnerError("allocation length differs from the number of elements")
    if spec.m != len(data):
        raise LearnerError("allocation does not sum to the dataset size")
    if np.any(spec.allocation <= 0):
        raise LearnerError("every element needs at least one sample")
    best_local, best_risk = [], []
    for element, chunk in zip(cls.elements, data.split(spec.allocation)):
        z = chunk.measure(element.center, rng)
        der = denoised_risks(element, z, chunk.labels)
        i = int(np.argmin(der))
        best_local.append(i)
        best_risk.append(float(der[i]))
    j = int(np.argmin(best_risk))
    return LearnerOutput(cls.global_index(j, best_local[j]), len(data), {
        "element_risks": best_risk,
        "element_choices": best_local,
        "winning_element": j,
        "allocation": spec.allocation,
    })


# ---------------------------------------------------------------------------
# finite-class and covering learners


def finite_class_learner(povms: Sequence, data: Dataset, rng=None) -> LearnerOutput:
    """Each candidate measured on its own equal chunk; lowest empirical risk wins."""
    rng = as_generator(rng)
    spec = PartitionSpec.equal(len(povms), len(data))
    if np.any(spec.allocation <= 0):
        raise LearnerError("fewer samples than candidates")
    risks = []
    for p, chunk in zip(povms, data.split(spec.allocation)):
        out = chunk.measure(p, rng)
        risks.append(float(np.mean(out != chunk.labels)))
    chosen = int(np.argmin(risks))
    return LearnerOutput(chosen, len(data), {"empirical_risks": risks, "allocation": spec.allocation})


def covering_learner(cls: HypothesisClass, data: Dataset, epsilon: float, rng=None, cap: int = 64) -> LearnerOutput:
    """Cover the class at radius ``epsilon / 4`` and learn over the centers.

    Centers are not assumed jointly measurable, so each is scored on its own
    fresh chunk of the data.
    """
    if not 0 < epsilon <= 1:
        raise LearnerError("epsilon must lie in (0, 1]")
    members = cls.members()
    centers = tv_cover(members, epsilon / 4, cls.domain)
    if len(centers) > cap:
        raise CoveringCapExceeded(f"cover has {len(centers)} centers, cap is {cap}")
    inner = finite_class_learner([members[c] for c in centers], data, rng)
    return LearnerOutput(centers[inner.chosen], len(data), {
        "centers": centers,
        "n_centers": len(centers),
        "center_risks": inner.diagnostics["empirical_risks"],
        "allocation": inner.diagnostics["allocation"],
    })


def plugin_pocc_learner(pocc: PoccClass, x, y) -> int:
    """Estimate the joint law of (x, y) empirically and minimize the plug-in risk."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size == 0:
        raise LearnerError("empty sample")
    d = len(pocc.points)
    joint = np.bincount(x * 2 + y, minlength=2 * d).reshape(d, 2) / x.size
    return int(np.argmin(pocc.risk(joint)))
