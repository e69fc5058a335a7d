"""Classical post-processing, total-variation distance and smoothing of POVMs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from typing import Sequence

import numpy as np

from .quantum import (
    DensityMatrix,
    DimensionMismatch,
    Povm,
    QuantumError,
    born_distribution,
    born_probabilities,
)
from .tolerances import TOL


class ChannelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# classical channels and fine-grainings


@dataclasses.dataclass(frozen=True, eq=False)
class ClassicalChannel:
    """Row-stochastic matrix; ``matrix[z, y]`` is the probability of output y given input z."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ChannelError("channel matrix must be 2-D and non-empty")
        if a.min() < -TOL.prob or a.max() > 1 + TOL.prob:
            raise ChannelError("channel entries must lie in [0, 1]")
        if np.max(np.abs(a.sum(axis=1) - 1.0)) > TOL.prob:
            raise ChannelError("channel rows must sum to 1")
        a = np.clip(a, 0.0, 1.0)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def n_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, n: int) -> "ClassicalChannel":
        return cls(np.eye(n))

    @classmethod
    def binary_symmetric(cls, crossover: float) -> "ClassicalChannel":
        c = float(crossover)
        return cls([[1 - c, c], [c, 1 - c]])

    @classmethod
    def constant(cls, n_inputs: int, output: int, n_outputs: int = 2) -> "ClassicalChannel":
        a = np.zeros((n_inputs, n_outputs))
        a[:, output] = 1.0
        return cls(a)

    def to_json(self) -> list:
        return self.matrix.tolist()


@dataclasses.dataclass(frozen=True)
class FineGraining:
    """A root measurement followed by a classical channel."""

    root: Povm
    channel: ClassicalChannel

    def __post_init__(self):
        if self.channel.n_inputs != self.root.n_outcomes:
            raise ChannelError(
                f"channel expects {self.channel.n_inputs} inputs, root has {self.root.n_outcomes} outcomes"
            )


def apply_fine_graining(fg: FineGraining, state: DensityMatrix) -> np.ndarray:
    """Output distribution of measuring ``state`` with the root, then applying the channel."""
    return born_distribution(fg.root, state) @ fg.channel.matrix


def induced_povm(fg: FineGraining) -> Povm:
    """The POVM whose outcome law equals the fine-graining's: ``sum_z a(y|z) root_z``."""
    eff = np.einsum("zy,zij->yij", fg.channel.matrix, fg.root.effects)
    return Povm(eff)


# ---------------------------------------------------------------------------
# domains and total-variation distance


@dataclasses.dataclass(frozen=True)
class AllStates:
    """Every density matrix of the given dimension."""

    dim: int


@dataclasses.dataclass(frozen=True)
class FiniteSet:
    states: tuple

    def __init__(self, states: Sequence[DensityMatrix]):
        states = tuple(states)
        if not states:
            raise QuantumError("finite domain must be non-empty")
        if len({s.dim for s in states}) != 1:
            raise DimensionMismatch("finite domain states have different dimensions")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def stack(self) -> np.ndarray:
        return np.stack([s.op for s in self.states])


DomainSpec = AllStates | FiniteSet


def _binary_effects(povms: Sequence[Povm]) -> np.ndarray:
    if any(p.n_outcomes != 2 for p in povms):
        raise QuantumError("all-states distance is only defined here for two-outcome POVMs")
    return np.stack([p.effects[0] for p in povms])


def _check_dims(povms, domain):
    dims = {p.dim for p in povms}
    if len(dims) != 1 or domain.dim not in dims:
        raise DimensionMismatch("POVMs and domain must share one dimension")


def dtv_povm(p1: Povm, p2: Povm, domain: DomainSpec, return_witness: bool = False):
    """Worst-case total-variation distance between the outcome laws of two POVMs.

    On ``FiniteSet`` the maximum is taken over the listed states. On
    ``AllStates`` (two outcomes only) the value is the spectral norm of the
    difference of the outcome-0 effects, attained at an eigenvector.

    With ``return_witness`` also returns a state attaining the maximum.
    """
    _check_dims([p1, p2], domain)
    if p1.n_outcomes != p2.n_outcomes:
        raise QuantumError("POVMs have different numbers of outcomes")
    if isinstance(domain, AllStates):
        delta = _binary_effects([p1])[0] - _binary_effects([p2])[0]
        w, v = np.linalg.eigh(0.5 * (delta + delta.conj().T))
        j = int(np.argmax(np.abs(w)))
        value = float(abs(w[j]))
        witness = DensityMatrix.pure(v[:, j])
    else:
        states = domain.stack()
        diff = born_probabilities(p1, states) - born_probabilities(p2, states)
        tv = 0.5 * np.abs(diff).sum(axis=1)
        j = int(np.argmax(tv))
        value = float(tv[j])
        witness = domain.states[j]
    value = min(max(value, 0.0), 1.0)
    return (value, witness) if return_witness else value


class _DistanceOracle:
    """Distances from one member to all members of a fixed list."""

    def __init__(self, povms: Sequence[Povm], domain: DomainSpec):
        if not povms:
            raise QuantumError("empty class")
        _check_dims(povms, domain)
        self.n = len(povms)
        self.all_states = isinstance(domain, AllStates)
        if self.all_states:
            self.e0 = _binary_effects(povms)
        else:
            states = domain.stack()
            self.probs = np.stack([born_probabilities(p, states) for p in povms])

    def row(self, i: int) -> np.ndarray:
        if self.all_states:
            delta = self.e0[i] - self.e0
            delta = 0.5 * (delta + np.conj(np.swapaxes(delta, -1, -2)))
            w = np.linalg.eigvalsh(delta)
            return np.abs(w).max(axis=1)
        return 0.5 * np.abs(self.probs[i] - self.probs).sum(axis=2).max(axis=1)

    def matrix(self) -> np.ndarray:
        return np.stack([self.row(i) for i in range(self.n)])


def dtv_matrix(povms: Sequence[Povm], domain: DomainSpec) -> np.ndarray:
    """Pairwise d_TV matrix of a list of POVMs."""
    return _DistanceOracle(povms, domain).matrix()


def _farthest_point_net(oracle: _DistanceOracle, gamma: float) -> list[int]:
    centers = [0]
    nearest = oracle.row(0)
    while True:
        far = int(np.argmax(nearest))
        if nearest[far] <= gamma + TOL.dtv:
            return centers
        centers.append(far)
        nearest = np.minimum(nearest, oracle.row(far))


def _greedy_set_cover(dist: np.ndarray, gamma: float) -> list[int]:
    covers = dist <= gamma + TOL.dtv
    uncovered = np.ones(len(dist), dtype=bool)
    centers = []
    while uncovered.any():
        gain = covers[:, uncovered].sum(axis=1)
        c = int(np.argmax(gain))
        centers.append(c)
        uncovered &= ~covers[c]
    return centers


SET_COVER_MAX = 4096


def tv_cover(povms: Sequence[Povm], gamma: float, domain: DomainSpec) -> list[int]:
    """Indices of centers such that every POVM lies within ``gamma`` of one.

    Two greedy constructions are run and the smaller result is kept: a
    farthest-point net (centers pairwise more than ``gamma`` apart, so its size
    never exceeds the ``gamma``-packing number) and max-coverage set cover.
    Neither is guaranteed optimal; the result is an upper bound on the
    covering number.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    oracle = _DistanceOracle(povms, domain)
    net = _farthest_point_net(oracle, gamma)
    if oracle.n > SET_COVER_MAX:
        return sorted(net)
    greedy = _greedy_set_cover(oracle.matrix(), gamma)
    best = greedy if len(greedy) <= len(net) else net
    return sorted(best)


# ---------------------------------------------------------------------------
# approximately jointly measurable sets


@dataclasses.dataclass(eq=False)
class ApproxJmElement:
    """A set of binary POVMs whose fine-graining roots lie near a common center.

    Member ``i`` is realized by root ``roots[root_index[i]]`` followed by the
    channel ``channels[i]`` (shape ``(k_root, 2)``). When ``members`` is None
    each member is defined as the POVM induced by its fine-graining.
    """

    center: Povm
    roots: list
    root_index: np.ndarray
    channels: np.ndarray
    gamma: float = 0.0
    domain: DomainSpec | None = None
    members: list | None = None
    validate: dataclasses.InitVar[bool] = True

    def __post_init__(self, validate):
        self.root_index = np.asarray(self.root_index, dtype=np.int64)
        self.channels = np.asarray(self.channels, dtype=float)
        if self.domain is None:
            self.domain = AllStates(self.center.dim)
        if self.channels.ndim != 3 or self.channels.shape[0] != len(self.root_index):
            raise ChannelError("channels must have shape (n_members, k_root, n_out)")
        if self.members is not None and len(self.members) != len(self.root_index):
            raise ChannelError("explicit member list has the wrong length")
        if validate:
            self.check()

    def __len__(self):
        return len(self.root_index)

    def check(self) -> None:
        ch = self.channels
        if ch.min() < -TOL.prob or ch.max() > 1 + TOL.prob:
            raise ChannelError("channel entries must lie in [0, 1]")
        if np.max(np.abs(ch.sum(axis=2) - 1.0)) > TOL.prob:
            raise ChannelError("channel rows must sum to 1")
        for r, root in enumerate(self.roots):
            used = np.flatnonzero(self.root_index == r)
            if used.size and ch.shape[1] != root.n_outcomes:
                raise ChannelError("channel alphabet does not match its root")
            if used.size and root is not self.center and root != self.center and (
                dtv_povm(self.center, root, self.domain) > self.gamma + TOL.dtv
            ):
                raise QuantumError(f"root {r} is farther than gamma={self.gamma} from the center")
        if ch.shape[1] != self.center.n_outcomes:
            raise ChannelError("center alphabet does not match the channels")
        if self.members is not None:
            for i, h in enumerate(self.members):
                if dtv_povm(h, induced_povm(self.fine_graining(i)), self.domain) > TOL.dtv:
                    raise QuantumError(f"member {i} is not reproduced by its fine-graining")

    def fine_graining(self, i: int) -> FineGraining:
        return FineGraining(self.roots[self.root_index[i]], ClassicalChannel(self.channels[i]))

    def member(self, i: int) -> Povm:
        if self.members is not None:
            return self.members[i]
        return induced_povm(self.fine_graining(i))

    def one_probabilities(self, states) -> np.ndarray:
        """P[outcome 1] of every member on every state, shape ``(n_members, n_states)``."""
        states = np.asarray(states)
        out = np.empty((len(self), len(states)))
        for r, root in enumerate(self.roots):
            sel = self.root_index == r
            if sel.any():
                pz = born_probabilities(root, states)
                out[sel] = self.channels[sel, :, 1] @ pz.T
        return out

    def smoothed_one_probabilities(self, states) -> np.ndarray:
        pz = born_probabilities(self.center, np.asarray(states))
        return self.channels[:, :, 1] @ pz.T

    def to_json(self) -> dict:
        povms = {self.center.content_hash: self.center.to_json()}
        for root in self.roots:
            povms[root.content_hash] = root.to_json()
        members = []
        for i in range(len(self)):
            entry = {"root": self.roots[self.root_index[i]].content_hash, "channel": self.channels[i].tolist()}
            if self.members is not None:
                povms[self.members[i].content_hash] = self.members[i].to_json()
                entry["member"] = self.members[i].content_hash
            members.append(entry)
        return {"center": self.center.content_hash, "gamma": self.gamma, "members": members, "povms": povms}

    @classmethod
    def from_json(cls, obj: dict, domain: DomainSpec | None = None) -> "ApproxJmElement":
        povms = {h: Povm.from_json(p) for h, p in obj["povms"].items()}
        root_keys = []
        for entry in obj["members"]:
            if entry["root"] not in root_keys:
                root_keys.append(entry["root"])
        root_index = [root_keys.index(e["root"]) for e in obj["members"]]
        members = None
        if obj["members"] and "member" in obj["members"][0]:
            members = [povms[e["member"]] for e in obj["members"]]
        return cls(
            center=povms[obj["center"]],
            roots=[povms[k] for k in root_keys],
            root_index=root_index,
            channels=[e["channel"] for e in obj["members"]],
            gamma=float(obj["gamma"]),
            domain=domain,
            members=members,
        )

    @classmethod
    def jointly_measurable(cls, root: Povm, channels, domain=None, members=None) -> "ApproxJmElement":
        channels = np.asarray(channels, dtype=float)
        return cls(root, [root], np.zeros(len(channels), dtype=np.int64), channels, 0.0, domain, members)


def jm_smooth(element: ApproxJmElement, member_index: int) -> FineGraining:
    """The member's own channel re-rooted at the element's center."""
    if not 0 <= member_index < len(element):
        raise IndexError(f"member index {member_index} out of range")
    return FineGraining(element.center, ClassicalChannel(element.channels[member_index]))


def channel_hash(matrix) -> str:
    return hashlib.sha256(json.dumps(np.asarray(matrix).tolist()).encode()).hexdigest()[:16]
