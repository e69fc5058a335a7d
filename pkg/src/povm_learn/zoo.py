"""Hypothesis classes: finite lists, jointly measurable families, partitions and grids."""

from __future__ import annotations

import functools
import json
from typing import Callable, Sequence

import numpy as np

from .calculus import (
    AllStates,
    ApproxJmElement,
    ChannelError,
    ClassicalChannel,
    DomainSpec,
    FineGraining,
    FiniteSet,
)
from .quantum import DensityMatrix, DimensionMismatch, Povm, QuantumError, matrix_from_json
from .tolerances import TOL


class ClassSpecError(ValueError):
    pass


def _states_array(states) -> np.ndarray:
    if isinstance(states, FiniteSet):
        return states.stack()
    if isinstance(states, DensityMatrix):
        return states.op[None]
    if len(states) and isinstance(states[0], DensityMatrix):
        return np.stack([s.op for s in states])
    return np.asarray(states)


class HypothesisClass:
    """Common interface: ``len``, ``member(i)`` and ``one_probabilities(states)``."""

    variant = "abstract"
    domain: DomainSpec

    def __len__(self) -> int:
        raise NotImplementedError

    def member(self, i: int) -> Povm:
        raise NotImplementedError

    def members(self) -> list:
        return [self.member(i) for i in range(len(self))]

    @property
    def dim(self) -> int:
        return self.domain.dim

    def one_probabilities(self, states) -> np.ndarray:
        """P[outcome 1] for every member on every state, shape ``(len, n_states)``."""
        x = _states_array(states)
        e1 = np.stack([self.member(i).effects[1] for i in range(len(self))])
        return np.clip(np.einsum("sij,mji->ms", x, e1).real, 0.0, 1.0)

    @property
    def jointly_measurable(self) -> bool:
        return False


class Finite(HypothesisClass):
    variant = "finite"

    def __init__(self, povms: Sequence[Povm], domain: DomainSpec | None = None):
        if not povms:
            raise ClassSpecError("empty class")
        self.povms = list(povms)
        self.domain = AllStates(self.povms[0].dim) if domain is None else domain
        if any(p.dim != self.domain.dim for p in self.povms):
            raise DimensionMismatch("members and domain differ in dimension")

    def __len__(self):
        return len(self.povms)

    def member(self, i):
        return self.povms[i]


class JointlyMeasurable(HypothesisClass):
    """Members share one root; member i post-processes its outcome with ``channels[i]``."""

    variant = "jointly_measurable"

    def __init__(self, root: Povm, channels, domain: DomainSpec | None = None, members=None):
        self.root = root
        self.channels = np.asarray(channels, dtype=float)
        if self.channels.ndim != 3 or self.channels.shape[1] != root.n_outcomes:
            raise ChannelError("channels must have shape (n_members, root outcomes, 2)")
        if np.max(np.abs(self.channels.sum(axis=2) - 1)) > TOL.prob or self.channels.min() < -TOL.prob:
            raise ChannelError("channel rows must be probability vectors")
        self.domain = AllStates(root.dim) if domain is None else domain
        self.element = ApproxJmElement.jointly_measurable(root, self.channels, self.domain, members)

    def __len__(self):
        return len(self.channels)

    def member(self, i):
        return self.element.member(i)

    def fine_graining(self, i) -> FineGraining:
        return FineGraining(self.root, ClassicalChannel(self.channels[i]))

    @property
    def channel_table(self) -> np.ndarray:
        """P[answer 1 | root outcome z] per member, shape ``(n_members, k_root)``."""
        return self.channels[:, :, 1]

    def one_probabilities(self, states) -> np.ndarray:
        return self.element.one_probabilities(_states_array(states))

    @property
    def jointly_measurable(self) -> bool:
        return True


class ApproxJmPartitioned(HypothesisClass):
    """Disjoint union of approximately jointly measurable elements.

    Members are numbered element by element; ``assignment[i]`` is
    ``(element index, index within element)``.
    """

    variant = "approx_jm_partitioned"

    def __init__(self, elements: Sequence[ApproxJmElement], domain: DomainSpec | None = None):
        if not elements:
            raise ClassSpecError("a partition needs at least one element")
        self.elements = list(elements)
        if any(len(e) == 0 for e in self.elements):
            raise ClassSpecError("partition elements must be non-empty")
        self.domain = self.elements[0].domain if domain is None else domain
        sizes = np.array([len(e) for e in self.elements])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.assignment = np.stack(
            [np.repeat(np.arange(len(sizes)), sizes), np.concatenate([np.arange(s) for s in sizes])], axis=1
        )

    def __len__(self):
        return int(self.offsets[-1])

    def locate(self, i: int) -> tuple[int, int]:
        j, local = self.assignment[i]
        return int(j), int(local)

    def global_index(self, element: int, local: int) -> int:
        return int(self.offsets[element] + local)

    def member(self, i):
        j, local = self.locate(i)
        return self.elements[j].member(local)

    def one_probabilities(self, states) -> np.ndarray:
        x = _states_array(states)
        return np.concatenate([e.one_probabilities(x) for e in self.elements])

    @classmethod
    def from_jointly_measurable(cls, jm: JointlyMeasurable, groups: Sequence[Sequence[int]]):
        """Split a jointly measurable class into exact (gamma = 0) elements."""
        flat = np.sort(np.concatenate([np.asarray(g, dtype=np.int64) for g in groups]))
        if not np.array_equal(flat, np.arange(len(jm))):
            raise ClassSpecError("groups must partition the member indices")
        elements = [ApproxJmElement.jointly_measurable(jm.root, jm.channels[np.asarray(g)], jm.domain) for g in groups]
        return cls(elements, jm.domain)

    @classmethod
    def singletons(cls, povms: Sequence[Povm], domain: DomainSpec | None = None):
        """Every member its own element, realized by the identity channel over itself."""
        elements = [
            ApproxJmElement.jointly_measurable(p, np.eye(p.n_outcomes)[None], domain or AllStates(p.dim))
            for p in povms
        ]
        return cls(elements, domain)


class Parameterized(HypothesisClass):
    """Members generated lazily from an explicit parameter grid."""

    variant = "parameterized"

    def __init__(self, grid: Sequence, generator: Callable[..., Povm], domain: DomainSpec, name: str = ""):
        if len(grid) == 0:
            raise ClassSpecError("empty parameter grid")
        self.grid = list(grid)
        self.generator = generator
        self.domain = domain
        self.name = name
        self._cache: dict[int, Povm] = {}

    def __len__(self):
        return len(self.grid)

    def member(self, i):
        if i not in self._cache:
            p = self.generator(self.grid[i])
            if p.dim != self.domain.dim:
                raise DimensionMismatch("generator output has the wrong dimension")
            self._cache[i] = p
        return self._cache[i]


# ---------------------------------------------------------------------------
# classical-input classes


class PoccClass:
    """Probabilistic concepts over a finite classical domain.

    ``probs[i, x]`` is member i's probability of answering 1 on point x.
    """

    def __init__(self, points: Sequence, probs, names: Sequence[str] | None = None):
        self.points = list(points)
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.ndim != 2 or self.probs.shape[1] != len(self.points):
            raise ClassSpecError("probs must have shape (n_members, n_points)")
        if self.probs.min() < 0 or self.probs.max() > 1:
            raise ClassSpecError("member parameters must lie in [0, 1]")
        self.names = list(names) if names is not None else [str(i) for i in range(len(self.probs))]

    def __len__(self):
        return len(self.probs)

    def risk(self, joint) -> np.ndarray:
        """Exact risk of every member under ``joint[x, y]``."""
        joint = np.asarray(joint, dtype=float)
        return self.probs @ joint[:, 0] + (1 - self.probs) @ joint[:, 1]


ERM_POINTS = [(0, 0), (0, 1), (1, 0), (1, 1)]


def make_erm_counterexample(z_grid, alpha: float = 0.05) -> tuple[PoccClass, PoccClass]:
    """Binary symmetric channels on the first bit, plus one weakly informative member.

    Members of the first class read bit ``x1`` through a binary symmetric
    channel with crossover ``0.1 + z``. The second class appends ``h_*``,
    which answers ``x2`` with probability 0.01 and a fair coin otherwise; it
    is the last member.
    """
    z = np.asarray(z_grid, dtype=float)
    if not 0 < alpha < 0.1:
        raise ClassSpecError("alpha must lie in (0, 0.1) so crossovers stay in (0, 1)")
    if z.size == 0 or np.any(np.abs(z) > alpha + 1e-15):
        raise ClassSpecError("z grid must be non-empty and inside [-alpha, alpha]")
    c = 0.1 + z
    x1 = np.array([p[0] for p in ERM_POINTS])
    x2 = np.array([p[1] for p in ERM_POINTS])
    hat = np.where(x1[None, :] == 1, 1 - c[:, None], c[:, None])
    star = 0.99 * 0.5 + 0.01 * x2
    names = [f"bsc[{zi:.6g}]" for zi in z]
    return PoccClass(ERM_POINTS, hat, names), PoccClass(ERM_POINTS, np.vstack([hat, star]), names + ["h_star"])


def make_noisy_function_class(noise_levels=(0.0, 0.1, 0.3)) -> PoccClass:
    """Every Boolean function of two bits, flipped with each listed probability."""
    rows, names = [], []
    for eta in noise_levels:
        for f in range(16):
            bits = (f >> np.arange(4)) & 1
            rows.append(np.where(bits == 1, 1 - eta, eta))
            names.append(f"f{f}@{eta:g}")
    return PoccClass(ERM_POINTS, np.array(rows, dtype=float), names)


def pocc_to_povm(pocc: PoccClass) -> JointlyMeasurable:
    """Embed a classical class: measure in the computational basis, then apply ``h[x]``."""
    d = len(pocc.points)
    channels = np.stack([1 - pocc.probs, pocc.probs], axis=2)
    return JointlyMeasurable(Povm.computational_basis(d), channels, AllStates(d))


def embedded_erm_partition(pocc_full: PoccClass) -> ApproxJmPartitioned:
    """Two-element exact partition of the embedded class: the channel family and ``h_*``."""
    jm = pocc_to_povm(pocc_full)
    n = len(pocc_full)
    return ApproxJmPartitioned.from_jointly_measurable(jm, [np.arange(n - 1), [n - 1]])


# ---------------------------------------------------------------------------
# quantum classes


def _bits(b: int, n: int) -> np.ndarray:
    return (b >> np.arange(n)) & 1


def make_diagonal_shattering_class(n: int, betas, basis=None) -> Parameterized:
    """All ``2**n`` diagonal POVMs with outcome-0 eigenvalue ``beta_j`` or ``1 - beta_j``.

    Member ``b`` (an integer, bit j is ``b_j``) has outcome-0 eigenvalue
    ``beta_j`` on basis vector j when ``b_j = 0`` and ``1 - beta_j`` otherwise.
    The domain is the finite set of basis states.
    """
    if not 1 <= n <= 16:
        raise ClassSpecError("n must lie in [1, 16]")
    betas = np.broadcast_to(np.asarray(betas, dtype=float), (n,)).copy()
    if np.any(betas <= 0.5) or np.any(betas >= 1):
        raise ClassSpecError("every beta must lie in (1/2, 1)")
    v = np.eye(n, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    proj = np.einsum("ij,kj->jik", v, v.conj())
    domain = FiniteSet([DensityMatrix(p) for p in proj])

    def gen(b):
        bits = _bits(b, n)
        eig = np.where(bits == 0, betas, 1 - betas)
        return Povm.binary(np.einsum("j,jik->ik", eig, proj))

    cls = Parameterized(list(range(2**n)), gen, domain, name="diagonal_shattering")
    cls.betas = betas
    return cls


def make_scalar_family(ts) -> Finite:
    """Trivial measurements with outcome-0 effect ``t * I`` on a qubit."""
    return Finite([Povm.binary(np.eye(2) * t) for t in ts], AllStates(2))


def make_planted_class(ts, planted: float = 0.9) -> Finite:
    """A qubit class with one informative member ``diag(planted, 1 - planted)`` first."""
    return Finite([Povm.binary(np.diag([planted, 1 - planted]))] + make_scalar_family(ts).povms, AllStates(2))


def unitarity_error(u) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))


def conjugate_povm(povm: Povm, u) -> Povm:
    """Effects ``U^dag Pi_j U``: apply ``U`` to the state, then measure ``povm``."""
    u = np.asarray(u, dtype=complex)
    if unitarity_error(u) > TOL.unitary:
        raise QuantumError("circuit is not unitary")
    return Povm(np.einsum("ji,kjl,lm->kim", u.conj(), povm.effects, u))


_CZ_CACHE: dict[int, np.ndarray] = {}


def _cz_chain(n_qubits: int) -> np.ndarray:
    if n_qubits not in _CZ_CACHE:
        idx = np.arange(2**n_qubits)
        bits = (idx[:, None] >> np.arange(n_qubits)[::-1]) & 1
        phase = np.ones(len(idx))
        for q in range(n_qubits - 1):
            phase *= np.where(bits[:, q] & bits[:, q + 1], -1.0, 1.0)
        _CZ_CACHE[n_qubits] = np.diag(phase).astype(complex)
    return _CZ_CACHE[n_qubits]


def _rot(theta_y: float, theta_z: float) -> np.ndarray:
    c, s = np.cos(theta_y / 2), np.sin(theta_y / 2)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    rz = np.diag([np.exp(-0.5j * theta_z), np.exp(0.5j * theta_z)])
    return rz @ ry


def ansatz_unitary(theta, n_qubits: int, layers: int) -> np.ndarray:
    """Layered circuit: each layer is ``E R(theta) E^dag`` with ``E`` a CZ chain.

    ``R`` applies ``RZ(theta[l, q, 1]) RY(theta[l, q, 0])`` to every qubit q.
    Conjugating by the entangler keeps ``theta = 0`` at the identity.
    """
    theta = np.asarray(theta, dtype=float).reshape(layers, n_qubits, 2)
    e = _cz_chain(n_qubits)
    u = np.eye(2**n_qubits, dtype=complex)
    for layer in theta:
        r = functools.reduce(np.kron, [_rot(*q) for q in layer])
        u = e @ r @ e.conj().T @ u
    return u


def make_qnn_class(dim: int, layers: int, param_grid, fixed_measurement: Povm,
                   domain: DomainSpec | None = None) -> Parameterized:
    n_qubits = int(round(np.log2(dim)))
    if 2**n_qubits != dim:
        raise ClassSpecError("dim must be a power of two")
    if fixed_measurement.dim != dim:
        raise DimensionMismatch("fixed measurement has the wrong dimension")
    grid = [np.asarray(t, dtype=float).reshape(layers, n_qubits, 2) for t in param_grid]

    def gen(theta):
        return conjugate_povm(fixed_measurement, ansatz_unitary(theta, n_qubits, layers))

    cls = Parameterized(grid, gen, AllStates(dim) if domain is None else domain, name="qnn")
    cls.unitary = lambda i: ansatz_unitary(grid[i], n_qubits, layers)
    return cls


# ---------------------------------------------------------------------------
# class description files


def _domain_from_json(obj, dim: int) -> DomainSpec:
    if obj is None or obj.get("type", "all_states") == "all_states":
        return AllStates(dim)
    if obj["type"] == "basis":
        return FiniteSet([DensityMatrix.basis(dim, i) for i in range(dim)])
    if obj["type"] == "finite":
        return FiniteSet([DensityMatrix.from_json(s) for s in obj["states"]])
    raise ClassSpecError(f"unknown domain type {obj['type']!r}")


def class_from_json(obj: dict) -> HypothesisClass:
    """Build a class from its description.

    Either ``"effects"`` lists each member's outcome-0 effect matrix, or
    ``"generator"`` names a built-in family with its parameters
    (``scalar_family``, ``planted``, ``diagonal_shattering``, ``qnn``,
    ``erm_counterexample``, ``noisy_functions``).
    """
    try:
        variant = obj["variant"]
        dim = int(obj["dim"])
        if "effects" in obj:
            povms = [Povm.binary(matrix_from_json(e)) for e in obj["effects"]]
            domain = _domain_from_json(obj.get("domain"), dim)
            return Finite(povms, domain)
        gen = obj["generator"]
        name = gen["name"]
        if name == "scalar_family":
            cls = make_scalar_family(gen["grid"])
        elif name == "planted":
            cls = make_planted_class(gen["grid"], gen.get("planted", 0.9))
        elif name == "diagonal_shattering":
            cls = make_diagonal_shattering_class(int(gen["n"]), gen["betas"])
        elif name == "qnn":
            fixed = Povm.binary(matrix_from_json(gen["fixed_effect0"])) if "fixed_effect0" in gen else (
                Povm.binary(np.diag(np.eye(dim)[0]))
            )
            cls = make_qnn_class(dim, int(gen["layers"]), gen["grid"], fixed, _domain_from_json(obj.get("domain"), dim))
        elif name == "noisy_functions":
            pocc = make_noisy_function_class(gen.get("noise_levels", (0.0, 0.1, 0.3)))
            cls = pocc_to_povm(pocc)
            if variant == "approx_jm_partitioned":
                cls = ApproxJmPartitioned.from_jointly_measurable(cls, [np.arange(len(pocc))])
        elif name == "erm_counterexample":
            alpha = float(gen.get("alpha", 0.05))
            z = np.linspace(-alpha, alpha, int(gen["n_z"]))
            _, full = make_erm_counterexample(z, alpha)
            cls = embedded_erm_partition(full) if variant == "approx_jm_partitioned" else pocc_to_povm(full)
        else:
            raise ClassSpecError(f"unknown generator {name!r}")
    except (KeyError, TypeError) as exc:
        raise ClassSpecError(f"malformed class description: {exc}") from exc
    if cls.dim != dim:
        raise ClassSpecError(f"declared dim {dim} does not match generated dim {cls.dim}")
    return cls


def load_class(path) -> HypothesisClass:
    with open(path) as fh:
        return class_from_json(json.load(fh))
