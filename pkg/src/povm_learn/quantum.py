"""Finite-dimensional states, measurements and Born-rule sampling.

States and POVMs are immutable values backed by read-only numpy arrays.
Quantum registers live in a :class:`RegisterBank` so that whole datasets can
be measured in one vectorized call; a :class:`QuantumRegister` is a view on a
single slot of a bank.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json

import numpy as np

from . import kernels
from .rng import as_generator
from .tolerances import TOL

MAX_DIM = 256


class QuantumError(ValueError):
    """Invalid quantum object or operation."""


class DimensionMismatch(QuantumError):
    pass


class RegisterError(RuntimeError):
    """Illegal access to a quantum register."""


# ---------------------------------------------------------------------------
# matrices


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise QuantumError("expected a square matrix")
    return {"dim": int(m.shape[0]), "re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    n = int(obj["dim"])
    re, im = obj["re"], obj.get("im", [0.0] * (n * n))
    if len(re) != n * n or len(im) != n * n:
        raise QuantumError(f"matrix of dim {n} needs {n * n} entries")
    return (np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)).reshape(n, n)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermiticity_error(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), initial=0.0))


def spectral_decompose(m, check: bool = True):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Orthonormal eigenvectors as columns.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise QuantumError("expected a square matrix")
    if check and hermiticity_error(m) > TOL.herm:
        raise QuantumError("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if check:
        err = np.max(np.abs((v * w) @ v.conj().T - m), initial=0.0)
        if err > TOL.eig:
            raise QuantumError(f"eigendecomposition reconstruction error {err:.3g}")
    return w, v


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a PSD matrix (negative rounding noise clipped)."""
    w, v = spectral_decompose(m, check=False)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _check_square(op, what):
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise QuantumError(f"{what} must be a square matrix, got shape {op.shape}")
    if not 1 <= op.shape[0] <= MAX_DIM:
        raise QuantumError(f"{what} dimension must be in [1, {MAX_DIM}]")


def _check_psd(op, what):
    if hermiticity_error(op) > TOL.herm:
        raise QuantumError(f"{what} is not Hermitian")
    lo = np.linalg.eigvalsh(0.5 * (op + op.conj().T))[0]
    if lo < -TOL.psd:
        raise QuantumError(f"{what} is not positive semidefinite (min eigenvalue {lo:.3g})")


# ---------------------------------------------------------------------------
# states and measurements


@dataclasses.dataclass(frozen=True, eq=False)
class DensityMatrix:
    op: np.ndarray

    def __post_init__(self):
        op = _frozen(self.op)
        _check_square(op, "density matrix")
        _check_psd(op, "density matrix")
        tr = np.trace(op)
        if abs(tr - 1.0) > TOL.trace:
            raise QuantumError(f"density matrix trace {tr.real:.12g} != 1")
        object.__setattr__(self, "op", op)

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    @classmethod
    def pure(cls, vec) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis(cls, dim: int, index: int) -> "DensityMatrix":
        op = np.zeros((dim, dim), dtype=complex)
        op[index, index] = 1.0
        return cls(op)

    @classmethod
    def diag(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=complex)))

    def to_json(self) -> dict:
        return matrix_to_json(self.op)

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        return cls(matrix_from_json(obj))

    def __eq__(self, other):
        return isinstance(other, DensityMatrix) and np.array_equal(self.op, other.op)

    def __hash__(self):
        return hash(self.op.tobytes())


@dataclasses.dataclass(frozen=True, eq=False)
class Povm:
    """A measurement: PSD effects summing to the identity.

    ``effects`` has shape ``(k, d, d)``; outcome ``j`` corresponds to
    ``effects[j]``.
    """

    effects: np.ndarray

    def __post_init__(self):
        eff = _frozen(self.effects)
        if eff.ndim != 3 or eff.shape[0] < 1:
            raise QuantumError("effects must have shape (k, d, d)")
        for j, e in enumerate(eff):
            _check_square(e, f"effect {j}")
            _check_psd(e, f"effect {j}")
        total = eff.sum(axis=0)
        err = np.max(np.abs(total - np.eye(eff.shape[1])))
        if err > TOL.sum:
            raise QuantumError(f"effects do not sum to the identity (max error {err:.3g})")
        object.__setattr__(self, "effects", eff)

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    @functools.cached_property
    def kraus(self) -> np.ndarray:
        """Principal square roots of the effects, one Kraus operator per outcome."""
        return np.stack([psd_sqrt(e) for e in self.effects])

    @classmethod
    def binary(cls, effect0) -> "Povm":
        """Two-outcome POVM from its outcome-0 effect."""
        e0 = np.asarray(effect0, dtype=complex)
        return cls(np.stack([e0, np.eye(e0.shape[0]) - e0]))

    @classmethod
    def computational_basis(cls, dim: int) -> "Povm":
        eff = np.zeros((dim, dim, dim), dtype=complex)
        eff[np.arange(dim), np.arange(dim), np.arange(dim)] = 1.0
        return cls(eff)

    @classmethod
    def projective(cls, vectors) -> "Povm":
        """Rank-one projective measurement onto the given orthonormal vectors."""
        vs = np.asarray(vectors, dtype=complex)
        return cls(np.einsum("ki,kj->kij", vs, vs.conj()))

    def is_deterministic(self, tol: float | None = None) -> bool:
        tol = TOL.sum if tol is None else tol
        return any(np.max(np.abs(e)) <= tol for e in self.effects)

    def to_json(self) -> dict:
        return {"effects": [matrix_to_json(e) for e in self.effects]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        return cls(np.stack([matrix_from_json(e) for e in obj["effects"]]))

    @functools.cached_property
    def content_hash(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, Povm) and np.array_equal(self.effects, other.effects)

    def __hash__(self):
        return hash(self.effects.tobytes())


def _check_prob_rows(p: np.ndarray) -> np.ndarray:
    if p.size and (p.min() < -TOL.prob or p.max() > 1 + TOL.prob):
        raise QuantumError("Born probabilities outside [0, 1]")
    if p.size and np.max(np.abs(p.sum(axis=-1) - 1.0)) > TOL.prob:
        raise QuantumError("Born probabilities do not sum to 1")
    return np.clip(p, 0.0, 1.0)


def born_probabilities(povm: Povm, states) -> np.ndarray:
    """Outcome distributions for a stack of density matrices, shape ``(n, k)``."""
    states = np.asarray(states)
    if states.shape[-1] != povm.dim:
        raise DimensionMismatch(f"state dim {states.shape[-1]} != povm dim {povm.dim}")
    p = np.einsum("...ij,kji->...k", states, povm.effects).real
    return _check_prob_rows(p)


def born_distribution(povm: Povm, state: DensityMatrix) -> np.ndarray:
    """``(Tr(rho Pi_j))_j`` for one state."""
    if state.dim != povm.dim:
        raise DimensionMismatch(f"state dim {state.dim} != povm dim {povm.dim}")
    return born_probabilities(povm, state.op)


# ---------------------------------------------------------------------------
# registers


class RegisterBank:
    """Storage for many registers; states are hidden from learners.

    Registers point into a table of distinct states, so a dataset drawn from a
    few atoms costs memory per atom rather than per register. ``single_use``
    banks refuse a second measurement of any register, which is how learners
    are held to one measurement per sample.
    """

    def __init__(self, states, single_use: bool = False, state_ids=None):
        states = np.array(states, dtype=complex)
        if states.ndim == 2:
            states = states[None]
        self._table = states
        self._sid = np.arange(len(states)) if state_ids is None else np.asarray(state_ids, dtype=np.int64)
        self.single_use = single_use
        self.measurement_counts = np.zeros(len(self._sid), dtype=np.int64)
        self._destroyed = np.zeros(len(self._sid), dtype=bool)

    @classmethod
    def from_atoms(cls, atom_states, atom_index, single_use=False) -> "RegisterBank":
        return cls(atom_states, single_use=single_use, state_ids=atom_index)

    def __len__(self):
        return len(self._sid)

    @property
    def dim(self) -> int:
        return self._table.shape[-1]

    def register(self, index: int) -> "QuantumRegister":
        return QuantumRegister(self, int(index))

    def destroy(self, indices) -> None:
        self._destroyed[indices] = True

    def _check_access(self, idx):
        if np.any(self._destroyed[idx]):
            raise RegisterError("register was destroyed")
        if self.single_use and np.any(self.measurement_counts[idx] > 0):
            raise RegisterError("single-use register measured twice")

    def measure(self, indices, povm: Povm, rng, forced=None) -> np.ndarray:
        """Measure the selected registers with ``povm``; returns outcome indices.

        Each register's state is replaced by its post-measurement state
        ``M_j rho M_j^dag / Tr(Pi_j rho)`` with ``M_j`` the principal root of
        ``Pi_j``.
        """
        idx = np.arange(len(self))[indices]
        if povm.dim != self.dim:
            raise DimensionMismatch(f"register dim {self.dim} != povm dim {povm.dim}")
        self._check_access(idx)
        uniq, inv = np.unique(self._sid[idx], return_inverse=True)
        rho = self._table[uniq]
        probs_u = born_probabilities(povm, rho)
        probs = probs_u[inv]
        if forced is None:
            u = as_generator(rng).random(len(idx))
            outcomes = kernels.sample_outcomes(probs, u)
        else:
            outcomes = np.broadcast_to(np.asarray(forced, dtype=np.int64), idx.shape).copy()
            if np.any(probs[np.arange(len(idx)), outcomes] <= 0.0):
                raise QuantumError("forced outcome has probability zero")
        k = povm.n_outcomes
        pairs, pair_of = np.unique(inv * k + outcomes, return_inverse=True)
        src, out = pairs // k, pairs % k
        m = povm.kraus[out]
        post = m @ rho[src] @ np.conj(np.swapaxes(m, -1, -2))
        post = 0.5 * (post + np.conj(np.swapaxes(post, -1, -2)))
        post /= probs_u[src, out][:, None, None]
        base = len(self._table)
        self._table = np.concatenate([self._table, post])
        self._sid[idx] = base + pair_of
        self.measurement_counts[idx] += 1
        if len(self._table) > 2 * len(self._sid) + 64:
            live, self._sid = np.unique(self._sid, return_inverse=True)
            self._table = self._table[live]
        return outcomes

    def _oracle_states(self) -> np.ndarray:
        """Test-oracle access to the hidden states. Never call from a learner."""
        return self._table[self._sid]


class QuantumRegister:
    """One register: prepared in a hidden state, observable only by measurement."""

    __slots__ = ("_bank", "_index")

    def __init__(self, bank: RegisterBank, index: int):
        self._bank = bank
        self._index = index

    @classmethod
    def prepare(cls, state: DensityMatrix, single_use: bool = False) -> "QuantumRegister":
        return cls(RegisterBank(state.op, single_use=single_use), 0)

    @property
    def dim(self) -> int:
        return self._bank.dim

    @property
    def measurement_count(self) -> int:
        return int(self._bank.measurement_counts[self._index])

    @property
    def destroyed(self) -> bool:
        return bool(self._bank._destroyed[self._index])

    def destroy(self) -> None:
        self._bank.destroy(self._index)

    def _oracle_state(self) -> DensityMatrix:
        """Test-oracle access to the hidden state. Never call from a learner."""
        return DensityMatrix(self._bank._table[self._bank._sid[self._index]])


def measure_register(register: QuantumRegister, povm: Povm, rng=None, forced_outcome=None) -> int:
    """Measure one register, updating its hidden state by the Born rule."""
    out = register._bank.measure(
        [register._index], povm, rng, forced=None if forced_outcome is None else [forced_outcome]
    )
    return int(out[0])


# ---------------------------------------------------------------------------
# random objects (test and experiment helpers)


def random_unitary(dim: int, rng=None) -> np.ndarray:
    rng = as_generator(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng=None, rank: int | None = None) -> DensityMatrix:
    rng = as_generator(rng)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def random_povm(dim: int, rng=None, n_outcomes: int = 2) -> Povm:
    rng = as_generator(rng)
    if n_outcomes == 2:
        u = random_unitary(dim, rng)
        e0 = (u * rng.random(dim)) @ u.conj().T
        e0 = 0.5 * (e0 + e0.conj().T)
        return Povm.binary(e0)
    raw = []
    for _ in range(n_outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        raw.append(g @ g.conj().T)
    raw = np.stack(raw)
    w, v = np.linalg.eigh(raw.sum(axis=0))
    s = (v / np.sqrt(w)) @ v.conj().T
    eff = s @ raw @ s
    eff = 0.5 * (eff + np.conj(np.swapaxes(eff, -1, -2)))
    eff[-1] = np.eye(dim) - eff[:-1].sum(axis=0)
    return Povm(eff)
