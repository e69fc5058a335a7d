"""Fat-shattering search, packing/covering numbers, Rademacher estimates and sample-size bounds."""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Sequence

import numpy as np

from . import kernels
from .calculus import ApproxJmElement, DomainSpec, _DistanceOracle, tv_cover
from .data import DataDistribution
from .learners import denoised_risks
from .quantum import DensityMatrix, born_distribution, born_probabilities
from .rng import as_generator
from .tolerances import TOL
from .zoo import HypothesisClass, JointlyMeasurable


class SearchTooLarge(ValueError):
    pass


# ---------------------------------------------------------------------------
# fat-shattering


@dataclasses.dataclass
class FatShatterCertificate:
    """Points, witnesses and one realizing member per above/below pattern.

    Bit i of a pattern index set means "above" at point i.
    """

    gamma: float
    point_indices: list
    points: list
    witnesses: list
    realizers: list

    @property
    def dimension(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "point_indices": list(map(int, self.point_indices)),
            "points": [p.to_json() for p in self.points],
            "witnesses": list(map(float, self.witnesses)),
            "realizers": list(map(int, self.realizers)),
        }


def witness_grid(gamma: float, resolution: float | None = None) -> np.ndarray:
    """Witness candidates in ``[gamma, 1 - gamma]``, spaced ``resolution`` apart around 1/2.

    Ordered by distance from 1/2 (lower value first on ties), so searches try
    the central witness first.
    """
    res = gamma / 2 if resolution is None else resolution
    if res <= 0:
        raise ValueError("resolution must be positive")
    k = int(math.floor((0.5 - gamma) / res + 1e-9))
    if k < 0:
        return np.empty(0)
    offsets = np.arange(k + 1) * res
    vals = [0.5]
    for o in offsets[1:]:
        vals += [0.5 - o, 0.5 + o]
    return np.array(vals)


def fat_dim(cls: HypothesisClass, candidate_points: Sequence[DensityMatrix], gamma: float,
            resolution: float | None = None, max_points: int = 12, max_members: int = 1 << 16):
    """Largest subset of the candidates that the class gamma-fat-shatters.

    Exhaustive over subsets (largest first) and over the witness grid. The
    result is exact relative to the candidates and grid, hence a lower bound
    on the class's fat-shattering dimension. Returns ``(dimension, certificate)``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    pts = list(candidate_points)
    if len(pts) > max_points:
        raise SearchTooLarge(f"{len(pts)} candidate points exceeds the cap of {max_points}")
    if len(cls) > max_members:
        raise SearchTooLarge(f"{len(cls)} members exceeds the cap of {max_members}")
    grid = witness_grid(gamma, resolution)
    empty = FatShatterCertificate(gamma, [], [], [], [0])
    if not pts or grid.size == 0:
        return 0, empty
    F = cls.one_probabilities(pts)
    F, first = np.unique(F, axis=0, return_index=True)
    order = np.argsort(first)
    F, first = F[order], first[order]
    top = min(len(pts), int(math.floor(math.log2(len(F)))))
    tol = TOL.dtv
    for s in range(top, 0, -1):
        for subset in itertools.combinations(range(len(pts)), s):
            sub = F[:, subset]
            if s > 1 and len(np.unique(sub.T, axis=0)) < s:
                continue
            found, choice, realizers = kernels.shatter_search(sub, grid, gamma, tol)
            if found:
                return s, FatShatterCertificate(
                    gamma, list(subset), [pts[i] for i in subset], grid[choice].tolist(), first[realizers].tolist()
                )
    return 0, empty


def validate_certificate(cls: HypothesisClass, cert: FatShatterCertificate, tol: float | None = None) -> bool:
    """Re-check every pattern by direct Born-rule evaluation of the named member."""
    tol = TOL.dtv if tol is None else tol
    k = cert.dimension
    if len(cert.realizers) != 2**k or len(cert.witnesses) != k:
        return False
    for b, idx in enumerate(cert.realizers):
        if not 0 <= idx < len(cls):
            return False
        h = cls.member(idx)
        for i, (x, r) in enumerate(zip(cert.points, cert.witnesses)):
            f = born_distribution(h, x)[1]
            if (b >> i) & 1:
                if f < r + cert.gamma - tol:
                    return False
            elif f > r - cert.gamma + tol:
                return False
    return True


# ---------------------------------------------------------------------------
# packing and covering


def _max_clique(adj: list[int], n: int) -> list[int]:
    """Maximum clique by branch and bound with a greedy-colouring bound (bitset graph)."""
    best: list[int] = []

    def colour_order(p: int):
        verts, bounds = [], []
        colour = 0
        while p:
            colour += 1
            q = p
            while q:
                v = (q & -q).bit_length() - 1
                q &= ~(1 << v) & ~adj[v]
                p &= ~(1 << v)
                verts.append(v)
                bounds.append(colour)
        return verts, bounds

    def expand(r: list[int], p: int):
        nonlocal best
        verts, bounds = colour_order(p)
        for v, b in zip(reversed(verts), reversed(bounds)):
            if len(r) + b <= len(best):
                return
            nr = r + [v]
            np_ = p & adj[v]
            if np_:
                expand(nr, np_)
            elif len(nr) > len(best):
                best = nr
            p &= ~(1 << v)

    expand([], (1 << n) - 1)
    return sorted(best)


EXACT_PACKING_MAX = 128


def packing_set(povms, gamma: float, domain: DomainSpec, exact: bool | None = None) -> list[int]:
    """Indices of a subset whose members are pairwise more than ``gamma`` apart.

    Greedy in list order by default; ``exact`` (the default for at most
    ``EXACT_PACKING_MAX`` members) returns a maximum such subset.
    """
    if len(povms) == 0:
        raise ValueError("empty class")
    exact = len(povms) <= EXACT_PACKING_MAX if exact is None else exact
    oracle = _DistanceOracle(povms, domain)
    if exact:
        if len(povms) > EXACT_PACKING_MAX:
            raise SearchTooLarge("exact packing is capped")
        sep = oracle.matrix() > gamma + TOL.dtv
        adj = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in sep]
        return _max_clique(adj, len(povms))
    chosen = [0]
    nearest = oracle.row(0)
    for i in range(1, len(povms)):
        if nearest[i] > gamma + TOL.dtv:
            chosen.append(i)
            nearest = np.minimum(nearest, oracle.row(i))
    return chosen


def packing_number(povms, gamma: float, domain: DomainSpec, exact: bool | None = None) -> int:
    """Size of a gamma-separated subset: exact maximum or a greedy lower bound."""
    return len(packing_set(povms, gamma, domain, exact))


@dataclasses.dataclass
class JmCoveringBound:
    tv_bound: int
    structural: int | None
    centers: list

    @property
    def value(self) -> int:
        return self.tv_bound if self.structural is None else min(self.tv_bound, self.structural)


def jm_covering_bound(cls_or_povms, gamma: float, domain: DomainSpec | None = None) -> JmCoveringBound:
    """Upper bound on the gamma-JM covering number by the size of a d_TV cover.

    A class that carries a shared root is exactly jointly measurable, and its
    structural value 1 is reported alongside.
    """
    if isinstance(cls_or_povms, HypothesisClass):
        povms = cls_or_povms.members()
        domain = cls_or_povms.domain if domain is None else domain
        structural = 1 if isinstance(cls_or_povms, JointlyMeasurable) else None
    else:
        povms, structural = list(cls_or_povms), None
    centers = tv_cover(povms, gamma, domain)
    return JmCoveringBound(len(centers), structural, centers)


# ---------------------------------------------------------------------------
# Rademacher complexity


def _outcome_label_law(element: ApproxJmElement, d: DataDistribution) -> np.ndarray:
    """``law[z, y]`` = P(center outcome z, label y)."""
    pz = born_probabilities(element.center, d.state_array())
    return np.einsum("az,ay->zy", pz, d.joint_table())


def _zeta(element: ApproxJmElement, z, y) -> np.ndarray:
    """Conditional expected loss per member and sample, shape ``(..., n_members, m)``."""
    return element.channels[:, z, 1 - y]


def rademacher_mc(element: ApproxJmElement, d: DataDistribution, m: int, trials: int, rng=None):
    """Monte-Carlo Rademacher complexity of a jointly measurable element.

    Returns ``(estimate, standard_error)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if element.gamma != 0:
        raise ValueError("the definition needs an exactly jointly measurable element")
    rng = as_generator(rng)
    law = _outcome_label_law(element, d).ravel()
    vals = np.empty(trials)
    for t in range(trials):
        zy = kernels.sample_outcomes(np.broadcast_to(law, (m, law.size)), rng.random(m))
        z, y = zy // 2, zy % 2
        sigma = rng.choice([-1.0, 1.0], size=m)
        vals[t] = np.max(_zeta(element, z, y) @ sigma) / m
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")


def rademacher_exact(element: ApproxJmElement, d: DataDistribution, m: int) -> float:
    """Exact Rademacher complexity by enumerating outcome/label patterns and signs (small m)."""
    law = _outcome_label_law(element, d).ravel()
    cells = np.flatnonzero(law > 0)
    if len(cells) ** m * 2**m > 1 << 22:
        raise SearchTooLarge("enumeration too large")
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=m)))
    total = 0.0
    for pattern in itertools.product(cells, repeat=m):
        pattern = np.array(pattern)
        w = np.prod(law[pattern])
        zeta = _zeta(element, pattern // 2, pattern % 2)
        total += w * np.mean(np.max(zeta @ signs.T, axis=0)) / m
    return float(total)


# ---------------------------------------------------------------------------
# generalization gap


def smoothed_true_risks(element: ApproxJmElement, d: DataDistribution) -> np.ndarray:
    """Exact risk of every member's channel applied over the element's center."""
    p1 = element.smoothed_one_probabilities(d.state_array())
    q = d.conditionals
    return (p1 * (1 - q) + (1 - p1) * q) @ d.probs


def generalization_gap(element: ApproxJmElement, z, y, d: DataDistribution) -> float:
    """``sup_h (DER(h, S) - R(smoothed h))`` for center outcomes ``z`` and labels ``y``."""
    return float(np.max(denoised_risks(element, z, y) - smoothed_true_risks(element, d)))


# ---------------------------------------------------------------------------
# closed-form bounds (natural logarithms throughout)


@dataclasses.dataclass
class BoundReport:
    name: str
    inputs: dict
    value: float
    log_value: float
    formula: str
    overflow: bool = False

    CSV_HEADER = ("name", "inputs", "value", "log_value", "citation")

    def csv_row(self) -> list:
        inputs = ";".join(f"{k}={v}" for k, v in self.inputs.items())
        value = "inf(overflow)" if self.overflow else repr(float(self.value))
        return [self.name, inputs, value, repr(float(self.log_value)), self.formula]

    def to_json(self) -> dict:
        return {"name": self.name, "inputs": self.inputs,
                "value": None if self.overflow else float(self.value),
                "log_value": float(self.log_value), "formula": self.formula, "overflow": self.overflow}


def _report(name, inputs, log_value, formula) -> BoundReport:
    overflow = log_value > math.log(np.finfo(float).max)
    value = math.inf if overflow else math.exp(log_value)
    return BoundReport(name, inputs, value, log_value, formula, overflow)


def _check_eps_delta(epsilon, delta):
    if not (0 < epsilon <= 1 and 0 < delta < 1):
        raise ValueError("need epsilon in (0, 1] and delta in (0, 1)")


def bound_finite_class(sizes: Sequence[int], epsilon: float, delta: float) -> BoundReport:
    """Sample size for learning over a partition with element sizes ``sizes``.

    ``sum_r (8 / eps^2) ln(2 R |P_r| / delta)`` with R the number of elements.
    """
    _check_eps_delta(epsilon, delta)
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("element sizes must be positive")
    r = len(sizes)
    value = sum(8 / epsilon**2 * math.log(2 * r * s / delta) for s in sizes)
    return BoundReport("finite_class", {"sizes": sizes, "epsilon": epsilon, "delta": delta},
                       value, math.log(value), "sum_r 8/eps^2 * ln(2*R*|P_r|/delta)")


def bound_derm(n_elements: int, fat_dim: float, epsilon: float, delta: float, c: float = 64.0) -> BoundReport:
    """``c * R * (d + ln(1/delta)) / eps^2``; the constant ``c`` is not normative."""
    _check_eps_delta(epsilon, delta)
    if n_elements < 1 or fat_dim < 0 or c <= 0:
        raise ValueError("need R >= 1, d >= 0 and c > 0")
    value = c * n_elements * (fat_dim + math.log(1 / delta)) / epsilon**2
    return BoundReport("derm", {"R": n_elements, "d": fat_dim, "epsilon": epsilon, "delta": delta, "c": c},
                       value, math.log(value), "c*R*(d + ln(1/delta))/eps^2")


def covering_exponent(alpha: float, d: float, m: int) -> int:
    x = d * math.log(2 * math.e * m / (d * alpha))
    # guard against ceil(1.0000000000000002)
    return math.ceil(x - 1e-9)


def bound_covering_from_fat(alpha: float, d: float, m: int) -> BoundReport:
    """``2 (m (2/alpha + 1)^2)^ceil(d ln(2 e m / (d alpha)))``, evaluated in log space."""
    if alpha <= 0 or d < 1 or m < 1:
        raise ValueError("need alpha > 0, d >= 1 and m >= 1")
    e = covering_exponent(alpha, d, m)
    base = m * (2 / alpha + 1) ** 2
    report = _report("covering_from_fat", {"alpha": alpha, "d": d, "m": m, "exponent": e},
                     math.log(2) + e * math.log(base), "2*(m*(2/alpha+1)^2)^ceil(d*ln(2*e*m/(d*alpha)))")
    if not report.overflow:
        # direct power is exact for integer bases where exp(log) is not
        report.value = 2 * base**e
    return report


def check_jm_fat_inequality(k: int, d: float, m: int, gamma: float) -> bool:
    """Whether ``k <= 2 (m (2/gamma + 1)^2)^ceil(d ln(2 e m / (d gamma)))``.

    ``k`` is a JM covering lower bound at ``gamma``, ``d`` a fat-shattering
    dimension at ``gamma / 4`` and ``m >= k (k - 1) / 2``. A measured ``d`` of
    0 is raised to 1, which only makes the right-hand side smaller.
    """
    if k < 1 or m < k * (k - 1) // 2 or m < 1:
        raise ValueError("need k >= 1 and m >= k(k-1)/2")
    rhs = bound_covering_from_fat(min(gamma, 1.0), max(d, 1), m)
    return math.log(k) <= rhs.log_value + 1e-12


def bound_variational_circuit(d: float, epsilon: float, delta: float, C: float) -> BoundReport:
    """``(C / eps)^(d + 2) ln(1/delta)`` for a circuit family on dimension ``d``."""
    _check_eps_delta(epsilon, delta)
    if C <= 0 or d < 0:
        raise ValueError("need C > 0 and d >= 0")
    log_value = (d + 2) * math.log(C / epsilon) + math.log(math.log(1 / delta))
    return _report("variational_circuit", {"d": d, "epsilon": epsilon, "delta": delta, "C": C}, log_value,
                   "(C/eps)^(d+2)*ln(1/delta)")
