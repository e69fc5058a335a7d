"""Reproducible experiment runs: configs, per-trial streams and result records."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import itertools
import json
import math
import os
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .calculus import AllStates, FiniteSet, dtv_povm, tv_cover
from .complexity import (
    BoundReport,
    bound_covering_from_fat,
    bound_derm,
    bound_finite_class,
    bound_variational_circuit,
    check_jm_fat_inequality,
    fat_dim,
    packing_set,
    validate_certificate,
)
from .data import DataDistribution, erm_counterexample_distribution, planted_distribution, sample_dataset, true_risks
from .learners import covering_learner, derm, erm, plugin_pocc_learner
from .quantum import DensityMatrix, Povm
from .rng import stream
from .tolerances import override_tolerances
from .zoo import (
    ApproxJmPartitioned,
    Finite,
    HypothesisClass,
    PoccClass,
    class_from_json,
    embedded_erm_partition,
    make_diagonal_shattering_class,
    make_erm_counterexample,
    make_noisy_function_class,
    make_planted_class,
    make_qnn_class,
    make_scalar_family,
    pocc_to_povm,
)


class ConfigError(ValueError):
    pass


def _sha(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def thread_count() -> int:
    env = os.environ.get("POVM_LEARN_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError("POVM_LEARN_THREADS must be an integer") from None
        return max(1, n)
    return min(4, os.cpu_count() or 1)


def _load_ref(ref, base: Path):
    if ref is None or isinstance(ref, dict):
        return ref
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


EXPERIMENTS: dict[str, Callable] = {}


@dataclasses.dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    m_schedule: list
    trials: int = 1
    class_spec: dict | None = None
    distribution_spec: dict | None = None
    params: dict = dataclasses.field(default_factory=dict)
    tolerances: dict = dataclasses.field(default_factory=dict)
    output_dir: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.experiment != "bounds_report" and not self.m_schedule:
            raise ConfigError("m_schedule must be non-empty")
        for m in self.m_schedule:
            if not (m == "bound" or (isinstance(m, int) and m >= 1)):
                raise ConfigError(f"bad schedule entry {m!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")

    @classmethod
    def from_json(cls, obj: dict, base_dir=".", seed: int | None = None, output_dir=None) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(base_dir)
        known = {"experiment", "seed", "m_schedule", "trials", "class", "distribution", "params", "tolerances", "out"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in obj:
            raise ConfigError("config must name an experiment")
        return cls(
            experiment=obj["experiment"],
            seed=seed if seed is not None else obj.get("seed"),
            m_schedule=list(obj.get("m_schedule", [])),
            trials=obj.get("trials", 1),
            class_spec=_load_ref(obj.get("class"), base),
            distribution_spec=_load_ref(obj.get("distribution"), base),
            params=dict(obj.get("params", {})),
            tolerances=dict(obj.get("tolerances", {})),
            output_dir=output_dir if output_dir is not None else obj.get("out"),
        )

    @classmethod
    def load(cls, path, seed: int | None = None, output_dir=None) -> "ExperimentConfig":
        path = Path(path)
        obj = _load_ref(str(path.resolve()), Path("."))
        return cls.from_json(obj, path.resolve().parent, seed, output_dir)

    def canonical(self) -> dict:
        return {
            "experiment": self.experiment, "seed": self.seed, "m_schedule": self.m_schedule,
            "trials": self.trials, "params": self.params, "tolerances": self.tolerances,
        }

    @property
    def config_hash(self) -> str:
        return _sha(self.canonical())

    @property
    def input_hash(self) -> str:
        return _sha({"class": self.class_spec, "distribution": self.distribution_spec})


@dataclasses.dataclass
class ResultRecord:
    experiment: str
    config_hash: str
    input_hash: str
    seed: int
    runs: list
    summary: list
    criteria: list
    extra: dict
    wall_time: float = 0.0
    environment: dict = dataclasses.field(default_factory=dict)

    def content(self) -> dict:
        """Everything that must reproduce bit for bit (timing and environment excluded)."""
        return _plain({
            "experiment": self.experiment, "config_hash": self.config_hash, "input_hash": self.input_hash,
            "seed": self.seed, "runs": self.runs, "summary": self.summary, "criteria": self.criteria,
            "extra": self.extra,
        })

    @property
    def record_hash(self) -> str:
        return _sha(self.content())

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.criteria)

    def to_json(self) -> dict:
        out = self.content()
        out.update(record_hash=self.record_hash, passed=self.passed, wall_time=self.wall_time,
                   environment=self.environment)
        return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _criterion(name: str, value, threshold, passed: bool) -> dict:
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed)}


def map_trials(fn: Callable[[int], dict], n: int) -> list:
    """Run ``fn(t)`` for every trial index; results come back in index order."""
    workers = min(thread_count(), n)
    if workers <= 1:
        return [fn(t) for t in range(n)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def _streams(cfg: ExperimentConfig, m, t: int, *names: str):
    return [stream(cfg.seed, f"{name}/m={m}", t) for name in names]


def _distribution(cfg: ExperimentConfig, default: Callable[[], DataDistribution]) -> DataDistribution:
    if cfg.distribution_spec is None:
        return default()
    return DataDistribution.from_json(cfg.distribution_spec)


def _quantile(x, q) -> float:
    return float(np.quantile(np.asarray(x, dtype=float), q, method="higher"))


def run(cfg: ExperimentConfig) -> ResultRecord:
    """Run the configured experiment and return its record."""
    start = time.perf_counter()
    with override_tolerances(**cfg.tolerances):
        runs, summary, criteria, extra = EXPERIMENTS[cfg.experiment](cfg)
    rec = ResultRecord(cfg.experiment, cfg.config_hash, cfg.input_hash, cfg.seed, runs, summary, criteria, extra)
    rec.wall_time = time.perf_counter() - start
    rec.environment = {"backend": kernels.BACKEND, "threads": thread_count()}
    return rec


def _register(name):
    def deco(fn):
        EXPERIMENTS[name] = fn
        return fn
    return deco


# ---------------------------------------------------------------------------
# ERM failure


def erm_zero_risk_probability(pocc: PoccClass, d: DataDistribution, m: int) -> float:
    """Exact probability that some member makes no mistake on ``m`` samples.

    Atoms must be the class's points in order, with deterministic labels.
    Members answer independently given the data, so the probability is an
    average over atom counts of ``1 - prod_h (1 - P[h correct on all])``.
    """
    q = d.conditionals
    if len(d) != len(pocc.points) or np.any((q != 0) & (q != 1)):
        raise ValueError("needs one atom per point and deterministic labels")
    correct = np.where(q[None, :] == 1, pocc.probs, 1 - pocc.probs)
    total = 0.0
    a = len(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_c = np.log(correct)
        log_p = np.log(d.probs)
        for cut in itertools.combinations(range(m + a - 1), a - 1):
            counts = np.diff(np.concatenate([[-1], cut, [m + a - 1]])) - 1
            log_w = math.lgamma(m + 1) - sum(math.lgamma(c + 1) for c in counts)
            log_w += float(np.sum(np.where(counts > 0, counts * log_p, 0.0)))
            log_all = np.where(counts[None, :] > 0, counts[None, :] * log_c, 0.0).sum(axis=1)
            none_zero = np.exp(np.sum(np.log1p(-np.exp(log_all))))
            total += math.exp(log_w) * (1 - none_zero)
    return float(total)


def _erm_classes(params):
    alpha = float(params.get("alpha", 0.05))
    n_z = int(params.get("n_z", 100_000))
    return make_erm_counterexample(np.linspace(-alpha, alpha, n_z), alpha)


@_register("erm_failure")
def _run_erm_failure(cfg: ExperimentConfig):
    p = cfg.params
    _, full = _erm_classes(p)
    jm = pocc_to_povm(full)
    d = _distribution(cfg, erm_counterexample_distribution)
    risks = full.risk(d.joint_table())
    star = len(full) - 1
    margin = float(p.get("margin", 0.004))
    runs, summary, criteria = [], [], []
    for m in cfg.m_schedule:
        def trial(t, m=m):
            ds_rng, meas_rng, ch_rng = _streams(cfg, m, t, "dataset", "measure", "channel")
            out = erm(jm, sample_dataset(d, m, ds_rng), meas_rng, channel_rng=ch_rng)
            return {"trial": t, "chosen": out.chosen, "min_empirical_risk": out.diagnostics["min_empirical_risk"],
                    "chosen_true_risk": float(risks[out.chosen])}
        res = map_trials(trial, cfg.trials)
        runs.append({"m": m, "trials": res})
        zero = np.mean([r["min_empirical_risk"] == 0 for r in res])
        pick = np.mean([r["chosen"] == star for r in res])
        gap = np.mean([r["chosen_true_risk"] - risks[star] >= margin for r in res])
        oracle = erm_zero_risk_probability(full, d, m) if m <= 40 else None
        summary.append({"m": m, "freq_zero_min_risk": zero, "freq_h_star": pick, "freq_excess_ge_margin": gap,
                        "oracle_zero_min_risk": oracle,
                        "mean_min_empirical_risk": float(np.mean([r["min_empirical_risk"] for r in res]))})
        criteria += [
            _criterion(f"m={m}: freq(min empirical risk = 0) >= 0.9", zero, 0.9, zero >= 0.9),
            _criterion(f"m={m}: min member true risk >= 0.495", float(risks.min()), 0.495,
                       risks.min() >= 0.495 - 1e-12),
            _criterion(f"m={m}: freq(ERM selects h_star) <= 0.05", pick, 0.05, pick <= 0.05),
            _criterion(f"m={m}: freq(excess over h_star >= {margin}) >= 0.9", gap, 0.9, gap >= 0.9),
        ]
    return runs, summary, criteria, {"class_size": len(full), "h_star_risk": float(risks[star])}


# ---------------------------------------------------------------------------
# DERM success


@_register("derm_success")
def _run_derm_success(cfg: ExperimentConfig):
    p = cfg.params
    variant = p.get("variant", "erm_counterexample")
    eps, delta = float(p.get("epsilon", 0.1)), float(p.get("delta", 0.1))
    d = _distribution(cfg, erm_counterexample_distribution)
    if variant == "erm_counterexample":
        _, pocc = _erm_classes(p)
        part = embedded_erm_partition(pocc)
    elif variant == "noisy_functions":
        pocc = make_noisy_function_class(p.get("noise_levels", (0.0, 0.1, 0.3)))
        part = ApproxJmPartitioned.from_jointly_measurable(pocc_to_povm(pocc), [np.arange(len(pocc))])
    else:
        raise ConfigError(f"unknown derm_success variant {variant!r}")
    risks = pocc.risk(d.joint_table())
    best = int(np.argmin(risks))
    extra = {"variant": variant, "class_size": len(pocc), "optimal_member": best, "optimal_risk": float(risks[best])}
    m_bound = None
    if "bound" in cfg.m_schedule:
        gamma_fat = eps / 8
        dims = [fat_dim(_element_class(e), _basis_states(d.dim), gamma_fat)[0] for e in part.elements]
        rep = bound_derm(len(part.elements), max(dims), eps, delta, float(p.get("c", 64.0)))
        m_bound = math.ceil(rep.value)
        extra.update(bound=rep.to_json(), fat_dim=max(dims), m_bound=m_bound)
    plugin_m = p.get("plugin_m")
    if plugin_m is not None:
        extra["plugin_m"] = int(plugin_m)
    basis = Povm.computational_basis(d.dim)
    runs, summary, criteria = [], [], []
    for m in cfg.m_schedule:
        m = m_bound if m == "bound" else m

        def trial(t, m=m):
            ds_rng, meas_rng, pl_rng = _streams(cfg, m, t, "dataset", "measure", "measure-plugin")
            out = derm(part, sample_dataset(d, m, ds_rng), rng=meas_rng)
            # same stream, so the plug-in learner sees the same draws when sizes agree
            pm = int(plugin_m or m)
            plug_data = sample_dataset(d, pm, stream(cfg.seed, f"dataset/m={m}", t))
            x = plug_data.measure(basis, pl_rng)
            plug = plugin_pocc_learner(pocc, x, plug_data.labels)
            return {"trial": t, "derm_chosen": out.chosen, "derm_excess": float(risks[out.chosen] - risks[best]),
                    "element_risks": out.diagnostics["element_risks"], "plugin_chosen": plug,
                    "plugin_excess": float(risks[plug] - risks[best])}
        res = map_trials(trial, cfg.trials)
        runs.append({"m": m, "trials": res})
        excess = [r["derm_excess"] for r in res]
        hit = np.mean([r["derm_chosen"] == best for r in res])
        plug_hit = np.mean([r["plugin_chosen"] == best for r in res])
        q90 = _quantile(excess, 0.9)
        summary.append({"m": m, "derm_freq_optimal": hit, "plugin_freq_optimal": plug_hit,
                        "derm_excess_q50": _quantile(excess, 0.5), "derm_excess_q90": q90,
                        "plugin_excess_q90": _quantile([r["plugin_excess"] for r in res], 0.9)})
        criteria.append(_criterion(f"m={m}: DERM excess-risk 0.9-quantile <= {eps}", q90, eps, q90 <= eps))
        if variant == "erm_counterexample":
            criteria.append(_criterion(f"m={m}: freq(DERM returns h_star) >= 0.9", hit, 0.9, hit >= 0.9))
    return runs, summary, criteria, extra


def _element_class(element) -> HypothesisClass:
    return ApproxJmPartitioned([element])


def _basis_states(dim: int) -> list:
    return [DensityMatrix.basis(dim, i) for i in range(dim)]


# ---------------------------------------------------------------------------
# finite-dimensional covering learner


@_register("finite_dim")
def _run_finite_dim(cfg: ExperimentConfig):
    p = cfg.params
    eps, delta = float(p.get("epsilon", 0.2)), float(p.get("delta", 0.2))
    cap = int(p.get("cap", 64))
    cls = class_from_json(cfg.class_spec) if cfg.class_spec else make_planted_class(np.arange(9) / 8)
    d = _distribution(cfg, planted_distribution)
    risks = true_risks(cls, d)
    centers = tv_cover(cls.members(), eps / 4, cls.domain)
    n_centers = len(centers)
    if n_centers > cap:
        raise ConfigError(f"cover has {n_centers} centers, cap is {cap}")
    rep = bound_finite_class([1] * n_centers, eps, delta)
    m_bound = math.ceil(rep.value)
    runs, summary, criteria = [], [], []
    for m in cfg.m_schedule:
        m = m_bound if m == "bound" else m

        def trial(t, m=m):
            ds_rng, meas_rng = _streams(cfg, m, t, "dataset", "measure")
            out = covering_learner(cls, sample_dataset(d, m, ds_rng), eps, meas_rng, cap)
            return {"trial": t, "chosen": out.chosen, "excess": float(risks[out.chosen] - risks.min()),
                    "true_risk": float(risks[out.chosen])}
        res = map_trials(trial, cfg.trials)
        runs.append({"m": m, "trials": res})
        success = np.mean([r["excess"] <= eps + 1e-12 for r in res])
        summary.append({"m": m, "success_freq": success, "excess_q50": _quantile([r["excess"] for r in res], 0.5),
                        "excess_q90": _quantile([r["excess"] for r in res], 0.9), "n_centers": n_centers})
        if m == m_bound:
            criteria.append(_criterion(f"m={m}: success frequency >= {1 - delta:g}", success, 1 - delta,
                                       success >= 1 - delta - 1e-12))
    return runs, summary, criteria, {"n_centers": n_centers, "centers": centers, "bound": rep.to_json(),
                                     "m_bound": m_bound, "optimal_risk": float(risks.min())}


# ---------------------------------------------------------------------------
# non-learnable class


@_register("unlearnable")
def _run_unlearnable(cfg: ExperimentConfig):
    p = cfg.params
    beta, gamma = float(p.get("beta", 0.8)), float(p.get("gamma", 0.25))
    runs, summary, criteria = [], [], []
    for n in cfg.m_schedule:
        if n == "bound" or n > 12:
            raise ConfigError("dimension schedule entries must be integers <= 12")
        cls = make_diagonal_shattering_class(n, beta)
        dim, cert = fat_dim(cls, list(cls.domain.states), gamma)
        valid = validate_certificate(cls, cert)
        runs.append({"m": n, "trials": [{"trial": 0, "fat_dim": dim, "witnesses": cert.witnesses,
                                          "certificate_valid": valid}]})
        halves = bool(np.allclose(cert.witnesses, 0.5)) and dim > 0
        summary.append({"n": n, "fat_dim": dim, "certificate_valid": valid, "witnesses_half": halves})
        criteria.append(_criterion(f"n={n}: fat dimension = n with witness 1/2", dim, n,
                                   dim == n and valid and halves))
    return runs, summary, criteria, {"beta": beta, "gamma": gamma}


# ---------------------------------------------------------------------------
# bounds report


def orthogonal_projector_class(dim: int = 3) -> Finite:
    return Finite([Povm.binary(np.diag(np.eye(dim)[i])) for i in range(dim)], AllStates(dim))


def consistency_classes() -> dict:
    """Every built-in class at desk size, for the JM/fat consistency check."""
    _, erm_full = make_erm_counterexample(np.linspace(-0.05, 0.05, 9))
    rng = np.random.default_rng(7)
    return {
        "scalar_family": make_scalar_family(np.round(np.arange(101) * 0.01, 2)),
        "planted": make_planted_class(np.arange(9) / 8),
        "diagonal_n3": make_diagonal_shattering_class(3, 0.8),
        "diagonal_n4": make_diagonal_shattering_class(4, 0.8),
        "diagonal_n5": make_diagonal_shattering_class(5, 0.8),
        "orthogonal_qutrit": orthogonal_projector_class(3),
        "qnn_2q": make_qnn_class(4, 1, rng.uniform(-np.pi, np.pi, (12, 4)), Povm.binary(np.diag([1.0, 0, 0, 0]))),
        "erm_embedded": pocc_to_povm(erm_full),
        "noisy_functions": pocc_to_povm(make_noisy_function_class()),
    }


def candidate_points(cls: HypothesisClass, gamma: float, limit: int = 8) -> list:
    """Domain states, or basis states plus d_TV-attaining states between packed members."""
    if isinstance(cls.domain, FiniteSet):
        return list(cls.domain.states)[:limit]
    pts = _basis_states(cls.dim)
    members = cls.members()
    packed = packing_set(members, gamma, cls.domain, exact=False)
    for a, b in itertools.combinations(packed, 2):
        if len(pts) >= limit:
            break
        _, w = dtv_povm(members[a], members[b], cls.domain, return_witness=True)
        if all(np.max(np.abs(w.op - q.op)) > 1e-9 for q in pts):
            pts.append(w)
    return pts[:limit]


def jm_fat_consistency(cls: HypothesisClass, gamma_fat: float) -> dict:
    """Measure (k, d, m, gamma) on a class and evaluate the JM/fat inequality."""
    gamma = min(4 * gamma_fat, 1.0)
    members = cls.members()
    k = len(packing_set(members, gamma, cls.domain))
    d, cert = fat_dim(cls, candidate_points(cls, gamma_fat), gamma_fat)
    m = max(1, k * (k - 1) // 2)
    return {"k": k, "d": d, "m": m, "gamma": gamma, "gamma_fat": gamma_fat,
            "verdict": check_jm_fat_inequality(k, d, m, gamma)}


def standard_bounds() -> list[BoundReport]:
    return [
        bound_finite_class([1], 0.1, 0.05),
        bound_finite_class([1] * 10, 0.1, 0.05),
        bound_derm(1, 0, 1.0, 1 / math.e, c=1.0),
        bound_derm(2, 5, 0.1, 0.1, c=1.0),
        bound_covering_from_fat(0.5, 1, 4),
        bound_covering_from_fat(2.0, 1, 1),
        bound_variational_circuit(2, 0.5, 0.1, 1.0),
    ]


@_register("bounds_report")
def _run_bounds_report(cfg: ExperimentConfig):
    gammas = [float(g) for g in cfg.params.get("gamma_fat", [0.25, 0.1])]
    rows = standard_bounds()
    checks = []
    for name, cls in consistency_classes().items():
        for g in gammas:
            checks.append({"class": name, **jm_fat_consistency(cls, g)})
    criteria = [_criterion(f"{c['class']} at gamma_fat={c['gamma_fat']}: JM/fat inequality holds",
                           [c["k"], c["d"], c["m"]], None, c["verdict"]) for c in checks]
    summary = [r.to_json() for r in rows]
    return [{"m": 0, "trials": checks}], summary, criteria, {"bounds": summary}


# ---------------------------------------------------------------------------
# output files

UNITS = {
    "m": "samples", "n": "dimension", "fat_dim": "points", "n_centers": "centers",
}


def _unit(key: str) -> str:
    if key in UNITS:
        return UNITS[key]
    if key.startswith("freq") or key.endswith("freq") or "freq_" in key:
        return "fraction"
    if "excess" in key or "risk" in key:
        return "risk"
    return "1"


def write_curves_csv(path, summary: list) -> None:
    keys = list(summary[0]) if summary else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{k} [{_unit(k)}]" for k in keys])
        for row in summary:
            w.writerow([_plain(row.get(k)) for k in keys])


def write_bounds_csv(path, rows: list[BoundReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BoundReport.CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_row())


def write_svg(path, summary: list, x_key: str, width: int = 640, height: int = 400) -> None:
    """Line chart of every numeric summary column against ``x_key``."""
    series = {k: [row[k] for row in summary] for k in summary[0]
              if k != x_key and all(isinstance(row[k], (int, float, np.number)) and not isinstance(row[k], bool)
                                    for row in summary)}
    xs = np.array([row[x_key] for row in summary], dtype=float)
    pad = 50
    ys_all = np.concatenate([np.asarray(v, dtype=float) for v in series.values()]) if series else np.zeros(1)
    x0, x1 = xs.min(), xs.max() if xs.max() > xs.min() else xs.min() + 1
    y0, y1 = min(0.0, ys_all.min()), max(1.0, ys_all.max())

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{x_key}</text>',
             f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end">{y0:g}</text>',
             f'<text x="{pad - 5}" y="{pad}" text-anchor="end">{y1:g}</text>']
    for i, (name, ys) in enumerate(series.items()):
        c = colours[i % len(colours)]
        pts = " ".join(f"{sx(x):.1f},{sy(float(y)):.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{c}" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" fill="{c}" font-size="10">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def write_outputs(rec: ResultRecord, out_dir, svg: bool = False) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(json.dumps(rec.to_json(), indent=2, sort_keys=True))
    if rec.experiment == "bounds_report":
        write_bounds_csv(out / "bounds.csv", standard_bounds())
        checks = rec.runs[0]["trials"]
        write_curves_csv(out / "curves.csv", checks)
    else:
        write_curves_csv(out / "curves.csv", rec.summary)
        if svg and rec.summary:
            write_svg(out / "curves.svg", rec.summary, "n" if rec.experiment == "unlearnable" else "m")
