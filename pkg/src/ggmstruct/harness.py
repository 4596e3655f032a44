"""Monte Carlo experiments: parameter sweeps over seeded trials.

Trial ``t`` uses seed ``base_seed + t``. Samples are drawn from
``PCG64(SeedSequence([seed, 1]))`` and random model instances from ``seed``
itself, so the two streams never overlap. Rows are sorted by
``(sweep index, trial)`` before writing, which makes the CSV independent of
the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from . import bounds
from .dice import dice
from .exceptions import GGMError, InvalidConfig
from .graph import GraphEstimate
from .model import GgmInstance, build_instance, spec_from_params
from .regression import Strategy
from .sampling import empirical_covariance, sample
from .slice import slice as slice_recover

EXPERIMENTS = ("failure-vs-sigma", "scatter", "sample-complexity", "population-exactness")
CSV_COLUMNS = (
    "sweep_param",
    "sweep_value",
    "trial",
    "seed",
    "exact_recovery",
    "failure_criterion",
    "kappa_hat_12",
    "kappa_hat_14",
    "wallclock_ms",
)
SAMPLE_STREAM = 1
SCATTER_SIGMA2 = math.sqrt(1000.0)
MAX_INSTANCE_DRAWS = 1000


RecoveryFn = Callable[..., GraphEstimate]


def _recover_dice(S, d, kappa, strategy):
    return dice(S, d, kappa)


def _recover_slice(S, d, kappa, strategy):
    return slice_recover(S, d, kappa, strategy=strategy)


ALGORITHMS: Dict[str, RecoveryFn] = {"dice": _recover_dice, "slice": _recover_slice}


def register_algorithm(name: str, fn: RecoveryFn) -> None:
    """Plug in another recovery routine ``fn(S, d, kappa, strategy) -> GraphEstimate``."""
    ALGORITHMS[name] = fn


@dataclass
class ExperimentConfig:
    experiment: str
    family: str = "triangle-cloud"
    family_params: dict = field(default_factory=dict)
    algorithm: str = "slice"
    strategy: str = "exhaustive"
    d: Optional[int] = None
    kappa: Optional[float] = None
    n: Optional[int] = None
    population: bool = False
    trials: int = 50
    base_seed: int = 0
    sweep: list = field(default_factory=list)
    delta: float = 0.1
    jobs: int = 1
    timing: bool = False
    exact_kappa_instances: bool = False
    output: Optional[str] = None

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidConfig(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InvalidConfig(f"trials must be a positive integer, got {self.trials!r}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {self.algorithm!r}")
        try:
            Strategy(self.strategy)
        except ValueError as exc:
            raise InvalidConfig(f"unknown strategy {self.strategy!r}") from exc
        if self.experiment == "scatter" and len(self.sweep) > 1:
            raise InvalidConfig("scatter takes a single sigma2 value")
        if self.experiment in ("failure-vs-sigma", "sample-complexity", "population-exactness"):
            if not self.sweep:
                raise InvalidConfig(f"{self.experiment} needs a nonempty sweep")
        if self.experiment in ("failure-vs-sigma", "scatter") and self.family != "triangle-cloud":
            raise InvalidConfig(f"{self.experiment} runs on the triangle-cloud family")
        if not self.population and self.experiment in ("failure-vs-sigma", "scatter") and not self.n:
            raise InvalidConfig("a sample count n is required unless population mode is on")
        if self.jobs < 1:
            raise InvalidConfig("jobs must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrialRecord:
    sweep_index: int
    sweep_param: str
    sweep_value: str
    trial: int
    seed: int
    exact_recovery: bool
    failure_criterion: bool
    kappa_hat_12: Optional[float]
    kappa_hat_14: Optional[float]
    wallclock_ms: float
    error: Optional[str] = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: List[TrialRecord]
    metadata: dict = field(default_factory=dict)

    def sweep_values(self):
        seen = {}
        for r in self.rows:
            seen.setdefault(r.sweep_index, r.sweep_value)
        return [seen[k] for k in sorted(seen)]

    def aggregates(self) -> List[dict]:
        out = []
        for idx, value in enumerate(self.sweep_values()):
            rows = [r for r in self.rows if r.sweep_index == idx]
            k = len(rows)
            out.append(
                {
                    "sweep_value": value,
                    "trials": k,
                    "failure_probability": sum(r.failure_criterion for r in rows) / k,
                    "recovery_rate": sum(r.exact_recovery for r in rows) / k,
                    "errors": sum(r.error is not None for r in rows),
                }
            )
        return out

    def failure_probability(self) -> Dict[str, float]:
        return {a["sweep_value"]: a["failure_probability"] for a in self.aggregates()}

    def recovery_rate(self) -> Dict[str, float]:
        return {a["sweep_value"]: a["recovery_rate"] for a in self.aggregates()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    r.sweep_param,
                    r.sweep_value,
                    r.trial,
                    r.seed,
                    int(r.exact_recovery),
                    int(r.failure_criterion),
                    _fmt(r.kappa_hat_12),
                    _fmt(r.kappa_hat_14),
                    f"{r.wallclock_ms:.3f}" if self.config.timing else "",
                ]
            )
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "config": self.config.to_dict(),
            "metadata": self.metadata,
            "aggregates": self.aggregates(),
            "errors": [
                {"sweep_value": r.sweep_value, "trial": r.trial, "error": r.error}
                for r in self.rows
                if r.error is not None
            ],
        }
        if self.config.timing:
            out["wallclock_ms_total"] = sum(r.wallclock_ms for r in self.rows)
        return out

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())
        with open(f"{path}.summary.json", "w") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def _sweep_label(v) -> str:
    if isinstance(v, dict):
        return ";".join(f"{k}={v[k]}" for k in sorted(v))
    if isinstance(v, float) and v.is_integer():
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------


def _instance_for(family: str, params: dict, seed: int, exact_kappa: bool) -> GgmInstance:
    params = dict(params)
    if family == "regular-random":
        if not exact_kappa:
            return build_instance(spec_from_params(family, {**params, "seed": seed}))
        # keep only draws that are positive definite at the requested strengths
        for attempt in range(MAX_INSTANCE_DRAWS):
            sub_seed = seed * MAX_INSTANCE_DRAWS + attempt
            inst = build_instance(spec_from_params(family, {**params, "seed": sub_seed}))
            if inst.kappa >= params["kappa_min"] - 1e-12:
                return inst
        raise GGMError(f"no unshrunk regular-random draw found for seed {seed}")
    return build_instance(spec_from_params(family, params))


def _kappa_pair(graph: GraphEstimate, j: int) -> Optional[float]:
    # slice stores unordered pairs, dice stores (i, j) from vertex i's elimination
    if (0, j) in graph.kappa_hat:
        return graph.kappa_hat[(0, j)]
    return 0.0 if j < graph.p else None


def _run_trial(cfg: ExperimentConfig, idx: int, param: str, value, trial: int):
    seed = cfg.base_seed + trial
    label = _sweep_label(value)
    start = time.perf_counter()
    k12 = k14 = None
    try:
        family, params, n = cfg.family, dict(cfg.family_params), cfg.n
        if param == "sigma2":
            params["sigma2"] = value
        elif param == "n":
            n = int(value)
        elif param == "instance":
            family, params = value["family"], {k: v for k, v in value.items() if k != "family"}
        inst = _instance_for(family, params, seed, cfg.exact_kappa_instances)
        d = cfg.d if cfg.d is not None else inst.d
        kappa = cfg.kappa if cfg.kappa is not None else inst.kappa
        if cfg.population or param == "instance":
            S = np.array(inst.sigma)
        else:
            S = empirical_covariance(sample(inst, int(n), seed=[seed, SAMPLE_STREAM])).sigma_hat
        graph = ALGORITHMS[cfg.algorithm](S, d, kappa, Strategy(cfg.strategy))
        exact = graph.edges == inst.edges
        if family == "triangle-cloud" and inst.p >= 4:
            k12, k14 = _kappa_pair(graph, 1), _kappa_pair(graph, 3)
            failure = k12 <= k14
        else:
            failure = not exact
        error = None
    except (GGMError, np.linalg.LinAlgError, ValueError) as exc:
        exact, failure, error = False, True, f"{type(exc).__name__}: {exc}"
    ms = (time.perf_counter() - start) * 1000.0
    return TrialRecord(idx, param, label, trial, seed, bool(exact), bool(failure), k12, k14, ms, error)


def _execute(cfg: ExperimentConfig, param: str, values: list, trials: int) -> List[TrialRecord]:
    tasks = [(i, v, t) for i, v in enumerate(values) for t in range(trials)]
    if cfg.jobs == 1:
        rows = [_run_trial(cfg, i, param, v, t) for i, v, t in tasks]
    else:
        rows = Parallel(n_jobs=cfg.jobs)(delayed(_run_trial)(cfg, i, param, v, t) for i, v, t in tasks)
    return sorted(rows, key=lambda r: (r.sweep_index, r.trial))


def run_failure_vs_sigma(cfg: ExperimentConfig) -> ExperimentReport:
    """Failure probability of the recovery algorithm against the cloud variance."""
    cfg = replace(cfg, experiment="failure-vs-sigma")
    cfg.validate()
    rows = _execute(cfg, "sigma2", list(cfg.sweep), cfg.trials)
    return ExperimentReport(cfg, rows, {"n": None if cfg.population else cfg.n})


def run_scatter_at_sigma(cfg: ExperimentConfig) -> ExperimentReport:
    """Per-trial ``(kappa_hat_12, kappa_hat_14)`` pairs at one cloud variance."""
    sweep = list(cfg.sweep) or [SCATTER_SIGMA2]
    cfg = replace(cfg, experiment="scatter", sweep=sweep)
    cfg.validate()
    rows = _execute(cfg, "sigma2", sweep, cfg.trials)
    return ExperimentReport(cfg, rows, {"n": None if cfg.population else cfg.n})


def run_sample_complexity_curve(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact-recovery rate against the sample count, with the sufficient sample size
    for the configured algorithm recorded alongside."""
    cfg = replace(cfg, experiment="sample-complexity")
    cfg.validate()
    probe = _instance_for(cfg.family, cfg.family_params, cfg.base_seed, cfg.exact_kappa_instances)
    d = cfg.d if cfg.d is not None else probe.d
    kappa = cfg.kappa if cfg.kappa is not None else probe.kappa
    meta = {"p": probe.p, "d": d, "kappa": kappa, "delta": cfg.delta}
    try:
        meta["n_sufficient"] = (
            bounds.dice_sample_bound(probe.p, d, kappa, cfg.delta)
            if cfg.algorithm == "dice"
            else bounds.slice_sample_bound(probe.p, d, kappa, cfg.delta)
        )
    except GGMError:
        meta["n_sufficient"] = None
    sweep = [int(v) for v in cfg.sweep]
    rows = _execute(cfg, "n", sweep, cfg.trials)
    return ExperimentReport(cfg, rows, meta)


def run_population_exactness(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the algorithm on exact covariances of every family instance in the sweep."""
    cfg = replace(cfg, experiment="population-exactness", population=True)
    cfg.validate()
    for v in cfg.sweep:
        if not isinstance(v, dict) or "family" not in v:
            raise InvalidConfig("population-exactness sweep entries need a 'family' key")
    rows = _execute(cfg, "instance", list(cfg.sweep), cfg.trials)
    return ExperimentReport(cfg, rows, {})


RUNNERS = {
    "failure-vs-sigma": run_failure_vs_sigma,
    "scatter": run_scatter_at_sigma,
    "sample-complexity": run_sample_complexity_curve,
    "population-exactness": run_population_exactness,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg.validate()
    return RUNNERS[cfg.experiment](cfg)
