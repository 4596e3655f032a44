"""Command-line interface: ``ggmstruct {gen,sample,recover,bounds,experiment}``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime errors.
Vertices are 1-based in every file and printout.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import bounds
from .dice import dice
from .exceptions import GGMError
from .graph import write_graph
from .harness import SCATTER_SIGMA2, ExperimentConfig, run_experiment
from .model import FourNode, RegularRandom, ThreeNode, TriangleCloud, build_instance, load_model, save_model
from .regression import Strategy
from .sampling import MeanMode, empirical_covariance, read_samples_csv, sample, write_samples_csv
from .slice import slice as slice_recover


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text):
    try:
        return [float(eval_num(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def eval_num(token: str) -> float:
    """Parse a number; ``sqrt(x)`` and ``1e3`` style tokens are accepted."""
    token = token.strip()
    if token.startswith("sqrt(") and token.endswith(")"):
        return math.sqrt(float(token[5:-1]))
    return float(token)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ggmstruct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a model file")
    g.add_argument("--family", required=True, choices=["triangle-cloud", "three-node", "four-node", "regular-random"])
    g.add_argument("--p", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--kappa", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--sigma2", type=eval_num)
    g.add_argument("--kappa-min", type=float)
    g.add_argument("--kappa-max", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")

    s = sub.add_parser("sample", help="draw samples from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--header", action="store_true", help="write an x1..xp header line")
    s.add_argument("--out")

    r = sub.add_parser("recover", help="recover the graph from samples")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="samples CSV")
    src.add_argument("--model", help="model file; recovers from its exact covariance")
    r.add_argument("--algo", choices=["dice", "slice"], default="slice")
    r.add_argument("--strategy", choices=[s.value for s in Strategy], default="exhaustive")
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--kappa", type=float, required=True)
    r.add_argument("--centered", action="store_true", help="center columns, unbiased estimator")
    r.add_argument("--format", choices=["json", "csv"], default="json")
    r.add_argument("--out")

    b = sub.add_parser("bounds", help="sample-size plan (natural logarithms)")
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--kappa", type=float, required=True)
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--format", choices=["json", "table", "csv"], default="json")
    b.add_argument("--out")

    e = sub.add_parser("experiment", help="run a seeded Monte Carlo experiment")
    e.add_argument("--config", help="JSON file mirroring the experiment config; flags override it")
    e.add_argument("--experiment", choices=["failure-vs-sigma", "scatter", "sample-complexity", "population-exactness"])
    e.add_argument("--family", choices=["triangle-cloud", "three-node", "four-node", "regular-random"])
    e.add_argument("--algo", dest="algorithm", choices=["dice", "slice"])
    e.add_argument("--strategy", choices=[s.value for s in Strategy])
    e.add_argument("--p", type=int)
    e.add_argument("--d", type=int)
    e.add_argument("--kappa", type=float)
    e.add_argument("--eps", type=float)
    e.add_argument("--sigma2", type=_float_list, help="comma list, e.g. 1,10,100 or sqrt(1000)")
    e.add_argument("--kappa-min", type=float)
    e.add_argument("--kappa-max", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--n-list", type=_int_list, help="comma list of sample counts")
    e.add_argument("--delta", type=float)
    e.add_argument("--population", action="store_true", help="use the exact covariance (n = infinity)")
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", dest="base_seed", type=int)
    e.add_argument("--jobs", type=int, default=None)
    e.add_argument("--timing", action="store_true", help="fill wallclock_ms (breaks byte-identical reruns)")
    e.add_argument("--out")
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--family {args.family} requires " + ", ".join(f"--{m}" for m in missing))


def cmd_gen(args):
    fam = args.family
    if fam == "triangle-cloud":
        _need(args, "p", "kappa", "eps", "sigma2")
        spec = TriangleCloud(kappa=args.kappa, epsilon=args.eps, sigma2=args.sigma2, p=args.p)
    elif fam == "three-node":
        _need(args, "kappa", "eps")
        spec = ThreeNode(kappa0=args.kappa, epsilon=args.eps)
    elif fam == "four-node":
        _need(args, "kappa", "eps")
        spec = FourNode(kappa=args.kappa, epsilon=args.eps)
    else:
        _need(args, "p", "d", "kappa-min", "kappa-max")
        spec = RegularRandom(p=args.p, d=args.d, kappa_min=args.kappa_min, kappa_max=args.kappa_max, seed=args.seed)
    inst = build_instance(spec)
    if args.out:
        save_model(inst, args.out)
    else:
        _emit(json.dumps(inst.to_json_dict()) + "\n", None)


def cmd_sample(args):
    inst = load_model(args.model)
    samples = sample(inst, args.n, seed=args.seed)
    write_samples_csv(samples, args.out or sys.stdout, header=args.header)


def cmd_recover(args):
    if args.samples:
        mode = MeanMode.CENTERED if args.centered else MeanMode.KNOWN_ZERO_MEAN
        S = empirical_covariance(read_samples_csv(args.samples, mean_mode=mode)).sigma_hat
    else:
        S = load_model(args.model).sigma
    if args.algo == "dice":
        graph = dice(S, args.d, args.kappa)
    else:
        graph = slice_recover(S, args.d, args.kappa, strategy=args.strategy)
    for i, j in graph.asymmetric_pairs:
        print(f"asymmetric neighborhoods: {i + 1} - {j + 1}", file=sys.stderr)
    if args.format == "json":
        if args.out:
            write_graph(graph, args.out)
        else:
            _emit(json.dumps(graph.to_json_dict(), indent=1) + "\n", None)
    else:
        lines = ["i,j,kappa_hat"]
        for i, j in sorted(graph.edges):
            k = graph.kappa_hat.get((i, j), graph.kappa_hat.get((j, i), float("nan")))
            lines.append(f"{i + 1},{j + 1},{k!r}")
        _emit("\n".join(lines) + "\n", args.out)


def cmd_bounds(args):
    sp = bounds.plan(args.p, args.d, args.kappa, args.delta)
    if args.format == "json":
        text = json.dumps(sp.to_dict(), indent=1) + "\n"
    elif args.format == "table":
        text = sp.table() + "\n"
    else:
        row = sp.to_dict()
        text = ",".join(row) + "\n" + ",".join(repr(v) for v in row.values()) + "\n"
    _emit(text, args.out)


def _experiment_config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    fam_params = dict(base.get("family_params", {}))
    for flag, key in (("p", "p"), ("eps", "epsilon"), ("kappa_min", "kappa_min"), ("kappa_max", "kappa_max")):
        v = getattr(args, flag)
        if v is not None:
            fam_params[key] = v
    for flag in ("experiment", "family", "algorithm", "strategy", "d", "n", "delta", "trials", "base_seed"):
        v = getattr(args, flag)
        if v is not None:
            base[flag] = v
    if args.kappa is not None:
        base["kappa"] = args.kappa
    family = base.get("family", "triangle-cloud")
    experiment = base.get("experiment")
    if experiment is None:
        raise UsageError("--experiment is required (flag or config file)")
    if family == "triangle-cloud":
        fam_params.setdefault("kappa", base.get("kappa", 0.4))
        fam_params.setdefault("epsilon", 0.01)
        fam_params.setdefault("p", 200)
        fam_params.setdefault("sigma2", 1.0)
    elif family == "regular-random" and args.kappa is not None:
        fam_params.setdefault("kappa_min", args.kappa)
        fam_params.setdefault("kappa_max", args.kappa)
    if args.sigma2 is not None:
        base["sweep"] = args.sigma2
    if args.n_list is not None:
        base["sweep"] = args.n_list
    if experiment == "scatter" and not base.get("sweep"):
        base["sweep"] = [SCATTER_SIGMA2]
    if args.population:
        base["population"] = True
    if args.timing:
        base["timing"] = True
    jobs = args.jobs if args.jobs is not None else base.get("jobs", os.environ.get("GGM_JOBS", 1))
    try:
        base["jobs"] = int(jobs)
    except ValueError as exc:
        raise UsageError(f"--jobs / GGM_JOBS must be an integer, got {jobs!r}") from exc
    if args.out:
        base["output"] = args.out
    base["family"] = family
    base["family_params"] = fam_params
    return ExperimentConfig.from_dict(base)


def cmd_experiment(args):
    cfg = _experiment_config(args)
    report = run_experiment(cfg)
    if args.format == "json":
        _emit(json.dumps(report.summary(), indent=1, sort_keys=True) + "\n", cfg.output)
    elif cfg.output:
        report.write(cfg.output)
    else:
        sys.stdout.write(report.to_csv())
    for agg in report.aggregates():
        print(
            f"{agg['sweep_value']}: failure={agg['failure_probability']:.3f} "
            f"recovery={agg['recovery_rate']:.3f} errors={agg['errors']}",
            file=sys.stderr,
        )


COMMANDS = {
    "gen": cmd_gen,
    "sample": cmd_sample,
    "recover": cmd_recover,
    "bounds": cmd_bounds,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ggmstruct: usage error: {exc}", file=sys.stderr)
        return 1
    except (GGMError, OSError, ValueError, KeyError) as exc:
        print(f"ggmstruct: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
