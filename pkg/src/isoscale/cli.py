"""``isoscale`` command line: scan, eval, roc, simulate, experiment, measures.

Exit codes: 0 success, 2 usage error, 3 data error, 4 degenerate evaluation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__, contingency, experiments, methods, synthgen
from .dataset import load_labels, load_matrix, write_labels, write_matrix
from .errors import (AggregationError, ConfigurationError, DataError, DegenerateEvaluationError,
                     EvaluationError, RegistryError, SamplingError)
from .evalrank import auc, evaluation_report, roc_points
from .isotonic import NeighborStrategy, parse_aggregation, resolve_mode

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _threads(requested: int | None) -> int:
    env = os.environ.get("ISOSCALE_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise UsageError(f"ISOSCALE_THREADS must be an integer, got {env!r}") from None
    if requested is None:
        return cap or 1
    return min(requested, cap) if cap else requested


def _method_list(text: str) -> list:
    names = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not names:
        raise UsageError("--methods is empty")
    for n in names:
        try:
            methods.get_method(n)
        except RegistryError as exc:
            raise UsageError(f"{exc}\nknown methods: {', '.join(sorted(methods.METHODS))}") from None
    return names


def _options(args) -> methods.MethodOptions:
    try:
        mode = resolve_mode(args.mode)
        strategy = NeighborStrategy.parse(args.strategy, seed=args.seed)
        opts = methods.MethodOptions(mode=mode, aggregation=args.aggregation, strategy=strategy,
                                     threads=_threads(args.threads))
        parse_aggregation(opts.aggregation, 0.1)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    return opts


def _resolved(args, **extra) -> dict:
    cfg = {"command": args.command, "version": __version__}
    for key in ("matrix", "labels", "methods", "mode", "aggregation", "strategy", "seed", "negate_items",
                "config", "spec", "out"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    if hasattr(args, "mode"):
        cfg["mode"] = resolve_mode(args.mode)
    if hasattr(args, "threads"):
        cfg["threads"] = _threads(args.threads)
    cfg.update(extra)
    return cfg


def _header(cfg: dict) -> str:
    return "".join(f"# {k}={cfg[k]}\n" for k in cfg)


def _load(args):
    matrix = load_matrix(args.matrix)
    if args.negate_items:
        matrix = matrix.reverse_coded([s.strip() for s in args.negate_items.split(",") if s.strip()])
    return matrix


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _fmt(v) -> str:
    return repr(float(v)) if np.isfinite(v) else ""


# --------------------------------------------------------------------------
# commands


def cmd_scan(args) -> int:
    names = _method_list(args.methods)
    opts = _options(args)
    matrix = _load(args)
    scores = [methods.compute(n, matrix, opts) for n in names]
    primary = scores[0]
    order = [primary.item_ids.index(i) for i in primary.ranking()]
    buf = io.StringIO()
    buf.write(_header(_resolved(args, primary=names[0], n=matrix.n, p=matrix.p)))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "item_id", *names, "suspicion"])
    susp = primary.suspicion()
    for rank, k in enumerate(order, start=1):
        w.writerow([rank, primary.item_ids[k], *(_fmt(s.scores[k]) for s in scores), _fmt(susp[k])])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    names = _method_list(args.methods)
    opts = _options(args)
    matrix = _load(args)
    labels = load_labels(args.labels, matrix)
    if labels.vector(matrix.item_ids).min() == labels.vector(matrix.item_ids).max():
        raise DegenerateEvaluationError("labels contain a single class; AUC is undefined")
    results = {}
    for n in names:
        s = methods.compute(n, matrix, opts)
        results[n] = auc(s, labels)
        if args.roc_dir:
            os.makedirs(args.roc_dir, exist_ok=True)
            roc_points(s, labels).to_csv(os.path.join(args.roc_dir, f"roc_{n}.csv"))
    report = {"config": _resolved(args, roc_dir=args.roc_dir),
              "results": json.loads(evaluation_report(results))}
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_roc(args) -> int:
    names = _method_list(args.methods)
    opts = _options(args)
    matrix = _load(args)
    labels = load_labels(args.labels, matrix)
    curve = roc_points(methods.compute(names[0], matrix, opts), labels)
    buf = io.StringIO()
    buf.write(_header(_resolved(args, method=names[0])))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "fpr", "tpr"])
    for th, (f, t) in zip(curve.thresholds, curve.points):
        w.writerow([repr(float(th)), repr(float(f)), repr(float(t))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        raw = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = synthgen.GeneratorConfig.from_dict(raw)
    except (TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad generator config: {exc}") from None
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    sim = synthgen.generate(cfg)
    if args.out in (None, "-"):
        write_matrix(sim.matrix, sys.stdout)
    else:
        write_matrix(sim.matrix, args.out)
    if args.labels:
        write_labels(sim.labels, args.labels)
    sys.stderr.write(_header(_resolved(args, generator=cfg.to_dict())))
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            raw = json.load(fh)
        if args.seed is not None:
            raw["seed"] = args.seed
        raw.setdefault("workers", _threads(args.threads))
        spec = experiments.ExperimentSpec.from_dict(raw)
    except (TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad experiment spec: {exc}") from None
    except RegistryError as exc:
        raise UsageError(str(exc)) from None
    matrix = _load(args)
    labels = load_labels(args.labels, matrix)
    result = experiments.run(spec, matrix, labels)
    out = args.out or "."
    result.write(out)
    acc = result.accounting()
    sys.stderr.write(_header(_resolved(args, spec_hash=spec.hash(), resolved_spec=spec.to_dict())))
    for m, a in acc.items():
        sys.stderr.write(f"{m}: {a['trials_valid']}/{a['trials_total']} valid trials\n")
    if not result.all_cells_valid():
        sys.stderr.write("error: some (cell, method) combinations produced no valid trial\n")
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_measures(args) -> int:
    if args.list or not args.name:
        _emit(contingency.describe_registry() + "\n", args.out if not args.name else None)
        return EXIT_OK
    try:
        contingency.get_measure(args.name)
    except RegistryError as exc:
        raise UsageError(str(exc)) from None
    if not args.matrix:
        raise UsageError("--name needs --matrix")
    matrix = _load(args)
    scores = contingency.interitem_item_score(matrix, args.name, strict=False)
    if args.out in (None, "-"):
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["item_id", "score", "n_pairs", "n_undefined"])
        for k, i in enumerate(scores.item_ids):
            w.writerow([i, _fmt(scores.scores[k]), int(scores.diagnostics["n_pairs"][k]),
                        int(scores.diagnostics["n_undefined_pairs"][k])])
    else:
        scores.to_csv(args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed for randomized steps")
    common.add_argument("--out", default=None, help="output path (default: stdout, or '.' for experiment)")
    common.add_argument("--threads", type=int, default=None, help="worker count (capped by ISOSCALE_THREADS)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--matrix", required=True, help="wide CSV: respondent_id, then one column per item")
    data.add_argument("--negate-items", default=None, help="comma list of reverse-keyed items to recode")

    scoring = argparse.ArgumentParser(add_help=False)
    scoring.add_argument("--methods", default="m_iso", help="comma list; the first one orders the scan")
    scoring.add_argument("--mode", default="tau-directed", help="tau-up | tau-directed | bidirectional")
    scoring.add_argument("--aggregation", default="mean", help="mean | sym | trimmed:ALPHA | median | abs")
    scoring.add_argument("--strategy", default="all", help="all | random:K | stratified:K | prescreen:K")

    p = _Parser(prog="isoscale", description="Screen test items for global quality problems.")
    p.add_argument("--version", action="version", version=f"isoscale {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scan", parents=[common, data, scoring], help="rank items, most suspicious first")
    s.set_defaults(func=cmd_scan)
    s = sub.add_parser("eval", parents=[common, data, scoring], help="AUC of each method against labels")
    s.add_argument("--labels", required=True)
    s.add_argument("--roc-dir", default=None, help="also write roc_<method>.csv files here")
    s.set_defaults(func=cmd_eval)
    s = sub.add_parser("roc", parents=[common, data, scoring], help="ROC points for the first method")
    s.add_argument("--labels", required=True)
    s.set_defaults(func=cmd_roc)
    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic matrix and labels")
    s.add_argument("--config", default=None, help="GeneratorConfig JSON")
    s.add_argument("--labels", default=None, help="where to write ground-truth labels")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("experiment", parents=[common, data], help="run a resampling experiment")
    s.add_argument("--spec", required=True, help="ExperimentSpec JSON")
    s.add_argument("--labels", required=True)
    s.set_defaults(func=cmd_experiment)
    s = sub.add_parser("measures", parents=[common], help="list or export contingency measures")
    s.add_argument("--list", action="store_true")
    s.add_argument("--name", default=None, help="measure to export as item_id,score,n_pairs,n_undefined")
    s.add_argument("--matrix", default=None)
    s.add_argument("--negate-items", default=None)
    s.set_defaults(func=cmd_measures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", None) is None and args.command not in ("simulate", "experiment"):
            args.seed = 0
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"isoscale: usage error: {exc}\n")
        return EXIT_USAGE
    except (ConfigurationError, RegistryError) as exc:
        sys.stderr.write(f"isoscale: usage error: {exc}\n")
        return EXIT_USAGE
    except DegenerateEvaluationError as exc:
        sys.stderr.write(f"isoscale: degenerate evaluation: {exc}\n")
        return EXIT_DEGENERATE
    except (DataError, AggregationError, SamplingError, EvaluationError, OSError) as exc:
        sys.stderr.write(f"isoscale: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
