"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.  Results go to files or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import audit
from .baselines import LinearModel, export_linear, import_linear
from .errors import FitError, TwoStageError
from .evaluation import accuracy, benchmark, log_loss
from .fit import FitConfig, fit_tables, select_context
from .fitters import LogisticFitter, TallyingFitter, TwoStageFitter
from .links import Link
from .model import TwoStageModel, export_editing_curves, export_model, import_model, rank_distribution
from .schema import dump_schema, load_dataset, load_schema, parse_dataset, serialize_dataset
from .synth import DM_IDS, SimulatedDM, simulate_dataset

log = logging.getLogger("twostage")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=["ce", "cross_entropy", "hinge"], default="ce")
    p.add_argument("--link", choices=[link.value for link in Link], default=None,
                   help="default: logistic for ce, identity for hinge")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--ftol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--cv-fraction", type=float, default=0.2)
    p.add_argument("--context", default="auto", help="auto, none, or a feature name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)


def _fit_config(args) -> FitConfig:
    return FitConfig(args.loss, args.link, args.lam, args.ftol, args.max_iter, args.cv_fraction, args.seed)


def _context_arg(args, schema) -> str | None:
    if args.context == "none":
        return None
    if args.context != "auto":
        schema.index(args.context)  # raises KeyError for unknown names
    return args.context


def _load_any_model(path: str) -> TwoStageModel | LinearModel:
    text = Path(path).read_text(encoding="utf-8")
    if '"weights"' in text and '"tables"' not in text:
        return import_linear(text)
    return import_model(text)


# subcommands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    ds = simulate_dataset(args.dm, args.n, args.seed)
    _write(args.out, serialize_dataset(ds, comment=f"dm={args.dm} seed={args.seed} n={args.n}"))
    if args.schema_out:
        _write(args.schema_out, dump_schema(ds.schema))
    return 0


def cmd_fit(args) -> int:
    schema = load_schema(args.schema)
    data = load_dataset(args.data, schema)
    if args.kind == "logistic":
        model = LogisticFitter(args.l2, args.ftol, args.max_iter)(data)
        _write(args.out, export_linear(model))
        return 0
    config = _fit_config(args)
    context = _context_arg(args, schema)
    jobs = args.jobs or _default_jobs()
    if context == "auto":
        _, model = select_context(data, config, jobs=jobs)
    else:
        model = fit_tables(data, config, None if context is None else schema.index(context))
    model = model.with_metadata(context_flag=args.context)
    if not model.metadata.get("converged", True):
        log.warning("fit stopped at max_iter=%d before meeting ftol", args.max_iter)
    if model.metadata.get("saturated"):
        log.warning("%d records saturated the probability clamp", model.metadata["saturated"])
    _write(args.out, export_model(model))
    return 0


def cmd_eval(args) -> int:
    model = _load_any_model(args.model)
    data = load_dataset(args.data, model.schema)
    result = {"n": len(data), "accuracy": accuracy(model, data)}
    link = getattr(model, "link", Link.LOGISTIC)
    if link.probabilistic:
        result["diagnostics"] = {"log_loss": log_loss(model.prob(data.first, data.second), data.choice)}
    _write(args.out, json.dumps(result, indent=2) + "\n")
    return 0


def cmd_bench(args) -> int:
    schema = load_schema(args.schema)
    data = load_dataset(args.data, schema)
    if args.kind == "twostage":
        fitter = TwoStageFitter(_fit_config(args), _context_arg(args, schema))
    elif args.kind == "logistic":
        fitter = LogisticFitter(args.l2, args.ftol, args.max_iter)
    else:
        fitter = TallyingFitter()
    res = benchmark(fitter, data, args.reps, args.split, args.seed, jobs=args.jobs or _default_jobs())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rep", "accuracy"])
    for r, acc in enumerate(res.per_rep):
        w.writerow([r, "" if acc is None else repr(acc)])
    w.writerow(["mean", repr(res.mean)])
    w.writerow(["std", repr(res.std)])
    _write(args.out, buf.getvalue())
    if args.summary_out:
        summary = {"kind": args.kind, "reps": args.reps, "split": args.split, **res.to_dict()}
        if args.kind == "twostage":
            summary["config"] = fitter.config.to_dict()
            summary["context"] = fitter.context
        _write(args.summary_out, json.dumps(summary, indent=2) + "\n")
    return 0 if len(res.failures) < args.reps else 3


def cmd_rank(args) -> int:
    model = import_model(Path(args.model).read_text(encoding="utf-8"))
    text = Path(args.items).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))]
    header, body = rows[0], rows[1:]
    if sorted(header) != sorted(model.schema.names):
        raise TwoStageError(f"items header must list the features {', '.join(model.schema.names)}")
    order = [header.index(n) for n in model.schema.names]
    items = np.array([[float(r[k]) for k in order] for r in body])
    model.schema.encode(items)
    probs = rank_distribution(model, list(items))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item", "probability"])
    for k, p in enumerate(probs):
        w.writerow([k, repr(float(p))])
    _write(args.out, buf.getvalue())
    return 0


def cmd_check_axioms(args) -> int:
    if (args.model is None) == (args.dm is None):
        raise UsageError("check-axioms: give exactly one of --model or --dm")
    if args.model:
        model = import_model(Path(args.model).read_text(encoding="utf-8"))
        if not model.link.probabilistic:
            raise TwoStageError("axiom audit needs a probabilistic link")
        results = audit(model.prob, model.link, model.schema, n_samples=args.samples, seed=args.seed,
                        context=model.context, model=model, threshold=args.threshold)
        subject, link = args.model, model.link.value
    else:
        dm = SimulatedDM(args.dm)
        link = args.link or ("probit" if dm.id == "dm1" else "logistic")
        context = 0 if dm.id == "cf1" else None
        results = audit(dm.prob, link, dm.schema, n_samples=args.samples, seed=args.seed,
                        context=context, threshold=args.threshold)
        subject = dm.id
    report = {"subject": subject, "link": link, "samples": args.samples, "seed": args.seed,
              "threshold": args.threshold, "results": results}
    _write(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_export_curves(args) -> int:
    model = import_model(Path(args.model).read_text(encoding="utf-8"))
    _write(args.out, export_editing_curves(model))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twostage", description="Two-stage monotone pairwise choice models")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="sample comparisons from a simulated decision maker")
    p.add_argument("--dm", required=True, choices=DM_IDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--schema-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model file from data + schema")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out")
    p.add_argument("--kind", choices=["twostage", "logistic"], default="twostage")
    p.add_argument("--l2", type=float, default=1e-6, help="logistic baseline penalty")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="accuracy of a model file on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="repeated train/test benchmark")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--kind", choices=["twostage", "logistic", "tallying"], default="twostage")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--l2", type=float, default=1e-6)
    p.add_argument("--out")
    p.add_argument("--summary-out")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rank", help="best-choice distribution over a set of items")
    p.add_argument("--model", required=True)
    p.add_argument("--items", required=True, help="CSV with one column per feature")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("check-axioms", help="audit a model or decision maker against the axioms")
    p.add_argument("--model")
    p.add_argument("--dm", choices=DM_IDS)
    p.add_argument("--link", choices=["logistic", "probit"])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_axioms)

    p = sub.add_parser("export-curves", help="gauge-normalized editing curves as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_curves)
    return parser


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except FitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (TwoStageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
