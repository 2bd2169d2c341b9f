"""Command line entry point: ``rainpipe explore|run|evaluate|synth``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, RainpipeError


def _cmd_explore(args) -> int:
    from .experiment import explore

    res = explore(args.data, args.out)
    cc = res["class_counts"]
    print(f"rows: {res['n_rows']} (dropped {res['n_dropped_unlabeled']} unlabeled)")
    print(f"class counts: No={cc['n_negative']} Yes={cc['n_positive']}")
    print(f"{'column':<15}{'kind':<15}{'count':>8}{'missing%':>10}{'mean':>12}{'std':>12}"
          f"{'min':>10}{'max':>10}")
    for row in res["summary"]:
        cells = [row[k] for k in ("missing_pct", "mean", "std", "min", "max")]
        fmt = ["" if c == "" else f"{c:.2f}" for c in cells]
        print(f"{row['column']:<15}{row['kind']:<15}{row['count']:>8}{fmt[0]:>10}{fmt[1]:>12}"
              f"{fmt[2]:>12}{fmt[3]:>10}{fmt[4]:>10}")
    if args.out:
        print(f"wrote summary.csv, correlation.csv and class_counts.csv to {args.out}")
    return 0


def _cmd_run(args) -> int:
    from .experiment import load_config, preset, run_experiment

    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
        for name in ("data", "seed", "out"):
            if getattr(args, name) is not None:
                field = {"data": "data_path", "out": "report_dir"}.get(name, name)
                setattr(cfg, field, getattr(args, name))
    elif args.preset:
        if args.data is None:
            raise ConfigError("--preset needs --data")
        cfg = preset(args.preset, args.data, seed=42 if args.seed is None else args.seed,
                     report_dir=args.out)
    else:
        raise ConfigError("give --config or --preset")
    if args.max_rows is not None:
        cfg.max_rows = args.max_rows
    if args.knn_eval_cap is not None:
        cfg.knn_eval_cap = args.knn_eval_cap
    if args.n_jobs is not None:
        cfg.n_jobs = args.n_jobs
    if args.models:
        wanted = set(args.models.split(","))
        cfg.models = [m for m in cfg.models if m.label in wanted or m.kind in wanted]
    run = run_experiment(cfg)
    print(f"wrote {run.out_dir}")
    for name in run.ranking:
        r = next(x for x in run.results if x.name == name)
        auc = "n/a" if r.holdout.auc is None else f"{r.holdout.auc:.4f}"
        print(f"  {name:<16} holdout acc {r.holdout.accuracy:.4f}  auc {auc}  "
              f"cv {r.cv_mean:.4f} ± {r.cv_std:.4f}")
    return 0


def _cmd_evaluate(args) -> int:
    from .experiment import evaluate_saved

    reports = evaluate_saved(args.run, args.data)
    rows = {name: rep.as_row() for name, rep in reports.items()}
    print(json.dumps(rows, indent=2))
    return 0


def _cmd_synth(args) -> int:
    from .synthetic import write_synthetic_csv

    write_synthetic_csv(args.out, n_rows=args.rows, seed=args.seed, with_risk=not args.no_risk)
    print(f"wrote {args.rows} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rainpipe", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("explore", help="summary statistics and correlations of a CSV")
    e.add_argument("--data", required=True)
    e.add_argument("--out", default=None, help="directory for summary/correlation CSVs")
    e.set_defaults(func=_cmd_explore)

    r = sub.add_parser("run", help="run an experiment from a config or a preset")
    r.add_argument("--config")
    r.add_argument("--preset", choices=["experiment1", "experiment2", "experiment3"])
    r.add_argument("--data")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--max-rows", type=int, help="stratified subsample before splitting")
    r.add_argument("--knn-eval-cap", type=int, help="max held-out rows scored by KNN per split")
    r.add_argument("--n-jobs", type=int)
    r.add_argument("--models", help="comma-separated model names or kinds to keep")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("evaluate", help="apply a saved run to another labelled CSV")
    v.add_argument("--run", required=True, help="run directory written by 'run'")
    v.add_argument("--data", required=True)
    v.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("synth", help="write a synthetic weather CSV")
    s.add_argument("--out", required=True)
    s.add_argument("--rows", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-risk", action="store_true", help="omit the RISK_MM column")
    s.set_defaults(func=_cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FloatingPointError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 4
    except RainpipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
