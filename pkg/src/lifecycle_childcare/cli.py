"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_params, to_config_text
from .data import FILE_NAMES, DataError, load_tables, synth_defaults
from .gmm import estimate, moment_ages
from .params import EstimatedParams
from .simulate import (
    COUNTERFACTUALS,
    InfeasibleStateError,
    aggregate_runs,
    child_penalty,
    named_counterfactual,
    run_types,
)
from .validation import compare_penalty, run_checks

log = logging.getLogger("lifecycle_childcare")

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2


def _parse_set(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat 'namespace.key = value' config file")
    common.add_argument("--preset", choices=("paper", "desk"), default="desk")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--data-dir", type=Path, help="directory with input CSV tables")
    for name in FILE_NAMES:
        common.add_argument(f"--{name}", type=Path, help=f"{name} CSV (overrides --data-dir)")
    common.add_argument("--workers", type=int, default=1, help="threads for the state loop")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lifecycle-childcare", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve every household type and dump policies")
    sub.add_parser("simulate", parents=[common], help="age profiles per type and aggregated")
    est = sub.add_parser("estimate", parents=[common], help="GMM estimation of preference parameters")
    est.add_argument("--max-evals", type=int, default=2000)
    est.add_argument("--step", type=float, default=0.1, help="initial simplex step, relative")
    est.add_argument("--restarts", type=int, default=8, help="fresh simplices after a stall")
    cf = sub.add_parser("counterfactual", parents=[common], help="paired baseline/counterfactual profiles")
    cf.add_argument("name", choices=(*COUNTERFACTUALS, "all"))
    sub.add_parser("validate", parents=[common], help="invariant suite and child-penalty comparison")
    sub.add_parser("export-defaults", parents=[common], help="write synthetic tables and default config")
    return p


def _load(args):
    params = load_params(args.config, args.preset, _parse_set(args.set))
    paths = {n: getattr(args, n) for n in FILE_NAMES if getattr(args, n) is not None}
    tables = load_tables(paths, args.data_dir, params.calibrated)
    return params, tables


def cmd_solve(args, params, tables) -> int:
    runs = run_types(params, tables, workers=args.workers)
    for r in runs:
        r.solution.to_csv(args.out / f"solution_{r.model.htype.name}.csv")
    return EXIT_OK


def cmd_simulate(args, params, tables) -> int:
    runs = run_types(params, tables, workers=args.workers)
    for r in runs:
        r.result.profile.to_csv(args.out / f"profile_{r.model.htype.name}.csv")
    aggregate_runs(runs, params).to_csv(args.out / "profile_aggregate.csv")
    with_child = aggregate_runs(run_types(params, tables, "always", args.workers), params)
    childless = aggregate_runs(run_types(params, tables, "never", args.workers), params)
    child_penalty(with_child, childless, params.calibrated.j_birth).to_csv(args.out / "child_penalty.csv")
    return EXIT_OK


def cmd_estimate(args, params, tables) -> int:
    res = estimate(params.estimated, params, tables, tables.timeuse, max_evals=args.max_evals,
                   step=args.step, restarts=args.restarts, log_path=args.out / "estimation_log.csv",
                   workers=args.workers)
    res.to_csv(args.out / "estimation_result.csv")
    if res.moments is not None:
        res.moments.to_csv(args.out / "moments.csv")
    print(f"objective {res.objective_value:.6g} after {res.n_evals} evaluations "
          f"({'converged' if res.converged else 'not converged'})")
    return EXIT_OK


def cmd_counterfactual(args, params, tables) -> int:
    names = list(COUNTERFACTUALS) if args.name == "all" else [args.name]
    for name in names:
        named_counterfactual(name, params, tables, args.workers).write(args.out)
    return EXIT_OK


def cmd_validate(args, params, tables) -> int:
    runs = run_types(params, tables, workers=args.workers)
    checks = run_checks(runs, params, include_state_count=args.preset == "paper")
    with_child = aggregate_runs(run_types(params, tables, "always", args.workers), params)
    childless = aggregate_runs(run_types(params, tables, "never", args.workers), params)
    series = child_penalty(with_child, childless, params.calibrated.j_birth)
    lines = [c.line() for c in checks]
    lines += ["", "child penalty, model versus empirical"] + compare_penalty(series, tables.penalty)
    report = "\n".join(lines) + "\n"
    (args.out / "validation_report.txt").write_text(report, encoding="utf-8")
    print(report, end="")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def cmd_export_defaults(args, params, tables) -> int:
    synth_defaults(params.calibrated).write(args.out)
    (args.out / "defaults.cfg").write_text(to_config_text(params), encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve, "simulate": cmd_simulate, "estimate": cmd_estimate,
    "counterfactual": cmd_counterfactual, "validate": cmd_validate,
    "export-defaults": cmd_export_defaults,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        params, tables = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, params, tables)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
