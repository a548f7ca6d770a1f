"""Command line front end.

Subcommands:
    gt run        sweep the threshold grid with seeded Monte Carlo trials and
                  write trials.csv / bounds.csv / cdf.csv (plus figures)
    gt bounds     emit the bound curves only
    gt enumerate  exact expected-test oracle for small configurations
    gt report     re-render figures from a directory of previously written CSVs

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import bounds as bounds_mod
from .errors import GroupTestingError, InvalidParameter
from .harness import (
    BoundsRow,
    CdfTable,
    ExperimentConfig,
    aggregate_cdf,
    bounds_table,
    emit_csv,
    emit_partition_csv,
    emit_testlog_csv,
    load_config_file,
    run_experiment,
    _cell_population,
    _pipeline_config,
)
from .search import (
    STRATEGIES,
    canonical_strategy,
    expected_tests_enumeration,
    prepare,
)
from .priors import load_population, stats


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract reserves 2 for
    # runtime failures, so remap flag misuse to the config-error code.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_population_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None, help="item count (default 500)")
    p.add_argument("--mu", type=float, default=None, help="target expected defectives (default 8)")
    p.add_argument("--alpha", type=float, default=None, help="Dirichlet concentration (default 1.0)")
    p.add_argument("--probs-file", default=None,
                   help="one-probability-per-line file; overrides the Dirichlet draw")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=None, help="single truncation threshold")
    p.add_argument("--theta-grid", default=None,
                   help="comma-separated thresholds (default: 10 log-spaced in [1e-4, 1e-2])")
    p.add_argument("--pe", type=float, default=None,
                   help="target error budget; derives theta instead of sweeping it")
    p.add_argument("--gamma", default=None, help='ratio bound: "auto" or a float > 1 (default auto)')
    p.add_argument("--fullness", type=float, default=None, help="set-closing mass (default 0.5)")
    p.add_argument("--strategy", default=None,
                   help=f"search strategy: {'|'.join(STRATEGIES)} (default merged-pruning)")
    p.add_argument("--code", default=None, help="tree code: shannon-fano|huffman (default shannon-fano)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gt", description="Adaptive group testing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="Monte Carlo sweep", add_help=True)
    _add_population_flags(run)
    _add_pipeline_flags(run)
    run.add_argument("--trials", type=int, default=None, help="trials per grid point (default 1000)")
    run.add_argument("--budget", default=None, help="unlimited|tnec (default unlimited)")
    run.add_argument("--prior-mode", default=None, help="fixed|per-trial (default fixed)")
    run.add_argument("--workers", type=int, default=None, help="parallel cell workers (default 1)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--config", default=None, help="key=value config file; flags override it")
    run.add_argument("--dump-partition", action="store_true",
                     help="also write partition.csv for the first cell")
    run.add_argument("--dump-trees", action="store_true",
                     help="also write trees.txt (indented search trees) for the first cell")
    run.add_argument("--dump-testlog", action="store_true",
                     help="also write testlog.csv for the first trial")
    run.add_argument("--figures", action="store_true", help="render PNG figures next to the CSVs")

    bounds = sub.add_parser("bounds", help="bound curves only")
    _add_population_flags(bounds)
    _add_pipeline_flags(bounds)
    bounds.add_argument("--epsilon", type=float, default=0.1,
                        help="target error for the budget lower bound (default 0.1)")
    bounds.add_argument("--out", required=True, help="output directory")
    bounds.add_argument("--config", default=None, help="key=value config file; flags override it")
    bounds.add_argument("--figures", action="store_true", help="render PNG figures next to the CSVs")

    enum = sub.add_parser("enumerate", help="exact expected-test oracle for small populations")
    _add_population_flags(enum)
    _add_pipeline_flags(enum)
    enum.add_argument("--max-items", type=int, default=12,
                      help="cap on retained items for exhaustive enumeration (default 12)")

    report = sub.add_parser("report", help="render figures from existing CSVs")
    report.add_argument("directory", help="directory holding bounds.csv / cdf.csv")
    return parser


_CONFIG_KEYS = {
    "n": int, "mu": float, "alpha": float, "probs_file": str, "seed": int,
    "theta": float, "theta_grid": str, "pe": float, "gamma": str,
    "fullness": float, "strategy": str, "code": str, "trials": int,
    "budget": str, "prior_mode": str, "workers": int,
}


def _merge_config_file(args: argparse.Namespace) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    for key, raw in load_config_file(path).items():
        dest = key.replace("-", "_")
        if dest not in _CONFIG_KEYS:
            raise InvalidParameter(f"unknown config key {key!r}")
        if getattr(args, dest, None) is None:
            setattr(args, dest, _CONFIG_KEYS[dest](raw))


def _parse_theta_grid(args: argparse.Namespace) -> Optional[tuple[float, ...]]:
    if getattr(args, "theta", None) is not None and getattr(args, "theta_grid", None) is not None:
        raise InvalidParameter("give either --theta or --theta-grid, not both")
    if getattr(args, "theta", None) is not None:
        return (args.theta,)
    if getattr(args, "theta_grid", None) is not None:
        try:
            return tuple(float(v) for v in str(args.theta_grid).split(",") if v.strip())
        except ValueError as exc:
            raise InvalidParameter(f"bad theta grid: {exc}") from None
    return None


def _parse_gamma(raw) -> object:
    if raw is None or raw == "auto":
        return "auto"
    try:
        return float(raw)
    except ValueError:
        raise InvalidParameter(f'gamma must be "auto" or a float, got {raw!r}') from None


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    probs = None
    if getattr(args, "probs_file", None):
        probs = tuple(float(p) for p in load_population(args.probs_file).probs)
    grid = _parse_theta_grid(args)
    pe = getattr(args, "pe", None)
    if grid is not None and pe is not None:
        raise InvalidParameter("give either a theta grid or --pe, not both")
    kwargs = dict(
        n=args.n if args.n is not None else 500,
        mu=args.mu if args.mu is not None else 8.0,
        dirichlet_alpha=args.alpha if args.alpha is not None else 1.0,
        pe=pe,
        trials=getattr(args, "trials", None) or 1000,
        master_seed=args.seed if args.seed is not None else 0,
        strategy=canonical_strategy(args.strategy) if args.strategy else "merged-pruning",
        fullness=args.fullness if args.fullness is not None else 0.5,
        gamma=_parse_gamma(getattr(args, "gamma", None)),
        budget_mode=getattr(args, "budget", None) or "unlimited",
        prior_mode=getattr(args, "prior_mode", None) or "fixed",
        probs=probs,
        code=getattr(args, "code", None) or "shannon-fano",
        workers=getattr(args, "workers", None) or 1,
    )
    if grid is not None:
        kwargs["theta_grid"] = grid
    return ExperimentConfig(**kwargs)


def _render_figures(out_dir: str, rows, cdf_theta, cdf_alpha=None) -> None:
    from . import figures

    if rows:
        figures.plot_bounds(rows, os.path.join(out_dir, "fig_bounds.png"))
    if cdf_theta:
        figures.plot_cdf(cdf_theta, os.path.join(out_dir, "fig_cdf_theta.png"),
                         title="success CDF by threshold")
    if cdf_alpha:
        figures.plot_cdf(cdf_alpha, os.path.join(out_dir, "fig_cdf_alpha.png"),
                         title="success CDF by concentration")


def _cmd_run(args: argparse.Namespace) -> int:
    _merge_config_file(args)
    config = _experiment_config(args)
    os.makedirs(args.out, exist_ok=True)
    records = run_experiment(config)
    emit_csv(records, os.path.join(args.out, "trials.csv"))
    rows = bounds_table(config, records)
    emit_csv(rows, os.path.join(args.out, "bounds.csv"))
    tables = aggregate_cdf(records, key="theta")
    emit_csv(tables, os.path.join(args.out, "cdf.csv"))
    if args.dump_partition or args.dump_trees:
        pop = _cell_population(config, 0)
        plan = prepare(pop, _pipeline_config(config, config.cells[0]))
        if args.dump_partition:
            emit_partition_csv(plan, os.path.join(args.out, "partition.csv"))
        if args.dump_trees:
            from .codetree import format_tree

            with open(os.path.join(args.out, "trees.txt"), "w", encoding="utf-8") as fh:
                for set_id, tree in enumerate(plan.trees, start=1):
                    fh.write(f"set {set_id} (bin {tree.search_set.bin})\n")
                    fh.write(format_tree(tree) + "\n\n")
    if args.dump_testlog:
        emit_testlog_csv(config, os.path.join(args.out, "testlog.csv"))
    if args.figures:
        _render_figures(args.out, rows, tables)
    print(f"wrote {len(records)} trial records to {args.out}")
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    _merge_config_file(args)
    config = _experiment_config(args)
    os.makedirs(args.out, exist_ok=True)
    rows = bounds_table(config, records=None, epsilon=args.epsilon)
    emit_csv(rows, os.path.join(args.out, "bounds.csv"))
    if args.figures:
        _render_figures(args.out, rows, None)
    print(f"wrote {len(rows)} bound rows to {args.out}")
    return 0


def _cmd_enumerate(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    pop = _cell_population(config, 0)
    plan = prepare(pop, _pipeline_config(config, config.cells[0]))
    retained = sum(len(s) for s in plan.parts.sets)
    st = stats(pop)
    print(f"population n={pop.n} mu={st.mu:.6g} H={st.entropy_bits:.6g} bits")
    print(f"theta={plan.theta:.6g} gamma={plan.gamma:.6g} sets={plan.parts.g} retained={retained}")
    per_set_bound = sum(
        bounds_mod.set_test_bound(s, plan.gamma) for s in plan.parts.sets
    )
    print(f"sum of per-set bounds: {per_set_bound:.6g}")
    for strategy in STRATEGIES:
        value = expected_tests_enumeration(plan.parts, plan.trees, strategy,
                                           cap=args.max_items)
        print(f"expected tests [{strategy}]: {value:.6g}")
    return 0


def _read_bounds_csv(path) -> list[BoundsRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                BoundsRow(
                    theta=float(rec["theta"]),
                    t_lower=float(rec["t_lower_thm2"]),
                    t_bd=float(rec["t_bd"]),
                    t_nec=float(rec["t_nec"]),
                    empirical_mean=float(rec["empirical_mean"]) if rec["empirical_mean"] else None,
                    empirical_q95=float(rec["empirical_q95"]) if rec["empirical_q95"] else None,
                )
            )
    return rows


def _read_cdf_csv(path) -> list[CdfTable]:
    raw: dict[tuple[str, float], list[tuple[int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["key_name"], float(rec["key_value"]))
            raw.setdefault(key, []).append((int(rec["tests"]), float(rec["cum_success"])))
    tables = []
    for (name, value), points in sorted(raw.items()):
        points.sort()
        tables.append(
            CdfTable(
                key_name=name,
                key_value=value,
                tests=np.asarray([p[0] for p in points], dtype=np.int64),
                cum_success=np.asarray([p[1] for p in points], dtype=np.float64),
            )
        )
    return tables


def _cmd_report(args: argparse.Namespace) -> int:
    directory = args.directory
    bounds_path = os.path.join(directory, "bounds.csv")
    cdf_path = os.path.join(directory, "cdf.csv")
    rows = _read_bounds_csv(bounds_path) if os.path.exists(bounds_path) else []
    tables = _read_cdf_csv(cdf_path) if os.path.exists(cdf_path) else []
    if not rows and not tables:
        raise InvalidParameter(f"no bounds.csv or cdf.csv found under {directory}")
    theta_tables = [t for t in tables if t.key_name == "theta"]
    alpha_tables = [t for t in tables if t.key_name == "alpha"]
    _render_figures(directory, rows, theta_tables, alpha_tables)
    print(f"rendered figures in {directory}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "bounds": _cmd_bounds,
    "enumerate": _cmd_enumerate,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (InvalidParameter,) as exc:
        print(f"gt: config error: {exc}", file=sys.stderr)
        return 1
    except GroupTestingError as exc:
        print(f"gt: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gt: io error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
