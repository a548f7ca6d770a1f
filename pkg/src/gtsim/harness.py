"""Monte Carlo experiment driver: seeded sweeps, aggregation, CSV emission.

Seeding discipline: every draw derives from (master_seed, cell_index, trial_id)
plus a stream tag, so records are reproducible byte for byte regardless of
worker count. In fixed prior mode the population of a cell is drawn once from
(master_seed, cell_index); in per-trial mode each trial draws a fresh one.

CSV schemas (header row included, deterministic order and formatting):

    trials.csv  trial_id,theta,alpha,seed,tests_used,defectives,found,success,t_bd,t_nec
    bounds.csv  theta,t_lower_thm2,t_bd,t_nec,empirical_mean,empirical_q95
    cdf.csv     key_name,key_value,tests,cum_success
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import bounds as bounds_mod
from .errors import EmptyInput, InvalidParameter, IoError
from .priors import Population, make_population, sample_defectivity, sample_dirichlet_priors, stats
from .rng import scalar_seed
from .search import (
    MERGED_PRUNING,
    Plan,
    PipelineConfig,
    TestOracle,
    canonical_strategy,
    execute,
    prepare,
)

PRIOR_STREAM = 0
TRUTH_STREAM = 1

DEFAULT_THETA_GRID = tuple(float(t) for t in np.logspace(-4, -2, 10))


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 500
    mu: float = 8.0
    dirichlet_alpha: float = 1.0
    theta_grid: tuple[float, ...] = DEFAULT_THETA_GRID
    pe: Optional[float] = None          # alternative to theta_grid: derive theta per cell
    trials: int = 1000
    master_seed: int = 0
    strategy: str = MERGED_PRUNING
    fullness: float = 0.5
    gamma: Union[str, float] = "auto"
    budget_mode: str = "unlimited"      # "unlimited" | "tnec"
    prior_mode: str = "fixed"           # "fixed" | "per-trial"
    probs: Optional[tuple[float, ...]] = None  # explicit priors; overrides the Dirichlet draw
    code: str = "shannon-fano"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameter(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            raise InvalidParameter(f"master_seed must be >= 0, got {self.master_seed}")
        if self.pe is None:
            if not self.theta_grid:
                raise InvalidParameter("theta_grid must be non-empty (or set pe)")
            for t in self.theta_grid:
                if not 0.0 < t < 0.5:
                    raise InvalidParameter(f"theta grid values must be in (0, 1/2), got {t}")
        elif not 0.0 < self.pe < 1.0:
            raise InvalidParameter(f"pe must be in (0, 1), got {self.pe}")
        if self.budget_mode not in ("unlimited", "tnec"):
            raise InvalidParameter(f"budget_mode must be unlimited|tnec, got {self.budget_mode}")
        if self.prior_mode not in ("fixed", "per-trial"):
            raise InvalidParameter(f"prior_mode must be fixed|per-trial, got {self.prior_mode}")
        if self.workers < 1:
            raise InvalidParameter(f"workers must be >= 1, got {self.workers}")
        canonical_strategy(self.strategy)

    @property
    def cells(self) -> tuple[Optional[float], ...]:
        """Grid of theta values; a single None cell when pe drives the threshold."""
        return (None,) if self.pe is not None else self.theta_grid


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    theta: float
    dirichlet_alpha: float
    seed: int
    tests_used: int
    num_true_defectives: int
    num_found: int
    success: bool
    truncation_miss: bool
    t_bd: float
    t_nec: float


@dataclass(frozen=True)
class CdfTable:
    """Empirical CDF of test counts among successful trials, normalized by all
    trials so the plateau equals the success rate."""

    key_name: str
    key_value: float
    tests: np.ndarray
    cum_success: np.ndarray

    @property
    def success_rate(self) -> float:
        return float(self.cum_success[-1]) if self.cum_success.size else 0.0


def _cell_population(config: ExperimentConfig, cell_index: int) -> Population:
    if config.probs is not None:
        return make_population(config.probs)
    return sample_dirichlet_priors(
        config.n, config.mu, config.dirichlet_alpha,
        seed=(config.master_seed, cell_index, PRIOR_STREAM),
    )


def _trial_population(config: ExperimentConfig, trial_seed: int) -> Population:
    if config.probs is not None:
        return make_population(config.probs)
    return sample_dirichlet_priors(
        config.n, config.mu, config.dirichlet_alpha, seed=(trial_seed, PRIOR_STREAM)
    )


def _pipeline_config(config: ExperimentConfig, theta: Optional[float]) -> PipelineConfig:
    return PipelineConfig(
        theta=theta,
        pe=config.pe if theta is None else None,
        gamma=config.gamma,
        fullness=config.fullness,
        strategy=config.strategy,
        code=config.code,
    )


def _plan_bounds(plan: Plan) -> tuple[float, float]:
    if not plan.parts.sets:
        return math.nan, math.nan
    report = bounds_mod.bernstein_report(plan.parts, plan.trees, plan.pop, plan.theta)
    return report.t_bd, report.t_nec


def _run_cell(config: ExperimentConfig, cell_index: int, theta: Optional[float]) -> list[TrialRecord]:
    records: list[TrialRecord] = []
    plan = None
    cell_bounds = (math.nan, math.nan)
    if config.prior_mode == "fixed":
        pop = _cell_population(config, cell_index)
        plan = prepare(pop, _pipeline_config(config, theta))
        cell_bounds = _plan_bounds(plan)
    for trial in range(config.trials):
        seed = scalar_seed((config.master_seed, cell_index, trial))
        if config.prior_mode == "fixed":
            trial_plan, (t_bd, t_nec) = plan, cell_bounds
        else:
            pop = _trial_population(config, seed)
            trial_plan = prepare(pop, _pipeline_config(config, theta))
            t_bd, t_nec = _plan_bounds(trial_plan)
        truth = sample_defectivity(trial_plan.pop, seed=(seed, TRUTH_STREAM))
        oracle = TestOracle(truth)
        run = execute(trial_plan, oracle)
        tests, success = run.total_tests, run.success
        if config.budget_mode == "tnec" and math.isfinite(t_nec):
            # The protocol is deterministic, so halting at the budget is
            # equivalent to truncating the completed run's test sequence.
            if run.total_tests > t_nec:
                tests, success = int(math.floor(t_nec)), False
        records.append(
            TrialRecord(
                trial_id=trial,
                theta=trial_plan.theta,
                dirichlet_alpha=config.dirichlet_alpha,
                seed=seed,
                tests_used=tests,
                num_true_defectives=truth.count,
                num_found=len(run.found),
                success=success,
                truncation_miss=bool(run.truncation_missed),
                t_bd=t_bd,
                t_nec=t_nec,
            )
        )
    return records


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """Run every (cell, trial) pair; output order is (cell, trial) regardless
    of worker count. Failures propagate rather than yielding partial results."""
    cells = list(enumerate(config.cells))
    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_cell, *zip(*[(config, i, t) for i, t in cells])))
    else:
        chunks = [_run_cell(config, i, t) for i, t in cells]
    return [rec for chunk in chunks for rec in chunk]


def aggregate_cdf(records: Sequence[TrialRecord], key: str = "theta") -> list[CdfTable]:
    """One CDF table per distinct key value ("theta" or "alpha")."""
    if not records:
        raise EmptyInput("no records to aggregate")
    if key not in ("theta", "alpha"):
        raise InvalidParameter(f"key must be theta|alpha, got {key!r}")
    attr = "theta" if key == "theta" else "dirichlet_alpha"
    groups: dict[float, list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault(getattr(rec, attr), []).append(rec)
    tables = []
    for value in sorted(groups):
        recs = groups[value]
        wins = np.sort(np.asarray([r.tests_used for r in recs if r.success], dtype=np.int64))
        uniq = np.unique(wins)
        counts = np.searchsorted(wins, uniq, side="right")
        tables.append(
            CdfTable(
                key_name=key,
                key_value=float(value),
                tests=uniq,
                cum_success=counts / float(len(recs)),
            )
        )
    return tables


@dataclass(frozen=True)
class BoundsRow:
    theta: float
    t_lower: float
    t_bd: float
    t_nec: float
    empirical_mean: Optional[float]
    empirical_q95: Optional[float]


def bounds_table(
    config: ExperimentConfig,
    records: Optional[Sequence[TrialRecord]] = None,
    epsilon: float = 0.1,
) -> list[BoundsRow]:
    """Per-cell bound curves, with empirical columns when records are given.

    With records, the budget lower bound uses epsilon = 1 - success rate of
    the cell; without records it uses the supplied epsilon.
    """
    rows = []
    by_cell: dict[int, list[TrialRecord]] = {}
    if records:
        if config.pe is not None:
            by_cell[0] = list(records)
        else:
            theta_to_cell = {t: i for i, t in enumerate(config.theta_grid)}
            for rec in records:
                by_cell.setdefault(theta_to_cell[rec.theta], []).append(rec)
    for cell_index, theta in enumerate(config.cells):
        pop = _cell_population(config, cell_index)
        plan = prepare(pop, _pipeline_config(config, theta))
        recs = by_cell.get(cell_index)
        if config.prior_mode == "fixed" or not recs:
            t_bd, t_nec = _plan_bounds(plan)
            entropy = stats(pop).entropy_bits
        else:
            t_bd = float(np.mean([r.t_bd for r in recs]))
            t_nec = float(np.mean([r.t_nec for r in recs]))
            entropy = float(
                np.mean(
                    [stats(_trial_population(config, r.seed)).entropy_bits for r in recs]
                )
            )
        if recs:
            tests = np.asarray([r.tests_used for r in recs], dtype=np.float64)
            eps = 1.0 - float(np.mean([r.success for r in recs]))
            rows.append(
                BoundsRow(
                    theta=plan.theta,
                    t_lower=bounds_mod.budget_lower_bound(entropy, eps),
                    t_bd=t_bd,
                    t_nec=t_nec,
                    empirical_mean=float(np.mean(tests)),
                    empirical_q95=float(np.quantile(tests, 0.95)),
                )
            )
        else:
            rows.append(
                BoundsRow(
                    theta=plan.theta,
                    t_lower=bounds_mod.budget_lower_bound(entropy, epsilon),
                    t_bd=t_bd,
                    t_nec=t_nec,
                    empirical_mean=None,
                    empirical_q95=None,
                )
            )
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


TRIALS_HEADER = ["trial_id", "theta", "alpha", "seed", "tests_used",
                 "defectives", "found", "success", "t_bd", "t_nec"]
BOUNDS_HEADER = ["theta", "t_lower_thm2", "t_bd", "t_nec", "empirical_mean", "empirical_q95"]
CDF_HEADER = ["key_name", "key_value", "tests", "cum_success"]


def emit_csv(data, path) -> None:
    """Write trial records, bound rows, or CDF tables with their pinned schema."""
    items = list(data)
    if not items:
        raise EmptyInput("nothing to write")
    first = items[0]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if isinstance(first, TrialRecord):
                writer.writerow(TRIALS_HEADER)
                for r in items:
                    writer.writerow(_fmt(v) for v in (
                        r.trial_id, r.theta, r.dirichlet_alpha, r.seed, r.tests_used,
                        r.num_true_defectives, r.num_found, r.success, r.t_bd, r.t_nec,
                    ))
            elif isinstance(first, BoundsRow):
                writer.writerow(BOUNDS_HEADER)
                for r in items:
                    writer.writerow(_fmt(v) for v in (
                        r.theta, r.t_lower, r.t_bd, r.t_nec, r.empirical_mean, r.empirical_q95,
                    ))
            elif isinstance(first, CdfTable):
                writer.writerow(CDF_HEADER)
                for table in items:
                    for t, c in zip(table.tests, table.cum_success):
                        writer.writerow(_fmt(v) for v in (
                            table.key_name, table.key_value, t, c,
                        ))
            else:
                raise InvalidParameter(f"cannot emit rows of type {type(first).__name__}")
    except OSError as exc:
        raise IoError(f"failed writing {path}: {exc}") from exc


def emit_partition_csv(plan: Plan, path) -> None:
    """Debug dump of the prepared partition: set_id,bin,item_id,p_i."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["set_id", "bin", "item_id", "p_i"])
            for set_id, sset in enumerate(plan.parts.sets, start=1):
                for item, p in zip(sset.items, sset.probs):
                    writer.writerow([set_id, sset.bin, int(item), repr(float(p))])
    except OSError as exc:
        raise IoError(f"failed writing {path}: {exc}") from exc


def run_trial_with_log(config: ExperimentConfig, cell_index: int = 0,
                       trial: int = 0) -> tuple[list[tuple[int, tuple[tuple[int, ...], int]]], Plan]:
    """Re-run one trial with query logging; yields (set_id, (pool, outcome)) pairs."""
    theta = config.cells[cell_index]
    seed = scalar_seed((config.master_seed, cell_index, trial))
    if config.prior_mode == "fixed":
        pop = _cell_population(config, cell_index)
    else:
        pop = _trial_population(config, seed)
    plan = prepare(pop, _pipeline_config(config, theta))
    truth = sample_defectivity(pop, seed=(seed, TRUTH_STREAM))
    oracle = TestOracle(truth, keep_log=True)
    run = execute(plan, oracle)
    tagged = []
    cursor = 0
    for set_id, per_set in enumerate(run.per_set, start=1):
        for entry in oracle.log[cursor : cursor + per_set.tests]:
            tagged.append((set_id, entry))
        cursor += per_set.tests
    return tagged, plan


def emit_testlog_csv(config: ExperimentConfig, path, cell_index: int = 0, trial: int = 0) -> None:
    """Debug dump of one trial's query sequence: trial,set_id,query_items,outcome."""
    tagged, _ = run_trial_with_log(config, cell_index, trial)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial", "set_id", "query_items", "outcome"])
            for set_id, (pool, outcome) in tagged:
                writer.writerow([trial, set_id, "|".join(str(i) for i in pool), outcome])
    except OSError as exc:
        raise IoError(f"failed writing {path}: {exc}") from exc


def load_config_file(path) -> dict[str, str]:
    """Parse a plain key=value file (# comments and blank lines ignored)."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise InvalidParameter(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, _, value = text.partition("=")
            out[key.strip()] = value.strip()
    return out
