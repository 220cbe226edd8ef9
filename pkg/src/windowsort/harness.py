"""Seeded Monte Carlo experiments over Window Sort and the merge sort baseline.

Every trial seed is derived from ``(master_seed, n, p, trial)`` alone, so
adding cells to a grid never changes the numbers of existing cells.  Input
permutations are uniform (seeded shuffle) unless ``Identity`` is requested;
the comparison table and the shuffle use independent streams of the trial
seed.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from . import bounds
from .metrics import dislocation
from .noise import Backend, build_comparison_table
from .wsort import TraceLevel, baseline_merge_sort_noisy, trace_violations, window_sort


class Algorithm(str, Enum):
    WINDOW_SORT = "window"
    MERGE_SORT = "merge"


class InputDistribution(str, Enum):
    UNIFORM = "uniform"
    IDENTITY = "identity"


TRIAL_COLUMNS = ["n", "p", "alpha", "trial", "seed", "max_dislocation", "total_dislocation",
                 "mean_dislocation", "comparisons", "elapsed_ms"]
AGGREGATE_COLUMNS = ["n", "p", "alpha", "trials", "mean_of_mean_dislocation",
                     "mean_max_over_log2n", "stddev_mean_dislocation"]


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple[int, ...]
    p_values: tuple[float, ...]
    alpha: float = 0.5
    trials: int = 100
    master_seed: int = 0
    algorithm: Algorithm = Algorithm.WINDOW_SORT
    input_distribution: InputDistribution = InputDistribution.UNIFORM
    backend: Backend = Backend.DENSE
    output_path: Path | None = None
    trace: TraceLevel = TraceLevel.OFF
    # Stop the window schedule before the first size below this; 1 is the
    # full schedule, 2 skips the last pass.
    min_window: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.n_values or not self.p_values:
            raise ValueError("need at least one n and one p")
        set_ = object.__setattr__
        set_(self, "n_values", tuple(int(n) for n in self.n_values))
        set_(self, "p_values", tuple(float(p) for p in self.p_values))
        set_(self, "algorithm", Algorithm(self.algorithm))
        set_(self, "input_distribution", InputDistribution(self.input_distribution))
        set_(self, "backend", Backend(self.backend))
        set_(self, "trace", TraceLevel(self.trace))
        if self.output_path is not None:
            set_(self, "output_path", Path(self.output_path))


@dataclass
class TrialResult:
    n: int
    p: float
    alpha: float
    trial_index: int
    seed: int
    max_dislocation: int
    total_dislocation: int
    mean_dislocation: float
    comparisons: int
    elapsed_ms: float
    violations: list[str] = field(default_factory=list)

    def row(self) -> list:
        return [self.n, repr(self.p), repr(self.alpha), self.trial_index, self.seed,
                self.max_dislocation, self.total_dislocation, repr(self.mean_dislocation),
                self.comparisons, f"{self.elapsed_ms:.3f}"]


@dataclass
class CellSummary:
    n: int
    p: float
    alpha: float
    trials: int
    mean_of_mean_dislocation: float
    mean_max_over_log2n: float
    stddev_mean_dislocation: float

    def row(self) -> list:
        return [self.n, repr(self.p), repr(self.alpha), self.trials,
                repr(self.mean_of_mean_dislocation), repr(self.mean_max_over_log2n),
                repr(self.stddev_mean_dislocation)]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]
    cells: list[CellSummary]

    def cell(self, n: int, p: float) -> CellSummary:
        for c in self.cells:
            if c.n == n and c.p == p:
                return c
        raise KeyError((n, p))

    @property
    def violations(self) -> list[str]:
        return [f"n={t.n} p={t.p} trial={t.trial_index}: {v}" for t in self.trials for v in t.violations]


def trial_seed(master_seed: int, n: int, p: float, trial: int) -> int:
    key = f"{master_seed}|{n}|{float(p)!r}|{trial}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def draw_input(n: int, seed: int, distribution: InputDistribution | str) -> np.ndarray:
    if InputDistribution(distribution) is InputDistribution.IDENTITY:
        return np.arange(n, dtype=np.int64)
    # stream 1 of the trial seed; the table hashes the seed itself
    return np.random.default_rng([seed, 1]).permutation(n).astype(np.int64)


def run_trial(n: int, p: float, alpha: float = 0.5, seed: int = 0,
              algorithm: Algorithm | str = Algorithm.WINDOW_SORT,
              input_distribution: InputDistribution | str = InputDistribution.UNIFORM,
              backend: Backend | str = Backend.DENSE,
              trace: TraceLevel | str = TraceLevel.OFF,
              min_window: float = 1.0, trial_index: int = 0) -> TrialResult:
    table = build_comparison_table(n, p, seed, backend)
    sigma = draw_input(n, seed, input_distribution)
    violations = []
    start = time.perf_counter()
    if Algorithm(algorithm) is Algorithm.WINDOW_SORT:
        result = window_sort(sigma, table, alpha, trace=trace, min_window=min_window)
        final = result.final
        if result.records:
            violations = trace_violations(result)
    else:
        final = baseline_merge_sort_noisy(sigma, table)
    elapsed = (time.perf_counter() - start) * 1000
    report = dislocation(final)
    return TrialResult(n, p, alpha, trial_index, seed, report.max, report.total, report.mean,
                       table.comparisons, elapsed, violations)


def _run_task(args) -> TrialResult:
    config, n, p, trial = args
    return run_trial(n, p, config.alpha, trial_seed(config.master_seed, n, p, trial),
                     config.algorithm, config.input_distribution, config.backend,
                     config.trace, config.min_window, trial)


def summarize(trials: list[TrialResult]) -> list[CellSummary]:
    cells: dict[tuple[int, float], list[TrialResult]] = {}
    for t in trials:
        cells.setdefault((t.n, t.p), []).append(t)
    out = []
    for (n, p), group in cells.items():
        means = np.array([t.mean_dislocation for t in group])
        maxes = np.array([t.max_dislocation for t in group], dtype=float)
        log2n = math.log2(n) if n > 1 else 1.0
        std = float(means.std(ddof=1)) if len(group) > 1 else 0.0
        out.append(CellSummary(n, p, group[0].alpha, len(group), float(means.mean()),
                               float((maxes / log2n).mean()), std))
    return out


def aggregate_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_aggregate{path.suffix or '.csv'}")


def _header_comment(config: ExperimentConfig, columns: list[str]) -> str:
    return (f"# columns: {', '.join(columns)}; algorithm={config.algorithm.value} "
            f"input={config.input_distribution.value} backend={config.backend.value} "
            f"min_window={config.min_window!r} master_seed={config.master_seed} "
            "max_over_log2n uses log base 2\n")


def write_csv(result: ExperimentResult, path: Path) -> tuple[Path, Path]:
    path = Path(path)
    agg = aggregate_path(path)
    with open(path, "w", newline="") as fh:
        fh.write(_header_comment(result.config, TRIAL_COLUMNS))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        writer.writerows(t.row() for t in result.trials)
    with open(agg, "w", newline="") as fh:
        fh.write(_header_comment(result.config, AGGREGATE_COLUMNS))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        writer.writerows(c.row() for c in result.cells)
    return path, agg


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every (n, p, trial) of the grid; write CSVs if ``output_path`` is set.

    Results come back in (n, p, trial) order whatever ``workers`` is.
    """
    if config.output_path is not None:
        parent = config.output_path.parent
        if not parent.is_dir():
            raise OSError(f"output directory {parent} does not exist")
    tasks = [(config, n, p, t) for n in config.n_values for p in config.p_values
             for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            trials = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        trials = [_run_task(task) for task in tasks]
    result = ExperimentResult(config, trials, summarize(trials))
    if config.output_path is not None:
        write_csv(result, config.output_path)
    return result


# --------------------------------------------------------------------------
# config files: one ``key = value`` per line
# --------------------------------------------------------------------------

def _parse_p(text: str) -> float:
    return float(Fraction(text.strip()))


def _split(text: str) -> list[str]:
    return [v for v in (s.strip() for s in text.split(",")) if v]


_PARSERS = {
    "n_values": lambda v: tuple(int(x) for x in _split(v)),
    "p_values": lambda v: tuple(_parse_p(x) for x in _split(v)),
    "alpha": _parse_p,
    "trials": int,
    "master_seed": int,
    "algorithm": Algorithm,
    "input_distribution": InputDistribution,
    "backend": Backend,
    "output_path": Path,
    "trace": TraceLevel,
    "min_window": float,
}


def parse_config(text: str, **overrides) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _PARSERS[key](value)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)


# --------------------------------------------------------------------------
# empirical swap probability against the universal lower bound
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SwapEstimate:
    n: int
    p: float
    gap: int
    trials: int
    pairs_per_trial: int
    inversions: int
    empirical: float
    sigma: float
    ci_lower: float
    confidence: float
    bound: float

    @property
    def samples(self) -> int:
        return self.trials * self.pairs_per_trial

    @property
    def consistent(self) -> bool:
        """Empirical rate is not below the bound by more than 3 sigma."""
        return self.empirical >= self.bound - 3 * self.sigma


def disjoint_pairs(n: int, gap: int) -> list[tuple[int, int]]:
    """Pairs ``(x, x + gap)`` sharing no element: blocks of ``2*gap`` ranks."""
    pairs = []
    for base in range(0, n, 2 * gap):
        for i in range(gap):
            x = base + i
            if x + gap < n:
                pairs.append((x, x + gap))
    return pairs


def estimate_swap_probability(n: int, p: float, gap: int, trials: int = 1000, master_seed: int = 0,
                              algorithm: Algorithm | str = Algorithm.WINDOW_SORT,
                              alpha: float = 0.5, confidence: float = 0.99,
                              backend: Backend | str = Backend.DENSE) -> SwapEstimate:
    if gap < 1:
        raise ValueError("gap must be >= 1")
    if trials < 100:
        raise ValueError("need at least 100 trials")
    pairs = disjoint_pairs(n, gap)
    if not pairs:
        raise ValueError(f"no pair at distance {gap} among {n} elements")
    lo = np.array([x for x, _ in pairs])
    hi = np.array([y for _, y in pairs])
    inversions = 0
    for t in range(trials):
        seed = trial_seed(master_seed, n, p, t)
        table = build_comparison_table(n, p, seed, backend)
        sigma = draw_input(n, seed, InputDistribution.UNIFORM)
        if Algorithm(algorithm) is Algorithm.WINDOW_SORT:
            final = window_sort(sigma, table, alpha).final
        else:
            final = baseline_merge_sort_noisy(sigma, table)
        pos = np.empty(n, dtype=np.int64)
        pos[final] = np.arange(n)
        inversions += int((pos[lo] > pos[hi]).sum())
    samples = trials * len(pairs)
    rate = inversions / samples
    sigma = math.sqrt(rate * (1 - rate) / samples)
    # one-sided Clopper-Pearson lower limit
    ci_lower = 0.0 if inversions == 0 else float(stats.beta.ppf(1 - confidence, inversions,
                                                                samples - inversions + 1))
    return SwapEstimate(n, p, gap, trials, len(pairs), inversions, rate, sigma, ci_lower,
                        confidence, bounds.swap_probability_lower_bound(p, gap))

