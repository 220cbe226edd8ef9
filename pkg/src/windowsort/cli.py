"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bounds
from .harness import (Algorithm, ExperimentConfig, InputDistribution, _parse_p, draw_input,
                      estimate_swap_probability, load_config, run_experiment, trial_seed,
                      write_csv)
from .metrics import default_w_star, dislocation, tightest_low_error_check, check_low_error_bound
from .noise import Backend, build_comparison_table
from .wsort import TraceLevel, baseline_merge_sort_noisy, trace_violations, window_sort

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _probability(text: str) -> float:
    try:
        return _parse_p(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a probability: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def _p_list(text: str) -> tuple[float, ...]:
    return tuple(_probability(v) for v in text.split(",") if v.strip())


def _common(sub, *, lists=False):
    if lists:
        sub.add_argument("--n", type=_int_list, help="comma-separated element counts")
        sub.add_argument("--p", type=_p_list, help="comma-separated error probabilities (1/8 ok)")
    else:
        sub.add_argument("--n", type=int, required=True)
        sub.add_argument("--p", type=_probability, required=True)
    sub.add_argument("--alpha", type=_probability, default=None, help="window shrink rate (default 1/2)")
    sub.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="windowsort", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = subs.add_parser("sort", help="sort one seeded instance and report dislocation")
    _common(s)
    s.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="window")
    s.add_argument("--backend", choices=[b.value for b in Backend], default="dense")
    s.add_argument("--input", choices=[d.value for d in InputDistribution], default="uniform")
    s.add_argument("--trace", choices=[t.value for t in TraceLevel], default="off")
    s.add_argument("--min-window", type=float, default=1.0)

    e = subs.add_parser("experiment", help="run a seeded (n, p) grid and write CSV")
    _common(e, lists=True)
    e.add_argument("--config", type=Path, help="key = value file; flags override it")
    e.add_argument("--trials", type=int)
    e.add_argument("--algorithm", choices=[a.value for a in Algorithm])
    e.add_argument("--backend", choices=[b.value for b in Backend])
    e.add_argument("--input", choices=[d.value for d in InputDistribution])
    e.add_argument("--trace", choices=[t.value for t in TraceLevel])
    e.add_argument("--min-window", type=float)
    e.add_argument("--out", type=Path, help="trial CSV; aggregates go to <stem>_aggregate.csv")
    e.add_argument("--workers", type=int, default=1)

    i = subs.add_parser("invariants", help="check per-iteration bounds on traced runs")
    _common(i, lists=True)
    i.add_argument("--trials", type=int, default=20)

    lb = subs.add_parser("lower-bound", help="empirical swap rate vs the universal lower bound")
    _common(lb)
    lb.add_argument("--gap", type=int, default=1)
    lb.add_argument("--trials", type=int, default=1000)
    lb.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="window")

    b = subs.add_parser("bounds", help="print closed-form dislocation bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--p", type=_probability, required=True)
    b.add_argument("--alpha", type=_probability, default=0.5)
    return parser


def _cmd_sort(args) -> int:
    alpha = 0.5 if args.alpha is None else args.alpha
    seed = 0 if args.seed is None else args.seed
    table = build_comparison_table(args.n, args.p, seed, args.backend)
    sigma = draw_input(args.n, seed, args.input)
    problems = []
    if args.algorithm == Algorithm.WINDOW_SORT.value:
        result = window_sort(sigma, table, alpha, trace=args.trace, min_window=args.min_window)
        final = result.final
        problems = trace_violations(result)
    else:
        final = baseline_merge_sort_noisy(sigma, table)
    rep = dislocation(final)
    print(f"n={args.n} p={args.p!r} alpha={alpha!r} seed={seed} algorithm={args.algorithm}")
    print(f"max={rep.max} total={rep.total} mean={rep.mean!r} comparisons={table.comparisons}")
    for line in problems:
        print(f"VIOLATION {line}")
    return EXIT_INVARIANT if problems else EXIT_OK


def _cmd_experiment(args) -> int:
    overrides = dict(n_values=args.n, p_values=args.p, alpha=args.alpha, trials=args.trials,
                     master_seed=args.seed, algorithm=args.algorithm, backend=args.backend,
                     input_distribution=args.input, trace=args.trace, min_window=args.min_window,
                     output_path=args.out)
    if args.config is not None:
        config = load_config(args.config, **overrides)
    else:
        if not args.n or not args.p:
            raise UsageError("experiment needs --config or both --n and --p")
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if config.output_path is not None and not config.output_path.parent.is_dir():
        raise OSError(f"cannot write to {config.output_path}")
    result = run_experiment(config, workers=args.workers)
    print("n,p,alpha,trials,mean_of_mean_dislocation,mean_max_over_log2n,stddev_mean_dislocation")
    for c in result.cells:
        print(",".join(str(v) for v in c.row()))
    if config.output_path is not None:
        trials_csv, agg_csv = write_csv(result, config.output_path)
        print(f"wrote {trials_csv} ({len(result.trials)} rows) and {agg_csv}")
    for line in result.violations:
        print(f"VIOLATION {line}")
    return EXIT_INVARIANT if result.violations else EXIT_OK


def _cmd_invariants(args) -> int:
    n_values = args.n or (64, 256, 1024)
    p_values = args.p or (1 / 64, 1 / 32, 1 / 8)
    alpha = 0.5 if args.alpha is None else args.alpha
    master = 0 if args.seed is None else args.seed
    bad = 0
    for n in n_values:
        for p in p_values:
            runs = applicable = 0
            for t in range(args.trials):
                seed = trial_seed(master, n, p, t)
                table = build_comparison_table(n, p, seed)
                result = window_sort(draw_input(n, seed, "uniform"), table, alpha, trace="full")
                problems = trace_violations(result)
                if alpha == 0.5:
                    sizes = [r.w for r in result.records]
                    checks = [tightest_low_error_check(result, table)]
                    if any(w >= 8 for w in sizes):
                        checks.append(check_low_error_bound(result, table, default_w_star(sizes)))
                    for chk in checks:
                        applicable += chk.condition_holds
                        if chk.violated:
                            problems.append(f"max dislocation {chk.max_dislocation} > 9*w*={chk.bound}")
                for line in problems:
                    print(f"VIOLATION n={n} p={p!r} trial={t}: {line}")
                bad += bool(problems)
                runs += 1
            print(f"n={n} p={p!r} runs={runs} low-error-checks-applicable={applicable}")
    print("OK" if not bad else f"{bad} run(s) with violations")
    return EXIT_INVARIANT if bad else EXIT_OK


def _cmd_lower_bound(args) -> int:
    est = estimate_swap_probability(args.n, args.p, args.gap, args.trials,
                                    0 if args.seed is None else args.seed, args.algorithm,
                                    0.5 if args.alpha is None else args.alpha)
    print(f"n={est.n} p={est.p!r} gap={est.gap} trials={est.trials} pairs/trial={est.pairs_per_trial}")
    print(f"empirical={est.empirical!r} sigma={est.sigma!r} "
          f"ci_lower({est.confidence})={est.ci_lower!r}")
    print(f"lower_bound={est.bound!r} consistent={est.consistent}")
    if est.p == 0:
        print("note: the bound (1/2)(p/(1-p))^(2*gap-1) is 0 at p=0")
    return EXIT_OK if est.consistent else EXIT_INVARIANT


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.6g}"


def _cmd_bounds(args) -> int:
    rep = bounds.dislocation_bounds(args.n, args.p, args.alpha)
    name = "f" if args.alpha == 0.5 else "g"
    print(f"n={rep.n} p={rep.p!r} alpha={rep.alpha!r} regime={rep.regime}")
    print(f"{name}={_fmt(rep.f)}")
    print(f"max_dislocation_bound={_fmt(rep.max_disl_bound)}")
    print(f"total_dislocation_bound={_fmt(rep.total_disl_bound)} "
          f"per_element={_fmt(rep.per_element_bound)}")
    return EXIT_OK


COMMANDS = {
    "sort": _cmd_sort,
    "experiment": _cmd_experiment,
    "invariants": _cmd_invariants,
    "lower-bound": _cmd_lower_bound,
    "bounds": _cmd_bounds,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
