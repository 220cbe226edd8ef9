"""Window Sort: sorting under recurrent random comparison errors."""

from .bounds import (BoundReport, OutOfGuaranteeRange, dislocation_bounds, f_of_p, g_of_p_alpha,
                     pr_w_bound, swap_probability_lower_bound)
from .harness import (Algorithm, ExperimentConfig, InputDistribution, TrialResult,
                      estimate_swap_probability, run_experiment, run_trial)
from .metrics import DislocationReport, check_star, dislocation, pair_inverted
from .noise import (Backend, ComparisonTable, ErrorModel, Outcome, TableTooLarge,
                    build_comparison_table, error_set_size)
from .wsort import (IterationRecord, SortTrace, TraceLevel, WindowSchedule,
                    baseline_merge_sort_noisy, compute_ranks, compute_wins, place_by_rank,
                    window_schedule, window_sort)

__version__ = "0.1.0"
