"""LP-guided online bipartite matching under known i.i.d. arrivals.

The package solves a benchmark LP over the expected arrival rates, then
uses the LP solution to drive sampling policies whose per-agent match
probabilities come with multiplicative guarantees against the LP value.
Three objectives are supported: the minimum per-agent match probability,
the minimum group average, and a weighted sum.
"""
from .attenuation import (AttenuationTable, measure_activity, plan,
                          read_table, target_curve, write_table)
from .bounds import (BoundEvaluation, clairvoyant_oracle, make_example1,
                     make_example1_solution, make_example_worst,
                     minimize_sampab_bound, minimize_sampb_bound,
                     minimizer_set, sampab_bound, sampab_bound_closed,
                     sampb_bound)
from .errors import DataError
from .harness import TrialReport, run_experiment, sweep
from .ingest import (EdgeListGraph, balanced_partition, instance_digest,
                     instance_from_json, instance_to_json, read_edge_list,
                     read_instance, solution_digest, solution_from_json,
                     solution_to_json, trips_to_instance, write_instance)
from .instance import (ArrivalSequence, Instance, canonicalize,
                       generate_synthetic, is_canonical, make_instance,
                       sample_arrivals, validate)
from .lp import (GFM, IFM, OBJECTIVES, VOM, LpModel, LpSolution, SolverConfig,
                 build_lp, check_feasibility, default_k_cap, normalize_ifm,
                 separate, solve, solve_benchmark, subset_cap, to_lp_text)
from .policies import (PolicyConfig, attenuate, execute_trial, make_policy,
                       register_policy, run_trial, step)

__version__ = "0.1.0"

__all__ = [
    "ArrivalSequence", "AttenuationTable", "BoundEvaluation", "DataError",
    "EdgeListGraph", "GFM", "IFM", "Instance", "LpModel", "LpSolution",
    "OBJECTIVES", "PolicyConfig", "SolverConfig", "TrialReport", "VOM",
    "attenuate", "balanced_partition", "build_lp", "canonicalize",
    "check_feasibility", "clairvoyant_oracle", "default_k_cap",
    "execute_trial", "generate_synthetic", "instance_digest",
    "instance_from_json", "instance_to_json", "is_canonical",
    "make_example1", "make_example1_solution", "make_example_worst",
    "make_instance", "make_policy", "measure_activity",
    "minimize_sampab_bound", "minimize_sampb_bound", "minimizer_set",
    "normalize_ifm", "plan", "read_edge_list", "read_instance", "read_table",
    "register_policy", "run_experiment", "run_trial", "sampab_bound",
    "sampab_bound_closed", "sampb_bound", "sample_arrivals", "separate",
    "solution_digest", "solution_from_json", "solution_to_json", "solve",
    "solve_benchmark", "step", "subset_cap", "sweep", "target_curve",
    "to_lp_text",
    "trips_to_instance", "validate", "write_instance", "write_table",
]
