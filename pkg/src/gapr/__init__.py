"""Gathering-avoiding centralized pedestrian routing."""

from .netmodel import (Arc, GeneratorConfig, Instance, ODPair, Vertex, generate_instance,
                       load_instance, save_instance, validate)
from .pathgen import Path, ODPathSet, enumerate_eligible_paths, path_time, shortest_path
from .lpsolve import LpProblem, LpSolution, simplex_solve, to_standard_form, verify_optimality
from .assignment import (Assignment, ScenarioParams, build_gacpr_lp, solve_assignment,
                         user_equilibrium)
from .metrics import StatsRecord, compute_stats
from .sweep import SweepConfig, SweepReport, emit_csv, pareto_extract, run_sweep

__all__ = [
    "Arc", "GeneratorConfig", "Instance", "ODPair", "Vertex", "generate_instance",
    "load_instance", "save_instance", "validate",
    "Path", "ODPathSet", "enumerate_eligible_paths", "path_time", "shortest_path",
    "LpProblem", "LpSolution", "simplex_solve", "to_standard_form", "verify_optimality",
    "Assignment", "ScenarioParams", "build_gacpr_lp", "solve_assignment", "user_equilibrium",
    "StatsRecord", "compute_stats",
    "SweepConfig", "SweepReport", "emit_csv", "pareto_extract", "run_sweep",
]

__version__ = "0.1.0"
