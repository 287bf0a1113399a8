from .dinkelbach import DinkelbachResult, dinkelbach, dinkelbach_solve, to_assignment
from .exact import DEFAULT_BUDGET, exact_solve, search_space
from .greedy import greedy_round
from .lp import solve_lp_relaxation
from .p1 import P1Problem, RoundedSolution, Triple, build_p1, feasibility_check, slack_report
from .randomized import randomized_rounding, weighted_randomized_rounding

__all__ = [
    "DEFAULT_BUDGET", "DinkelbachResult", "P1Problem", "RoundedSolution", "Triple", "build_p1",
    "dinkelbach", "dinkelbach_solve", "exact_solve", "feasibility_check", "greedy_round",
    "randomized_rounding", "search_space", "slack_report", "solve_lp_relaxation",
    "to_assignment", "weighted_randomized_rounding",
]
