"""Dinkelbach outer loop: maximize utility/cost through a sequence of linear problems."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from ..core import Assignment, Placement, SchedulingInstance
from .greedy import greedy_round
from .p1 import P1Problem, RoundedSolution, build_p1

log = logging.getLogger(__name__)

InnerSolver = Callable[[P1Problem], RoundedSolution]


@dataclass
class DinkelbachResult:
    chosen: list[int]
    rho: float
    iterations: int
    converged: bool
    rhos: list[float] = field(default_factory=list)
    monotone: bool = True
    utility: float = 0.0
    cost: float = 0.0
    assignment: Assignment | None = None
    p1: P1Problem | None = None

    def __iter__(self):
        # lets callers unpack ``assignment, rho = dinkelbach_solve(...)``
        return iter((self.assignment, self.rho))


def dinkelbach(p1: P1Problem, inner: InnerSolver = greedy_round, tol: float = 1e-6,
               max_iter: int = 50, trace: Callable[[dict], None] | None = None) -> DinkelbachResult:
    """Iterate rho <- U/C of the inner solution until |U - rho*C| <= tol.

    When the very first inner solve admits nobody the result is an empty
    selection with rho = 0. A later empty solve has parametric value 0, which
    meets the stopping rule: an exact inner solver returns it when the empty
    set ties the incumbent at the optimal rho, so the best-ratio selection seen
    so far is returned as converged. Running out of iterations, or a rho value
    coming back (a heuristic inner solver can alternate between selections
    forever), returns that selection with ``converged = False``.
    """
    rho = 0.0
    rhos = [rho]
    incumbent: tuple[float, list[int], float, float] | None = None
    monotone = True
    for it in range(1, max_iter + 1):
        sol = inner(p1.at(rho))
        gamma, psi = p1.ratio_parts(sol.chosen)
        value = gamma - rho * psi
        if trace is not None:
            trace({"iteration": it, "rho": rho, "utility": gamma, "cost": psi, "objective": value,
                   "accepted": len(sol.chosen), "rejected": len(p1.clients) - len(sol.chosen)})
        if not sol.chosen:
            if incumbent is None:
                return DinkelbachResult([], 0.0, it, True, rhos, monotone, p1=p1)
            ratio, chosen, gamma, psi = incumbent
            return DinkelbachResult(chosen, ratio, it, True, rhos, monotone, gamma, psi, p1=p1)
        if psi <= 0:
            # a cost-free selection has unbounded ratio; nothing can beat it
            return DinkelbachResult(sol.chosen, math.inf, it, True, rhos, monotone, gamma, psi, p1=p1)
        ratio = gamma / psi
        if incumbent is None or ratio > incumbent[0]:
            incumbent = (ratio, sol.chosen, gamma, psi)
        if abs(value) <= tol:
            return DinkelbachResult(sol.chosen, ratio, it, True, rhos, monotone, gamma, psi, p1=p1)
        if ratio < rho:
            monotone = False
            log.debug("rho decreased from %r to %r at iteration %d", rho, ratio, it)
        if ratio in rhos:
            log.info("Dinkelbach cycle: rho %r revisited at iteration %d", ratio, it)
            break
        rho = ratio
        rhos.append(rho)
    else:
        it = max_iter
        log.warning("Dinkelbach stopped without convergence after %d iterations", it)
    ratio, chosen, gamma, psi = incumbent
    return DinkelbachResult(chosen, ratio, it, False, rhos, monotone, gamma, psi, p1=p1)


def to_assignment(chosen: list[int], p1: P1Problem, instance: SchedulingInstance) -> Assignment:
    """Expand selected triples with their optimal cut and deadline-saturating bandwidth."""
    admitted = {}
    for v in chosen:
        t = p1.triples[v]
        if p1.cut is not None:
            k, phi = p1.cut[v], float(p1.demand[v])
        else:
            k, phi = instance.best[t.client, t.site]
        path = instance.paths[t.client, t.site][t.path]
        admitted[t.client] = Placement(t.site, path, k, phi)
    rejected = {c.id for c in instance.clients} - set(admitted)
    return Assignment(admitted, rejected)


def dinkelbach_solve(instance: SchedulingInstance, tol: float = 1e-6, max_iter: int = 50,
                     inner_solver: InnerSolver = greedy_round,
                     trace: Callable[[dict], None] | None = None,
                     p1: P1Problem | None = None) -> DinkelbachResult:
    if p1 is None:
        p1 = build_p1(instance)
    result = dinkelbach(p1, inner_solver, tol, max_iter, trace)
    result.assignment = to_assignment(result.chosen, p1, instance)
    return result
