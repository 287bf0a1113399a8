"""Continuous relaxation of the triple-selection problem (HiGHS dual simplex)."""
from __future__ import annotations

from typing import Collection, Mapping

import numpy as np
from scipy.optimize import linprog

from ..errors import LpInfeasible
from .p1 import CAPACITY_RTOL, P1Problem, loads

ZERO_CUTOFF = 1e-9


def solve_lp_relaxation(p1: P1Problem, fixed_ones: Mapping[str, int] | None = None,
                        excluded: Collection[int] = ()) -> np.ndarray:
    """Vertex-optimal fractional theta over the free variables.

    Variables in ``fixed_ones`` (client -> var) are pinned to 1 and the rest of
    their client's variables to 0; ``excluded`` variables are pinned to 0.
    Variables with non-positive omega are left out of the LP: in a packing
    LP they sit at 0 in every optimum, so dropping them only shrinks the
    problem.
    """
    fixed_ones = dict(fixed_ones or {})
    theta = np.zeros(p1.num_vars)
    for v in fixed_ones.values():
        theta[v] = 1.0

    site_used, group_load = loads(fixed_ones.values(), p1)
    site_res = {s: p1.site_capacity[s] - site_used.get(s, 0) for s in p1.site_capacity}
    group_res = {g: p1.link_capacity[g] - group_load.get(g, 0.0) for g in p1.link_capacity}
    if any(r < 0 for r in site_res.values()) or any(
            r < -CAPACITY_RTOL * max(1.0, p1.link_capacity[g]) for g, r in group_res.items()):
        raise LpInfeasible("pinned variables already violate a capacity")

    excluded = set(excluded)
    free = [v for v in range(p1.num_vars)
            if p1.triples[v].client not in fixed_ones and v not in excluded and p1.omega[v] > 0]
    if not free:
        return theta

    a_full, labels = p1.constraint_matrix()
    bounds = {"c": lambda key: 1.0,
              "s": lambda key: float(site_res[key]),
              "e": lambda key: max(0.0, group_res[key])}
    rhs = np.array([bounds[kind](key) for kind, key in labels])
    a_ub = a_full[:, free].tocsr()
    used = np.diff(a_ub.indptr) > 0
    res = linprog(-p1.omega[free], A_ub=a_ub[used], b_ub=rhs[used], bounds=(0.0, 1.0),
                  method="highs-ds")
    if res.status != 0:
        raise LpInfeasible(f"relaxation failed: {res.message}")
    x = np.clip(res.x, 0.0, 1.0)
    x[x < ZERO_CUTOFF] = 0.0
    x[x > 1.0 - ZERO_CUTOFF] = 1.0
    theta[free] = x
    return theta
