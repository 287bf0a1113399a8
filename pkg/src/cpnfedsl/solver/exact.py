"""Branch-and-bound over per-client choices: one triple or nothing."""
from __future__ import annotations

import math

from ..errors import BudgetExceeded
from .p1 import LoadTracker, P1Problem, RoundedSolution, slack_report

DEFAULT_BUDGET = 2 ** 20


def search_space(p1: P1Problem) -> int:
    """Number of complete assignments once dominated (negative-omega) triples are dropped."""
    size = 1
    for vs in p1.by_client.values():
        size *= 1 + sum(1 for v in vs if p1.omega[v] >= 0)
    return size


def exact_solve(p1: P1Problem, budget: int | None = DEFAULT_BUDGET) -> RoundedSolution:
    """Globally optimal selection.

    Triples with negative omega can never improve on leaving their client out,
    so they are dropped up front. Clients are branched in descending order of
    their best omega; options are tried best-first with "nothing" last, which
    makes the first optimum found the one admitting zero-omega triples.
    """
    if budget is not None and search_space(p1) > budget:
        raise BudgetExceeded(f"{search_space(p1)} combinations exceed budget {budget}")

    options = {c: sorted((v for v in vs if p1.omega[v] >= 0), key=lambda v: (-p1.omega[v], p1.triples[v]))
               for c, vs in p1.by_client.items()}
    order = sorted((c for c in options if options[c]), key=lambda c: (-p1.omega[options[c][0]], c))
    # optimistic completion value from depth d onward
    tail = [0.0] * (len(order) + 1)
    for d in range(len(order) - 1, -1, -1):
        tail[d] = tail[d + 1] + p1.omega[options[order[d]][0]]

    best_val = -math.inf
    best: list[int] = []
    chosen: list[int] = []
    tracker = LoadTracker(p1)

    def dfs(d: int, value: float) -> None:
        nonlocal best_val, best
        if value + tail[d] <= best_val:
            return
        if d == len(order):
            best_val, best = value, list(chosen)
            return
        for v in options[order[d]]:
            if not tracker.fits(v):
                continue
            saved = (dict(tracker.site_used), dict(tracker.group_load))
            tracker.add(v)
            chosen.append(v)
            dfs(d + 1, value + p1.omega[v])
            chosen.pop()
            tracker.site_used, tracker.group_load = saved
        dfs(d + 1, value)

    dfs(0, 0.0)
    chosen_sorted = sorted(best)
    return RoundedSolution(chosen_sorted, p1.objective(chosen_sorted), slack_report(chosen_sorted, p1))
