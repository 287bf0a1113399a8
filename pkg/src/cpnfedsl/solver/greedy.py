"""Greedy rounding: relax, sort by omega*theta, pin the first candidate that fits, repeat."""
from __future__ import annotations

from .lp import solve_lp_relaxation
from .p1 import LoadTracker, P1Problem, RoundedSolution, slack_report


def greedy_round(p1: P1Problem, positive_only: bool = False) -> RoundedSolution:
    """Round the relaxation one client at a time.

    Each pass re-solves the relaxation with accepted clients pinned and
    rejected clients removed, then walks the undecided clients' variables in
    descending ``omega * theta`` order (ties: larger omega, then triple order)
    and accepts the first whose addition keeps every capacity satisfied.
    Candidates are not filtered by sign: a variable the relaxation left at
    zero is still tried once everything ahead of it has been tried.
    A client whose every variable fails the check is rejected.

    ``positive_only`` switches to the filtered variant that never considers a
    variable with ``omega <= 0``; such a variant can only raise the
    objective, at the price of admitting far fewer clients.
    """
    accepted: dict[str, int] = {}
    # infeasibility only grows as clients are accepted, so a failed variable stays failed
    dead: set[int] = {v for v in range(p1.num_vars) if p1.omega[v] <= 0} if positive_only else set()
    rejected: set[str] = {c for c, vs in p1.by_client.items() if all(v in dead for v in vs)}
    undecided = set(p1.by_client) - rejected
    tracker = LoadTracker(p1)
    excluded: set[int] = {v for c in rejected for v in p1.by_client[c]}

    while undecided:
        theta = solve_lp_relaxation(p1, accepted, excluded)
        cands = [v for c in undecided for v in p1.by_client[c]]
        cands.sort(key=lambda v: (-p1.omega[v] * theta[v], -p1.omega[v], p1.triples[v]))
        for v in cands:
            if v in dead:
                continue
            if tracker.fits(v):
                c = p1.triples[v].client
                accepted[c] = v
                tracker.add(v)
                undecided.discard(c)
                break
            dead.add(v)
        for c in sorted(undecided):
            if all(v in dead for v in p1.by_client[c]):
                undecided.discard(c)
                rejected.add(c)
                excluded.update(p1.by_client[c])

    chosen = sorted(accepted.values())
    return RoundedSolution(chosen, p1.objective(chosen), slack_report(chosen, p1))
