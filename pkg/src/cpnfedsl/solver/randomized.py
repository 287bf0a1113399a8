"""One-shot randomized rounding of the relaxation (plain and omega-weighted)."""
from __future__ import annotations

import numpy as np

from .lp import solve_lp_relaxation
from .p1 import LoadTracker, P1Problem, RoundedSolution, slack_report


def round_relaxation(p1: P1Problem, theta: np.ndarray, rng: np.random.Generator,
                     weighted: bool) -> RoundedSolution:
    """Sample one triple (or none) per client from ``theta``, then drop picks that do not fit."""
    picks: list[int] = []
    for c in p1.clients:
        vs = p1.by_client[c]
        u = rng.random()  # one draw per client keeps streams aligned across variants
        if not vs:
            continue
        if weighted:
            scores = np.array([max(0.0, p1.omega[v] * theta[v]) for v in vs])
            total = scores.sum()
            if total <= 0:
                continue
            probs = scores / total
        else:
            probs = np.array([theta[v] for v in vs])
        cum = np.cumsum(probs)
        if weighted:
            cum[-1] = 1.0
        hit = np.searchsorted(cum, u, side="right")
        if hit < len(vs):
            picks.append(vs[hit])

    tracker = LoadTracker(p1)
    chosen = []
    for v in picks:  # already in client order
        if tracker.fits(v):
            tracker.add(v)
            chosen.append(v)
    return RoundedSolution(chosen, p1.objective(chosen), slack_report(chosen, p1))


def randomized_rounding(p1: P1Problem, rng: np.random.Generator) -> RoundedSolution:
    """Sample each client's triple with probability theta; leftover mass admits nobody."""
    return round_relaxation(p1, solve_lp_relaxation(p1), rng, weighted=False)


def weighted_randomized_rounding(p1: P1Problem, rng: np.random.Generator) -> RoundedSolution:
    """Sample each client's triple proportionally to its positive omega*theta."""
    return round_relaxation(p1, solve_lp_relaxation(p1), rng, weighted=True)
