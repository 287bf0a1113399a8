"""Scheduler registry: Refinery, its ablations, heuristics and framework baselines.

A scheduler is any callable ``(instance, rng) -> Assignment``.
"""
from __future__ import annotations

from enum import Enum
from functools import partial
from typing import Callable, Iterable

import numpy as np

from .core import LOCAL, Assignment, Placement, SchedulingInstance, compute_mu, compute_phi
from .solver import (build_p1, dinkelbach, exact_solve, greedy_round, randomized_rounding,
                     to_assignment, weighted_randomized_rounding)
from .solver.exact import DEFAULT_BUDGET
from .solver.p1 import CAPACITY_RTOL

Scheduler = Callable[[SchedulingInstance, np.random.Generator], Assignment]


class SchedulerKind(str, Enum):
    REFINERY = "Refinery"
    NQ = "NQ"
    RCA = "RCA"
    RMP = "RMP"
    RPS = "RPS"
    MTU = "MTU"
    MCC = "MCC"
    MNC = "MNC"
    FEDAVG_LOCAL = "FedAvgLocal"
    SPLITFED_LIMITED = "SplitFedLimited"
    SPLITFED_UNLIMITED = "SplitFedUnlimited"
    WRR = "WRR"
    RR = "RR"
    EXACT = "Exact"

    @classmethod
    def parse(cls, name: str) -> "SchedulerKind":
        for kind in cls:
            if kind.value.lower() == name.lower() or kind.name.lower() == name.lower():
                return kind
        raise ValueError(f"unknown scheduler {name!r}")


def _refine(instance: SchedulingInstance, p1, inner, tol: float, max_iter: int,
            trace=None) -> Assignment:
    res = dinkelbach(p1, inner, tol, max_iter, trace)
    out = to_assignment(res.chosen, p1, instance)
    out.rho = res.rho
    return out


def refinery(instance, rng, *, tol=1e-6, max_iter=50, trace=None, inner=greedy_round,
             **p1_options) -> Assignment:
    return _refine(instance, build_p1(instance, **p1_options), inner, tol, max_iter, trace)


def no_queue(instance, rng, **kw) -> Assignment:
    """Refinery blind to the fairness queues (lambda = 0 in the optimizer only)."""
    return refinery(instance, rng, fairness_weight=0.0, **kw)


def random_admission(instance, rng, **kw) -> Assignment:
    """Admission drawn by client weight, placement left to Refinery.

    Draws as many clients as there are servers, with replacement and
    probabilities p_i, then places the distinct draws.
    """
    ids = [c.id for c in instance.clients]
    probs = np.array([c.weight for c in instance.clients])
    draws = min(len(ids), sum(s.num_servers for s in instance.sites))
    picked = {ids[i] for i in rng.choice(len(ids), size=draws, replace=True, p=probs / probs.sum())}
    return refinery(instance, rng, clients=sorted(picked), **kw)


def shared_cut(instance: SchedulingInstance, sites: Iterable[str] | None = None,
               cuts: Iterable[int] | None = None) -> int:
    """The cut letting the most clients meet the deadline on some allowed site (ties: smallest)."""
    site_ids = list(sites) if sites is not None else [s.id for s in instance.sites]
    cuts = sorted(cuts) if cuts is not None else instance.cuts
    task = instance.task

    def count(k):
        return sum(1 for c in instance.clients
                   if any(compute_mu(c, instance.site[s], k, task) < task.deadline for s in site_ids))
    return max(cuts, key=lambda k: (count(k), -k))


def single_partition(instance, rng, **kw) -> Assignment:
    return refinery(instance, rng, cut=shared_cut(instance), **kw)


def shortest_path_only(instance, rng, **kw) -> Assignment:
    return refinery(instance, rng, path_limit=1, **kw)


def randomized(instance, rng, *, weighted: bool, **kw) -> Assignment:
    rounder = weighted_randomized_rounding if weighted else randomized_rounding
    return refinery(instance, rng, inner=partial(rounder, rng=rng), **kw)


def exact(instance, rng, *, budget=DEFAULT_BUDGET, **kw) -> Assignment:
    return refinery(instance, rng, inner=partial(exact_solve, budget=budget), **kw)


class _Capacity:
    def __init__(self, instance: SchedulingInstance):
        self.instance = instance
        self.site_used: dict[str, int] = {}
        self.group_load: dict[str, float] = {}

    def site_free(self, site: str) -> bool:
        return self.site_used.get(site, 0) < self.instance.site[site].num_servers

    def path_fits(self, path, bandwidth: float) -> bool:
        topo = self.instance.topology
        for e in path.links:
            g = topo.links[e].group
            cap = topo.group_capacity[g]
            if self.group_load.get(g, 0.0) + bandwidth > cap + CAPACITY_RTOL * max(1.0, cap):
                return False
        return True

    def take(self, site: str, path, bandwidth: float) -> None:
        self.site_used[site] = self.site_used.get(site, 0) + 1
        for e in path.links:
            g = self.instance.topology.links[e].group
            self.group_load[g] = self.group_load.get(g, 0.0) + bandwidth


def sequential(instance: SchedulingInstance, clients: Iterable[str],
               site_order: Callable[[str], list[str]]) -> Assignment:
    """Admit clients in order on the first site (by ``site_order``) and path that fit.

    Each pair uses its bandwidth-minimizing cut and deadline-saturating bandwidth.
    """
    cap = _Capacity(instance)
    out = Assignment()
    for cid in clients:
        placed = None
        for sid in site_order(cid):
            if not cap.site_free(sid) or (cid, sid) not in instance.best:
                continue
            k, phi = instance.best[cid, sid]
            for path in instance.paths.get((cid, sid), []):
                if cap.path_fits(path, phi):
                    placed = Placement(sid, path, k, phi)
                    break
            if placed:
                break
        if placed:
            cap.take(placed.site, placed.path, placed.bandwidth)
            out.admitted[cid] = placed
        else:
            out.rejected.add(cid)
    return out


def max_training_utility(instance, rng, **_) -> Assignment:
    clients = sorted(instance.clients, key=lambda c: (c.capacity, c.id))
    sites = [s.id for s in sorted(instance.sites, key=lambda s: (-s.server_capacity, s.id))]
    return sequential(instance, [c.id for c in clients], lambda cid: sites)


def min_computing_cost(instance, rng, **_) -> Assignment:
    ids = [c.id for c in instance.clients]
    order = [ids[i] for i in rng.permutation(len(ids))]
    sites = [s.id for s in sorted(instance.sites, key=lambda s: (s.unit_server_cost, s.id))]
    return sequential(instance, order, lambda cid: sites)


def min_network_cost(instance, rng, **_) -> Assignment:
    def by_hops(cid):
        def hops(s):
            paths = instance.paths.get((cid, s.id), [])
            return paths[0].hops if paths else float("inf")
        return [s.id for s in sorted(instance.sites, key=lambda s: (hops(s), s.id))]
    return sequential(instance, [c.id for c in instance.clients], by_hops)


def fedavg_local(instance, rng, **_) -> Assignment:
    """Every client trains the whole model locally if it can finish by the deadline."""
    out = Assignment()
    k_local = instance.task.profile.num_layers
    for c in instance.clients:
        if instance.local_latency(c.id).total <= instance.task.deadline:
            out.admitted[c.id] = Placement(LOCAL, None, k_local, 0.0)
        else:
            out.rejected.add(c.id)
    return out


def _splitfed(instance: SchedulingInstance, limited: bool) -> Assignment:
    task = instance.task
    site = sorted(instance.sites, key=lambda s: (-s.server_capacity, s.id))[0]
    k = shared_cut(instance, [site.id], task.profile.ks)
    cap = _Capacity(instance)
    out = Assignment(infeasible_bound=not limited)
    for c in instance.clients:
        phi = compute_phi(c, site, k, task)
        paths = instance.paths.get((c.id, site.id), [])
        placed = None
        if phi is not None and paths:
            if not limited:
                placed = Placement(site.id, paths[0], k, phi)
            elif cap.site_free(site.id):
                for path in paths:
                    if cap.path_fits(path, phi):
                        placed = Placement(site.id, path, k, phi)
                        break
        if placed:
            cap.take(site.id, placed.path, phi)
            out.admitted[c.id] = placed
        else:
            out.rejected.add(c.id)
    return out


def splitfed_unlimited(instance, rng, **_) -> Assignment:
    """Largest site, one shared cut, no server or link limits: an upper bound, not a schedule."""
    return _splitfed(instance, limited=False)


def splitfed_limited(instance, rng, **_) -> Assignment:
    return _splitfed(instance, limited=True)


_REGISTRY: dict[SchedulerKind, Callable] = {
    SchedulerKind.REFINERY: refinery,
    SchedulerKind.NQ: no_queue,
    SchedulerKind.RCA: random_admission,
    SchedulerKind.RMP: single_partition,
    SchedulerKind.RPS: shortest_path_only,
    SchedulerKind.MTU: max_training_utility,
    SchedulerKind.MCC: min_computing_cost,
    SchedulerKind.MNC: min_network_cost,
    SchedulerKind.FEDAVG_LOCAL: fedavg_local,
    SchedulerKind.SPLITFED_LIMITED: splitfed_limited,
    SchedulerKind.SPLITFED_UNLIMITED: splitfed_unlimited,
    SchedulerKind.WRR: partial(randomized, weighted=True),
    SchedulerKind.RR: partial(randomized, weighted=False),
    SchedulerKind.EXACT: exact,
}

_OPTIMIZING = {SchedulerKind.REFINERY, SchedulerKind.NQ, SchedulerKind.RCA, SchedulerKind.RMP,
               SchedulerKind.RPS, SchedulerKind.WRR, SchedulerKind.RR, SchedulerKind.EXACT}


def make_scheduler(kind: SchedulerKind | str, **options) -> Scheduler:
    """Bind solver options (``tol``, ``max_iter``, ``trace``, ``budget``) where they apply."""
    kind = SchedulerKind.parse(kind) if isinstance(kind, str) else kind
    fn = _REGISTRY[kind]
    if kind not in _OPTIMIZING:
        options = {}
    elif kind is not SchedulerKind.EXACT:
        options.pop("budget", None)
    return partial(fn, **options)


def baseline_schedulers(kind: SchedulerKind | str, instance: SchedulingInstance,
                        rng: np.random.Generator, **options) -> Assignment:
    return make_scheduler(kind, **options)(instance, rng)
