"""The linearized triple-selection problem and its shared helpers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ..core import SchedulingInstance

# relative slack granted to floating-point capacity comparisons
CAPACITY_RTOL = 1e-9


@dataclass(frozen=True, order=True)
class Triple:
    client: str
    site: str
    path: int


@dataclass
class P1Problem:
    """One binary variable per feasible (client, site, path).

    ``utility[v]`` is the scaled client utility, ``cost[v]`` the per-variable
    cost (server + bandwidth at the deadline-saturating allocation) and
    ``demand[v]`` the bandwidth it pins on every capacity group in
    ``groups[v]``. ``omega = utility - rho * cost``.
    """

    triples: list[Triple]
    utility: np.ndarray
    cost: np.ndarray
    demand: np.ndarray
    groups: list[tuple[str, ...]]
    site_capacity: dict[str, int]
    link_capacity: dict[str, float]
    clients: list[str]
    rho: float = 0.0
    cut: list[int] | None = None  # partition point behind each variable's demand
    omega: np.ndarray = field(init=False, repr=False)
    _matrix: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.utility = np.asarray(self.utility, dtype=float)
        self.cost = np.asarray(self.cost, dtype=float)
        self.demand = np.asarray(self.demand, dtype=float)
        order = sorted(range(len(self.triples)), key=lambda v: self.triples[v])
        if order != list(range(len(order))):
            self.triples = [self.triples[v] for v in order]
            self.utility, self.cost, self.demand = (a[order] for a in (self.utility, self.cost, self.demand))
            self.groups = [self.groups[v] for v in order]
            if self.cut is not None:
                self.cut = [self.cut[v] for v in order]
        if not (np.all(np.isfinite(self.utility)) and np.all(np.isfinite(self.cost))
                and np.all(self.demand > 0) and np.all(np.isfinite(self.demand))):
            raise ValueError("P1 coefficients must be finite with positive demand")
        self.clients = sorted(set(self.clients) | {t.client for t in self.triples})
        self.by_client: dict[str, list[int]] = {c: [] for c in self.clients}
        for v, t in enumerate(self.triples):
            self.by_client[t.client].append(v)
        self.omega = self.utility - self.rho * self.cost

    @property
    def num_vars(self) -> int:
        return len(self.triples)

    def at(self, rho: float) -> "P1Problem":
        """Same structure, different Dinkelbach parameter."""
        out = P1Problem(self.triples, self.utility, self.cost, self.demand, self.groups,
                        self.site_capacity, self.link_capacity, self.clients, rho, self.cut)
        out._matrix = self._matrix
        return out

    def constraint_matrix(self):
        """Sparse (CSC) packing matrix over all variables plus its row labels.

        Rows are ``("c", client)``, ``("s", site)`` and ``("e", group)``; the
        right-hand side depends on what is pinned and is built by the caller.
        """
        if self._matrix is None:
            from scipy.sparse import coo_matrix
            labels: dict[tuple[str, str], int] = {}
            rows, cols, vals = [], [], []
            for v, t in enumerate(self.triples):
                entries = [(("c", t.client), 1.0), (("s", t.site), 1.0)]
                entries += [(("e", g), float(self.demand[v])) for g in self.groups[v]]
                for key, val in entries:
                    rows.append(labels.setdefault(key, len(labels)))
                    cols.append(v)
                    vals.append(val)
            a = coo_matrix((vals, (rows, cols)), shape=(len(labels), self.num_vars)).tocsc()
            self._matrix = (a, list(labels))
        return self._matrix

    def objective(self, chosen: Iterable[int]) -> float:
        return float(sum(self.omega[v] for v in chosen))

    def ratio_parts(self, chosen: Iterable[int]) -> tuple[float, float]:
        chosen = list(chosen)
        return float(sum(self.utility[v] for v in chosen)), float(sum(self.cost[v] for v in chosen))


@dataclass
class RoundedSolution:
    chosen: list[int]
    objective: float
    slack: dict[str, float] = field(default_factory=dict)

    def triples(self, p1: P1Problem) -> list[Triple]:
        return [p1.triples[v] for v in self.chosen]


def build_p1(instance: SchedulingInstance, rho: float = 0.0, *,
             path_limit: int | None = None, clients: Iterable[str] | None = None,
             cut: int | None = None, fairness_weight: float | None = None) -> P1Problem:
    """Variables for every (client, site, path) whose pair can meet the deadline.

    By default each pair uses its bandwidth-minimizing cut. The keyword
    arguments exist for the ablation baselines: keep only the first
    ``path_limit`` paths, only the listed ``clients``, force one shared
    ``cut``, or value clients with a different fairness weight.
    """
    triples, util, cost, demand, groups, cuts = [], [], [], [], [], []
    topo = instance.topology
    task = instance.task
    allowed = set(clients) if clients is not None else None
    lam = task.fairness_weight if fairness_weight is None else fairness_weight
    for c in instance.clients:
        if allowed is not None and c.id not in allowed:
            continue
        u = task.utility_scale * c.weight + lam * c.queue
        for s in instance.sites:
            if cut is None:
                best = instance.best.get((c.id, s.id))
            else:
                phi = instance.phi.get((c.id, s.id, cut))
                best = (cut, phi) if phi is not None and phi > 0 else None
            if best is None:
                continue
            k, phi = best
            alpha = instance.server_cost(c.id, s.id)
            paths = instance.paths.get((c.id, s.id), [])
            if path_limit is not None:
                paths = paths[:path_limit]
            for path in paths:
                triples.append(Triple(c.id, s.id, path.index))
                util.append(u)
                cost.append(alpha + instance.path_unit_cost(path) * phi)
                demand.append(phi)
                groups.append(tuple(topo.links[e].group for e in path.links))
                cuts.append(k)
    members = [c.id for c in instance.clients if allowed is None or c.id in allowed]
    return P1Problem(triples, util, cost, demand, groups,
                     {s.id: s.num_servers for s in instance.sites},
                     dict(topo.group_capacity), members, rho, cuts)


def _within(load: float, cap: float) -> bool:
    return load <= cap + CAPACITY_RTOL * max(1.0, abs(cap))


def loads(chosen: Iterable[int], p1: P1Problem) -> tuple[dict[str, int], dict[str, float]]:
    site_used: dict[str, int] = {}
    group_load: dict[str, float] = {}
    for v in chosen:
        t = p1.triples[v]
        site_used[t.site] = site_used.get(t.site, 0) + 1
        for g in p1.groups[v]:
            group_load[g] = group_load.get(g, 0.0) + p1.demand[v]
    return site_used, group_load


def feasibility_check(fixed: Mapping[str, int] | Iterable[int], p1: P1Problem) -> bool:
    """Direct evaluation of the three packing constraints on fully fixed triples."""
    chosen = list(fixed.values()) if isinstance(fixed, Mapping) else list(fixed)
    owners = [p1.triples[v].client for v in chosen]
    if len(owners) != len(set(owners)):
        return False
    site_used, group_load = loads(chosen, p1)
    if any(n > p1.site_capacity[s] for s, n in site_used.items()):
        return False
    return all(_within(load, p1.link_capacity[g]) for g, load in group_load.items())


def slack_report(chosen: Iterable[int], p1: P1Problem) -> dict[str, float]:
    site_used, group_load = loads(chosen, p1)
    report = {f"site:{s}": float(p1.site_capacity[s] - site_used.get(s, 0)) for s in sorted(p1.site_capacity)}
    report.update({f"link:{g}": p1.link_capacity[g] - load for g, load in sorted(group_load.items())})
    return report


class LoadTracker:
    """Incremental version of :func:`feasibility_check` for rounding loops."""

    def __init__(self, p1: P1Problem):
        self.p1 = p1
        self.site_used: dict[str, int] = {}
        self.group_load: dict[str, float] = {}

    def fits(self, v: int) -> bool:
        p1 = self.p1
        t = p1.triples[v]
        if self.site_used.get(t.site, 0) + 1 > p1.site_capacity[t.site]:
            return False
        return all(_within(self.group_load.get(g, 0.0) + p1.demand[v], p1.link_capacity[g])
                   for g in p1.groups[v])

    def add(self, v: int) -> None:
        t = self.p1.triples[v]
        self.site_used[t.site] = self.site_used.get(t.site, 0) + 1
        for g in self.p1.groups[v]:
            self.group_load[g] = self.group_load.get(g, 0.0) + self.p1.demand[v]
