"""Shared builders and brute-force oracles for the test suite."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from cpnfedsl.core import ClientState, SchedulingInstance, SiteState, TaskConfig
from cpnfedsl.profile import LayerCut, ModelProfile
from cpnfedsl.solver.p1 import P1Problem, Triple, feasibility_check
from cpnfedsl.topology import build_path_set, build_topology


def simple_profile(cuts=((1, 50.0, 20.0, 4.0),), num_layers=None, model_size=0.0, local_density=None):
    layer_cuts = tuple(LayerCut(*c) for c in cuts)
    if num_layers is None:
        num_layers = max(c.k for c in layer_cuts) + 1
    if local_density is None:
        local_density = max(c.client_density + c.server_density for c in layer_cuts)
    return ModelProfile("toy", num_layers, layer_cuts, model_size, local_density)


def simple_task(profile=None, **kw) -> TaskConfig:
    fields = dict(profile=profile or simple_profile(), deadline=10.0, batch_size=10, epochs=1)
    fields.update(kw)
    return TaskConfig(**fields)


def star_instance(n_clients=2, n_sites=1, capacity=1000.0, cost=1.0, servers=4, task=None,
                  client_capacity=100.0, dataset=100, site_capacity=200.0, unit_cost=1.0,
                  weights=None, k_paths=2):
    """Clients and sites hanging off one router ``r``; each client also has a detour via ``r2``."""
    nodes = [("r", "router"), ("r2", "router")]
    links = [{"id": "B", "src": "r", "dst": "r2", "capacity": capacity, "cost": cost, "undirected": True}]
    cids = [f"c{i}" for i in range(n_clients)]
    sids = [f"s{j}" for j in range(n_sites)]
    for c in cids:
        nodes.append((c, "client"))
        links.append({"id": f"A{c}", "src": c, "dst": "r", "capacity": capacity, "cost": cost, "undirected": True})
    for s in sids:
        nodes.append((s, "site"))
        links.append({"id": f"S{s}", "src": "r", "dst": s, "capacity": capacity, "cost": cost, "undirected": True})
        links.append({"id": f"T{s}", "src": "r2", "dst": s, "capacity": capacity, "cost": cost, "undirected": True})
    topo = build_topology(nodes, links)
    paths = build_path_set(topo, cids, sids, k_paths)
    weights = weights or [1.0 / n_clients] * n_clients
    clients = [ClientState(c, w, dataset, client_capacity, 10.0) for c, w in zip(cids, weights)]
    sites = [SiteState(s, site_capacity, servers, unit_cost) for s in sids]
    return SchedulingInstance(topo, paths, clients, sites, task or simple_task())


def make_p1(spec, site_capacity, link_capacity, rho=0.0):
    """P1 from ``[(client, site, path, utility, cost, demand, groups), ...]``."""
    triples = [Triple(c, s, l) for c, s, l, *_ in spec]
    return P1Problem(triples, [r[3] for r in spec], [r[4] for r in spec], [r[5] for r in spec],
                     [tuple(r[6]) for r in spec], dict(site_capacity), dict(link_capacity),
                     sorted({r[0] for r in spec}), rho)


def all_selections(p1: P1Problem):
    """Every feasible selection: each client picks one of its variables or nothing."""
    choices = [[None] + p1.by_client[c] for c in p1.clients]
    for combo in itertools.product(*choices):
        chosen = [v for v in combo if v is not None]
        if feasibility_check(chosen, p1):
            yield chosen


def brute_force_objective(p1: P1Problem) -> float:
    return max(p1.objective(sel) for sel in all_selections(p1))


def brute_force_ratio(p1: P1Problem) -> float:
    best = 0.0
    for sel in all_selections(p1):
        u, c = p1.ratio_parts(sel)
        if sel and c > 0:
            best = max(best, u / c)
    return best


def random_p1(rng: np.random.Generator, n_clients=3, n_sites=2, n_paths=2, n_groups=3, rho=0.0,
              negative=False):
    spec = []
    for i in range(n_clients):
        u = float(rng.uniform(1, 10))
        for j in range(n_sites):
            for l in range(n_paths):
                if rng.random() < 0.2:
                    continue
                groups = sorted(set(f"g{g}" for g in rng.choice(n_groups, size=int(rng.integers(1, n_groups + 1)))))
                cost = float(rng.uniform(1, 10))
                spec.append((f"c{i}", f"s{j}", l, u if not negative else u - 5, cost,
                             float(rng.uniform(0.5, 3)), groups))
    if not spec:
        spec.append(("c0", "s0", 0, 1.0, 1.0, 1.0, ["g0"]))
    sites = {f"s{j}": int(rng.integers(1, 3)) for j in range(n_sites)}
    links = {f"g{g}": float(rng.uniform(1.5, 6)) for g in range(n_groups)}
    return make_p1(spec, sites, links, rho)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def close(a, b, rel=1e-9):
    return math.isclose(a, b, rel_tol=rel, abs_tol=rel)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the terminal summary, then return the flag unchanged."""
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
