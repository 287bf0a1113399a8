"""Synthetic network scenarios built on the bundled NSFNET / USNET backbones."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import SiteState
from .errors import LayoutMismatch
from .topology import NodeKind, Path, Topology, build_path_set, build_topology, bundled_topology_data

# Table of the six computing sites: raw capacity, utilization, unit server cost
SITE_TABLE = (
    (4400.0, 0.05, 800.0),
    (4400.0, 0.10, 800.0),
    (4400.0, 0.15, 800.0),
    (6500.0, 0.05, 1500.0),
    (6500.0, 0.10, 1500.0),
    (6500.0, 0.15, 1500.0),
)


@dataclass(frozen=True)
class Layout:
    topology: str
    num_sites: int
    client_nodes: int | None  # None: every non-site node hosts clients
    clients_per_node: int
    servers_per_site: int
    k_paths: int = 3


LAYOUTS = {
    "NS1": Layout("NSFNET", 6, None, 6, 8),
    "NS2": Layout("USNET", 6, 16, 1, 3),
    "NS3": Layout("USNET", 6, 16, 3, 8),
    "NS4": Layout("USNET", 6, 3, 16, 8),
    # desk-scale instances small enough for the exact solver
    "TINY": Layout("NSFNET", 3, 2, 3, 1, k_paths=2),
    "MICRO": Layout("NSFNET", 2, 2, 2, 1, k_paths=2),
}


@dataclass(frozen=True)
class ScenarioConfig:
    layout: str | Layout = "NS1"  # a name from LAYOUTS or an ad-hoc Layout
    topology: str | None = None  # defaults to the layout's backbone
    seed: int = 0
    rounds: int = 30
    k_paths: int | None = None
    servers_per_site: int | None = None
    site_table: tuple[tuple[float, float, float], ...] = SITE_TABLE
    link_capacity_range: tuple[float, float] = (3000.0, 5000.0)
    link_cost_range: tuple[float, float] = (1.0, 10.0)
    client_capacity_tiers: tuple[float, ...] = (400.0, 800.0, 1200.0)
    client_utilization_range: tuple[float, float] = (0.02, 0.20)
    dataset_range: tuple[int, int] = (4000, 20000)
    ps_bandwidth_range: tuple[float, float] = (200.0, 1000.0)
    client_comm_cost: float = 0.0
    site_comm_cost: float = 0.0

    @property
    def spec(self) -> Layout:
        if isinstance(self.layout, Layout):
            base = self.layout
        else:
            try:
                base = LAYOUTS[self.layout.upper()]
            except KeyError:
                raise LayoutMismatch(f"unknown layout {self.layout!r}") from None
        if self.topology is not None and self.topology.upper() != base.topology:
            raise LayoutMismatch(f"layout {self.layout} runs on {base.topology}, not {self.topology}")
        over = {}
        if self.k_paths is not None:
            over["k_paths"] = self.k_paths
        if self.servers_per_site is not None:
            over["servers_per_site"] = self.servers_per_site
        return replace(base, **over)


@dataclass(frozen=True)
class BaseClient:
    id: str
    node: str
    capacity_tier: float
    dataset_size: int
    weight: float


@dataclass
class Scenario:
    config: ScenarioConfig
    topology: Topology
    paths: dict[tuple[str, str], list[Path]]
    clients: list[BaseClient]
    sites: list[SiteState]
    site_nodes: list[str] = field(default_factory=list)


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.uniform(lo, hi))


def generate_scenario(config: ScenarioConfig, rng: np.random.Generator) -> Scenario:
    """Place sites, attach clients and sample link/client parameters.

    Site nodes are drawn at random; the i-th drawn node receives row i of the
    site table (the tiny layouts draw their rows at random). Every client
    hangs off its router through its own access link, sampled like any
    backbone link.
    """
    spec = config.spec
    data = bundled_topology_data(spec.topology)
    backbone = [n["id"] for n in data["nodes"]]
    if spec.num_sites > len(config.site_table):
        raise LayoutMismatch("more sites than rows in the site table")

    site_nodes = [backbone[i] for i in rng.choice(len(backbone), spec.num_sites, replace=False)]
    rest = [n for n in backbone if n not in site_nodes]
    if spec.client_nodes is None:
        hosts = rest
    else:
        if spec.client_nodes > len(rest):
            raise LayoutMismatch(f"{spec.topology} has only {len(rest)} non-site nodes")
        hosts = sorted(rest[i] for i in rng.choice(len(rest), spec.client_nodes, replace=False))
    if spec.num_sites == len(config.site_table):
        rows = list(range(spec.num_sites))
    else:
        rows = [int(r) for r in rng.choice(len(config.site_table), spec.num_sites, replace=False)]

    lo_b, hi_b = config.link_capacity_range
    lo_c, hi_c = config.link_cost_range
    nodes = [{"id": n, "kind": NodeKind.SITE if n in site_nodes else NodeKind.ROUTER} for n in backbone]
    links = [dict(l, capacity=_uniform(rng, lo_b, hi_b), cost=_uniform(rng, lo_c, hi_c))
             for l in data["links"]]

    base_clients = []
    sizes = []
    num = 0
    for host in hosts:
        for _ in range(spec.clients_per_node):
            num += 1
            cid = f"c{num:03d}"
            nodes.append({"id": cid, "kind": NodeKind.CLIENT})
            links.append({"id": f"A{num:03d}", "src": cid, "dst": host, "undirected": True,
                          "capacity": _uniform(rng, lo_b, hi_b), "cost": _uniform(rng, lo_c, hi_c)})
            tier = float(rng.choice(config.client_capacity_tiers))
            size = int(rng.integers(config.dataset_range[0], config.dataset_range[1] + 1))
            sizes.append(size)
            base_clients.append((cid, host, tier, size))
    total = float(sum(sizes))
    clients = [BaseClient(cid, host, tier, size, size / total) for cid, host, tier, size in base_clients]

    topo = build_topology(nodes, links)
    sites = []
    for node, row in zip(site_nodes, rows):
        cap, util, cost = config.site_table[row]
        sites.append(SiteState(node, cap * util, spec.servers_per_site, cost, config.site_comm_cost))
    sites.sort(key=lambda s: s.id)
    paths = build_path_set(topo, [c.id for c in clients], [s.id for s in sites], spec.k_paths)
    return Scenario(config, topo, paths, clients, sites, sorted(site_nodes))
