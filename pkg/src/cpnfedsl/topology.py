"""CPN data plane: directed graph of clients, routers and computing sites.

Undirected physical links are stored as two directed links that share one
capacity group, so a bandwidth budget is always checked per physical link.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

from .errors import DanglingEndpoint, DuplicateId, InvariantViolation, ParseError


class NodeKind(str, Enum):
    CLIENT = "client"
    ROUTER = "router"
    SITE = "site"


@dataclass(frozen=True)
class Link:
    id: str
    src: str
    dst: str
    capacity: float
    cost: float
    group: str


@dataclass(frozen=True)
class Path:
    client: str
    site: str
    links: tuple[str, ...]
    nodes: tuple[str, ...]
    index: int = 0

    @property
    def hops(self) -> int:
        return len(self.links)


@dataclass
class Topology:
    nodes: dict[str, NodeKind]
    links: dict[str, Link]
    out_links: dict[str, list[Link]] = field(repr=False)
    in_links: dict[str, list[Link]] = field(repr=False)
    group_capacity: dict[str, float] = field(repr=False)

    def kind(self, node: str) -> NodeKind:
        return self.nodes[node]

    def nodes_of(self, kind: NodeKind) -> list[str]:
        return sorted(n for n, k in self.nodes.items() if k is kind)

    @property
    def groups(self) -> list[str]:
        return sorted(self.group_capacity)


def _as_kind(value) -> NodeKind:
    if isinstance(value, NodeKind):
        return value
    try:
        return NodeKind(str(value).lower())
    except ValueError:
        raise ParseError(f"unknown node kind {value!r}") from None


def build_topology(node_specs: Iterable, link_specs: Iterable[Mapping]) -> Topology:
    """Validate node and link specs and return an immutable-by-convention Topology.

    ``node_specs`` holds ``{"id", "kind"}`` mappings or ``(id, kind)`` pairs.
    Each link spec carries ``id, src, dst, capacity, cost`` and an optional
    ``undirected`` flag; undirected links expand to ``<id>:<src>><dst>`` and
    the reverse, both in capacity group ``<id>``.
    """
    nodes: dict[str, NodeKind] = {}
    for spec in node_specs:
        if isinstance(spec, Mapping):
            nid, kind = spec["id"], spec["kind"]
        else:
            nid, kind = spec
        nid = str(nid)
        if nid in nodes:
            raise DuplicateId(f"duplicate node id {nid!r}")
        nodes[nid] = _as_kind(kind)

    links: dict[str, Link] = {}
    group_capacity: dict[str, float] = {}
    seen_specs: set[str] = set()
    for spec in link_specs:
        lid = str(spec["id"])
        if lid in seen_specs:
            raise DuplicateId(f"duplicate link id {lid!r}")
        seen_specs.add(lid)
        src, dst = str(spec["src"]), str(spec["dst"])
        for end in (src, dst):
            if end not in nodes:
                raise DanglingEndpoint(f"link {lid!r} references unknown node {end!r}")
        if src == dst:
            raise InvariantViolation(f"link {lid!r} is a self-loop")
        capacity, cost = float(spec["capacity"]), float(spec["cost"])
        if not (math.isfinite(capacity) and capacity > 0):
            raise InvariantViolation(f"link {lid!r}: capacity must be finite and > 0")
        if not (math.isfinite(cost) and cost >= 0):
            raise InvariantViolation(f"link {lid!r}: cost must be finite and >= 0")
        if spec.get("undirected", False):
            pairs = [(f"{lid}:{src}>{dst}", src, dst), (f"{lid}:{dst}>{src}", dst, src)]
        else:
            pairs = [(lid, src, dst)]
        for did, a, b in pairs:
            if did in links:
                raise DuplicateId(f"duplicate link id {did!r}")
            links[did] = Link(did, a, b, capacity, cost, lid)
        group_capacity[lid] = capacity

    out_links: dict[str, list[Link]] = {n: [] for n in nodes}
    in_links: dict[str, list[Link]] = {n: [] for n in nodes}
    for link in links.values():
        out_links[link.src].append(link)
        in_links[link.dst].append(link)
    for adj in (out_links, in_links):
        for lst in adj.values():
            lst.sort(key=lambda e: e.id)
    return Topology(nodes, links, out_links, in_links, group_capacity)


def topology_from_dict(data: Mapping) -> Topology:
    try:
        return build_topology(data["nodes"], data["links"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed topology document: {exc}") from exc


def load_topology(path) -> Topology:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return topology_from_dict(data)


def bundled_topology_data(name: str) -> dict:
    """Raw JSON of a bundled backbone (``nsfnet`` or ``usnet``)."""
    fname = f"{name.lower()}.json"
    text = resources.files("cpnfedsl.data").joinpath(fname).read_text()
    return json.loads(text)


def _lexmin_shortest(topo: Topology, src: str, dst: str,
                     banned_nodes: set[str], banned_links: set[str]) -> tuple[str, ...] | None:
    # hop distances to dst over the pruned graph, then walk greedily by smallest link id
    if src in banned_nodes or dst in banned_nodes:
        return None
    dist = {dst: 0}
    queue = deque([dst])
    while queue:
        v = queue.popleft()
        for link in topo.in_links[v]:
            u = link.src
            if u in dist or u in banned_nodes or link.id in banned_links:
                continue
            dist[u] = dist[v] + 1
            queue.append(u)
    if src not in dist:
        return None
    out = []
    cur = src
    while cur != dst:
        step = next(link for link in topo.out_links[cur]
                    if link.id not in banned_links and link.dst not in banned_nodes
                    and dist.get(link.dst) == dist[cur] - 1)
        out.append(step.id)
        cur = step.dst
    return tuple(out)


def _nodes_of(topo: Topology, src: str, links: tuple[str, ...]) -> tuple[str, ...]:
    return (src,) + tuple(topo.links[e].dst for e in links)


def enumerate_paths(topo: Topology, client: str, site: str, k_paths: int | None = 3) -> list[Path]:
    """Up to ``k_paths`` loopless paths, ordered by hop count then link-id sequence.

    Yen's algorithm over a lexicographically-minimal BFS subroutine; the
    (hops, link ids) key is prefix-consistent, which is what Yen needs for
    the output order to be exact. ``k_paths=None`` enumerates every simple path.
    """
    if topo.nodes.get(client) is not NodeKind.CLIENT:
        raise InvariantViolation(f"{client!r} is not a client node")
    if topo.nodes.get(site) is not NodeKind.SITE:
        raise InvariantViolation(f"{site!r} is not a site node")
    limit = math.inf if k_paths is None else k_paths
    if limit < 1:
        raise InvariantViolation("k_paths must be >= 1")

    first = _lexmin_shortest(topo, client, site, set(), set())
    if first is None:
        return []
    accepted = [first]
    heap: list[tuple[int, tuple[str, ...]]] = []
    seen = {first}
    while len(accepted) < limit:
        prev = accepted[-1]
        prev_nodes = _nodes_of(topo, client, prev)
        for i in range(len(prev)):
            root = prev[:i]
            banned_links = {p[i] for p in accepted if len(p) > i and p[:i] == root}
            spur = _lexmin_shortest(topo, prev_nodes[i], site, set(prev_nodes[:i]), banned_links)
            if spur is None:
                continue
            cand = root + spur
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(heap, (len(cand), cand))
        if not heap:
            break
        accepted.append(heapq.heappop(heap)[1])
    return [Path(client, site, links, _nodes_of(topo, client, links), idx)
            for idx, links in enumerate(accepted)]


def build_path_set(topo: Topology, clients: Iterable[str], sites: Iterable[str],
                   k_paths: int | None = 3) -> dict[tuple[str, str], list[Path]]:
    sites = list(sites)
    return {(c, s): enumerate_paths(topo, c, s, k_paths) for c in clients for s in sites}


def link_indicator(path: Path, link_id: str) -> int:
    return int(link_id in path.links)
