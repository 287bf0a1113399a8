"""Per-round scheduling instance: coefficients, utility, cost, latency, queues."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InvariantViolation
from .profile import ModelProfile, effective_partition_points
from .topology import Path, Topology

LOCAL = "local"  # site marker for pure local training (no server, no path)


@dataclass(frozen=True)
class ClientState:
    id: str
    weight: float  # raw p_i, sums to 1 over all clients
    dataset_size: int
    capacity: float  # c_it
    ps_bandwidth: float  # b_it
    queue: float = 0.0
    comm_cost: float = 0.0  # gamma_i

    def __post_init__(self):
        if not (self.weight > 0 and self.dataset_size >= 1 and self.capacity > 0
                and self.ps_bandwidth > 0):
            raise InvariantViolation(f"client {self.id}: invalid state {self}")


@dataclass(frozen=True)
class SiteState:
    id: str
    server_capacity: float  # w_j, per virtual server
    num_servers: int
    unit_server_cost: float  # alpha_j
    comm_cost: float = 0.0  # gamma'_j

    def __post_init__(self):
        if not (self.server_capacity > 0 and self.num_servers >= 1
                and self.unit_server_cost >= 0 and self.comm_cost >= 0):
            raise InvariantViolation(f"site {self.id}: invalid state {self}")


@dataclass(frozen=True)
class TaskConfig:
    profile: ModelProfile
    deadline: float
    batch_size: int
    epochs: int = 1
    sched_msg_size: float = 0.0
    status_msg_size: float = 0.0
    fairness_weight: float = 1.0
    utility_scale: float = 1e4
    shrink_factor: float = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or not self.deadline > 0:
            raise InvariantViolation("task needs epochs >= 1, batch_size >= 1, deadline > 0")

    def batches(self, client: ClientState) -> float:
        """Epoch-times-batch count: E |D_i| / H."""
        return self.epochs * client.dataset_size / self.batch_size

    def comm_time(self, client: ClientState) -> float:
        # model download + upload plus both control messages
        return (self.sched_msg_size + self.status_msg_size
                + 2 * self.profile.model_size) / client.ps_bandwidth


@dataclass(frozen=True)
class Placement:
    site: str
    path: Path | None
    k: int
    bandwidth: float


@dataclass
class Assignment:
    admitted: dict[str, Placement] = field(default_factory=dict)
    rejected: set[str] = field(default_factory=set)
    infeasible_bound: bool = False  # set by schedulers that ignore capacity limits
    rho: float | None = None  # final Dinkelbach ratio, for optimizing schedulers

    @property
    def flags(self) -> dict[str, int]:
        out = {c: 1 for c in self.admitted}
        out.update({c: 0 for c in self.rejected})
        return out


@dataclass(frozen=True)
class Latency:
    download: float
    training: float
    upload: float

    @property
    def total(self) -> float:
        return self.download + self.training + self.upload


def compute_mu(client: ClientState, site: SiteState, k: int, task: TaskConfig) -> float:
    cut = task.profile.cut(k)
    n = task.batches(client)
    return (task.comm_time(client)
            + n * cut.client_density / client.capacity
            + n * cut.server_density / site.server_capacity)


def exchange_volume(client: ClientState, k: int, task: TaskConfig) -> float:
    """Total per-round client/server traffic s'_k = E |D_i| s_k / H."""
    return task.batches(client) * task.profile.cut(k).exchange_size


def compute_phi(client: ClientState, site: SiteState, k: int, task: TaskConfig) -> float | None:
    """Bandwidth that finishes the round exactly at the deadline; None when no bandwidth can."""
    slack = task.deadline - compute_mu(client, site, k, task)
    if slack <= 0:
        return None
    return exchange_volume(client, k, task) / slack


def optimal_partition(client: ClientState, site: SiteState, task: TaskConfig,
                      candidate_cuts: Sequence[int]) -> tuple[int, float] | None:
    best = None
    for k in sorted(candidate_cuts):
        phi = compute_phi(client, site, k, task)
        if phi is None or phi <= 0:
            continue
        if best is None or phi < best[1]:
            best = (k, phi)
    return best


def scaled_utility(client: ClientState, task: TaskConfig) -> float:
    return task.utility_scale * client.weight + task.fairness_weight * client.queue


def training_utility(clients: Sequence[ClientState], admitted: Sequence[int] | Mapping[str, int],
                     fairness_weight: float, utility_scale: float = 1.0) -> float:
    """Sum of (scale*p_i + lambda*Q_i) over admitted clients."""
    if isinstance(admitted, Mapping):
        flags = [admitted.get(c.id, 0) for c in clients]
    else:
        flags = list(admitted)
    return sum((utility_scale * c.weight + fairness_weight * c.queue) * z
               for c, z in zip(clients, flags))


def update_queue(queue: float, admitted: int, weight: float) -> float:
    return queue - admitted + weight


class SchedulingInstance:
    """One round's snapshot with every derived coefficient precomputed.

    Built fresh each round from raw states, so nothing can go stale.
    """

    def __init__(self, topology: Topology, paths: Mapping[tuple[str, str], list[Path]],
                 clients: Sequence[ClientState], sites: Sequence[SiteState], task: TaskConfig,
                 candidate_cuts: Sequence[int] | None = None):
        self.topology = topology
        self.paths = paths
        self.clients = sorted(clients, key=lambda c: c.id)
        self.sites = sorted(sites, key=lambda s: s.id)
        self.task = task
        self.client = {c.id: c for c in self.clients}
        self.site = {s.id: s for s in self.sites}
        if candidate_cuts is None:
            candidate_cuts = effective_partition_points(task.profile, task.shrink_factor)
        self.cuts = sorted(candidate_cuts)

        self.mu: dict[tuple[str, str, int], float] = {}
        self.phi: dict[tuple[str, str, int], float | None] = {}
        self.best: dict[tuple[str, str], tuple[int, float]] = {}
        for c in self.clients:
            for s in self.sites:
                for k in self.cuts:
                    self.mu[c.id, s.id, k] = compute_mu(c, s, k, task)
                    self.phi[c.id, s.id, k] = compute_phi(c, s, k, task)
                opt = optimal_partition(c, s, task, self.cuts)
                if opt is not None:
                    self.best[c.id, s.id] = opt
        self.link_cost = {e: link.cost * task.deadline for e, link in topology.links.items()}

    def utility(self, client_id: str) -> float:
        return scaled_utility(self.client[client_id], self.task)

    def server_cost(self, client_id: str, site_id: str) -> float:
        """alpha'_ij = (alpha_j + gamma_i + gamma'_j) * deadline."""
        c, s = self.client[client_id], self.site[site_id]
        return (s.unit_server_cost + c.comm_cost + s.comm_cost) * self.task.deadline

    def path_unit_cost(self, path: Path) -> float:
        return sum(self.link_cost[e] for e in path.links)

    def local_latency(self, client_id: str) -> Latency:
        c, task = self.client[client_id], self.task
        half = task.profile.model_size / c.ps_bandwidth
        return Latency(task.sched_msg_size / c.ps_bandwidth + half,
                       task.batches(c) * task.profile.local_density / c.capacity,
                       task.status_msg_size / c.ps_bandwidth + half)


def round_latency(client: ClientState, placement: Placement, instance: SchedulingInstance) -> Latency:
    task = instance.task
    if placement.site == LOCAL:
        return instance.local_latency(client.id)
    site = instance.site[placement.site]
    cut = task.profile.cut(placement.k)
    n = task.batches(client)
    tau0 = (task.sched_msg_size + task.profile.model_size) / client.ps_bandwidth
    tau1 = n * (cut.client_density / client.capacity + cut.server_density / site.server_capacity
                + cut.exchange_size / placement.bandwidth)
    tau2 = (task.profile.model_size + task.status_msg_size) / client.ps_bandwidth
    return Latency(tau0, tau1, tau2)


def placement_cost(client_id: str, placement: Placement, instance: SchedulingInstance) -> float:
    if placement.site == LOCAL:
        return instance.client[client_id].comm_cost * instance.task.deadline
    cost = instance.server_cost(client_id, placement.site)
    if placement.path is not None:
        cost += instance.path_unit_cost(placement.path) * placement.bandwidth
    return cost


def system_cost(assignment: Assignment, instance: SchedulingInstance) -> float:
    return sum(placement_cost(c, p, instance) for c, p in sorted(assignment.admitted.items()))


def round_ratio(utility: float, cost: float) -> float:
    # an empty round (or a cost-free one) contributes nothing
    if cost <= 0:
        return 0.0
    return utility / cost


def rue(round_logs: Iterable) -> float:
    """Mean per-round utility/cost; accepts (U, C) pairs or objects with .utility/.cost."""
    ratios = []
    for log in round_logs:
        u, c = (log.utility, log.cost) if hasattr(log, "utility") else log
        ratios.append(round_ratio(u, c))
    return math.fsum(ratios) / len(ratios) if ratios else 0.0
