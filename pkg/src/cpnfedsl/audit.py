"""Independent checker for the four per-round constraints.

Deliberately recomputes everything from raw client/site/link fields instead of
reusing the instance's derived coefficients, so it can catch bugs there too.
"""
from __future__ import annotations

from .core import LOCAL, Assignment, SchedulingInstance

RTOL = 1e-9


def violations(assignment: Assignment, instance: SchedulingInstance,
               check_capacity: bool = True) -> list[str]:
    out: list[str] = []
    task = instance.task
    prof = task.profile
    topo = instance.topology
    known = {c.id for c in instance.clients}

    both = set(assignment.admitted) & set(assignment.rejected)
    if both:
        out.append(f"C1: clients both admitted and rejected: {sorted(both)}")
    unknown = set(assignment.admitted) - known
    if unknown:
        out.append(f"C1: unknown clients admitted: {sorted(unknown)}")

    site_count: dict[str, int] = {}
    group_load: dict[str, float] = {}
    for cid, pl in sorted(assignment.admitted.items()):
        if cid not in known:
            continue
        c = instance.client[cid]
        n = task.epochs * c.dataset_size / task.batch_size
        comm = (task.sched_msg_size + task.status_msg_size + 2 * prof.model_size) / c.ps_bandwidth
        if pl.site == LOCAL:
            total = comm + n * prof.local_density / c.capacity
        else:
            if pl.site not in instance.site:
                out.append(f"C1: {cid} placed on unknown site {pl.site}")
                continue
            site = instance.site[pl.site]
            site_count[pl.site] = site_count.get(pl.site, 0) + 1
            if pl.k not in prof.ks:
                out.append(f"C1: {cid} uses unknown cut {pl.k}")
                continue
            if not pl.bandwidth > 0:
                out.append(f"C3: {cid} has non-positive bandwidth {pl.bandwidth}")
                continue
            path = pl.path
            if path is None or not path.links:
                out.append(f"C1: {cid} has no path to {pl.site}")
                continue
            cur = cid
            for e in path.links:
                link = topo.links.get(e)
                if link is None or link.src != cur:
                    out.append(f"C1: {cid} path broken at {e}")
                    break
                cur = link.dst
                group_load[link.group] = group_load.get(link.group, 0.0) + pl.bandwidth
            else:
                if cur != pl.site:
                    out.append(f"C1: {cid} path ends at {cur}, not {pl.site}")
            cut = prof.cut(pl.k)
            total = comm + n * (cut.client_density / c.capacity + cut.server_density / site.server_capacity
                                + cut.exchange_size / pl.bandwidth)
        if total > task.deadline * (1 + RTOL):
            out.append(f"C4: {cid} latency {total!r} exceeds deadline {task.deadline!r}")

    if check_capacity:
        for sid, cnt in sorted(site_count.items()):
            if cnt > instance.site[sid].num_servers:
                out.append(f"C2: site {sid} hosts {cnt} > {instance.site[sid].num_servers}")
        for g, load in sorted(group_load.items()):
            cap = topo.group_capacity[g]
            if load > cap + RTOL * max(1.0, cap):
                out.append(f"C3: link {g} load {load!r} exceeds capacity {cap!r}")
    return out


def is_valid(assignment: Assignment, instance: SchedulingInstance) -> bool:
    return not violations(assignment, instance, check_capacity=not assignment.infeasible_bound)
