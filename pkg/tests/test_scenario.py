import numpy as np
import pytest

from cpnfedsl.errors import LayoutMismatch
from cpnfedsl.scenario import LAYOUTS, SITE_TABLE, Layout, ScenarioConfig, generate_scenario
from cpnfedsl.topology import NodeKind


def scenario(layout, seed=7, **kw):
    return generate_scenario(ScenarioConfig(layout=layout, seed=seed, **kw), np.random.default_rng(seed))


def test_ns1_shape_and_replay():
    a, b = scenario("NS1"), scenario("NS1")
    assert len(a.clients) == 48 and len(a.sites) == 6
    hosts = {c.node for c in a.clients}
    assert len(hosts) == 8 and all(sum(c.node == h for c in a.clients) == 6 for h in hosts)
    assert a.clients == b.clients and a.sites == b.sites and a.site_nodes == b.site_nodes
    assert {e: (l.capacity, l.cost) for e, l in a.topology.links.items()} == \
           {e: (l.capacity, l.cost) for e, l in b.topology.links.items()}
    assert a.paths == b.paths


def test_different_seeds_differ():
    assert scenario("NS1", seed=1).clients != scenario("NS1", seed=2).clients


@pytest.mark.parametrize("layout,clients,servers", [("NS2", 16, 3), ("NS3", 48, 8), ("NS4", 48, 8)])
def test_usnet_layouts(layout, clients, servers):
    sc = scenario(layout)
    assert len(sc.clients) == clients and len(sc.sites) == 6
    assert all(s.num_servers == servers for s in sc.sites)
    assert len({c.node for c in sc.clients}) == LAYOUTS[layout].client_nodes


def test_site_table_effective_compute():
    assert SITE_TABLE[0][0] * SITE_TABLE[0][1] == pytest.approx(220.0)
    sc = scenario("NS1")
    assert sorted(s.server_capacity for s in sc.sites) == pytest.approx(
        sorted(cap * util for cap, util, _ in SITE_TABLE))
    assert min(s.server_capacity for s in sc.sites) == pytest.approx(220.0)
    assert {s.unit_server_cost for s in sc.sites} == {800.0, 1500.0}


def test_weights_and_ranges():
    cfg = ScenarioConfig(layout="NS3", seed=3)
    sc = generate_scenario(cfg, np.random.default_rng(3))
    assert sum(c.weight for c in sc.clients) == pytest.approx(1.0, abs=1e-12)
    total = sum(c.dataset_size for c in sc.clients)
    for c in sc.clients:
        assert c.weight == c.dataset_size / total
        assert cfg.dataset_range[0] <= c.dataset_size <= cfg.dataset_range[1]
        assert c.capacity_tier in cfg.client_capacity_tiers
    for link in sc.topology.links.values():
        assert cfg.link_capacity_range[0] <= link.capacity <= cfg.link_capacity_range[1]
        assert cfg.link_cost_range[0] <= link.cost <= cfg.link_cost_range[1]


def test_clients_reach_sites_through_access_links():
    sc = scenario("NS1")
    for c in sc.clients:
        assert sc.topology.kind(c.id) is NodeKind.CLIENT
        for s in sc.sites:
            paths = sc.paths[c.id, s.id]
            assert 1 <= len(paths) <= 3
            assert all(sc.topology.links[p.links[0]].group == sc.topology.links[paths[0].links[0]].group
                       for p in paths)


def test_tiny_layouts():
    sc = scenario("TINY")
    assert len(sc.clients) == 6 and len(sc.sites) == 3 and all(s.num_servers == 1 for s in sc.sites)
    custom = scenario(Layout("NSFNET", 2, 1, 2, 1, k_paths=1))
    assert len(custom.clients) == 2 and all(len(p) == 1 for p in custom.paths.values())


def test_overrides():
    sc = scenario("NS1", k_paths=1, servers_per_site=2)
    assert all(s.num_servers == 2 for s in sc.sites)
    assert all(len(p) == 1 for p in sc.paths.values())


def test_layout_mismatch():
    with pytest.raises(LayoutMismatch):
        scenario("NS9")
    with pytest.raises(LayoutMismatch):
        scenario("NS1", topology="USNET")
    with pytest.raises(LayoutMismatch):
        scenario(Layout("NSFNET", 7, None, 1, 1))
    with pytest.raises(LayoutMismatch):
        scenario(Layout("NSFNET", 6, 9, 1, 1))
