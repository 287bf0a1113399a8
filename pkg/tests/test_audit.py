from dataclasses import replace

import pytest

from cpnfedsl.audit import is_valid, violations
from cpnfedsl.core import LOCAL, Assignment, Placement
from cpnfedsl.topology import Path

from conftest import simple_profile, simple_task, star_instance

PROFILE = simple_profile([(1, 50.0, 20.0, 0.8)], local_density=80.0)


def instance(**kw):
    base = dict(n_clients=2, servers=1, capacity=3.0, task=simple_task(PROFILE))
    base.update(kw)
    return star_instance(**base)


def place(inst, cid, path_index=0, site="s0", bandwidth=None, k=None):
    k0, phi = inst.best[cid, site]
    return Placement(site, inst.paths[cid, site][path_index], k or k0, bandwidth or phi)


def test_valid_assignment_passes():
    inst = instance()
    assert inst.best["c0", "s0"] == (1, pytest.approx(2.0))
    out = Assignment({"c0": place(inst, "c0")}, {"c1"})
    assert violations(out, inst) == [] and is_valid(out, inst)


def test_site_overload():
    inst = instance(capacity=100.0)
    out = Assignment({"c0": place(inst, "c0"), "c1": place(inst, "c1")})
    (msg,) = violations(out, inst)
    assert msg.startswith("C2")
    assert violations(out, inst, check_capacity=False) == []
    assert is_valid(replace(out, infeasible_bound=True), inst)


def test_link_overload_and_detour():
    inst = instance(servers=2)
    out = Assignment({"c0": place(inst, "c0"), "c1": place(inst, "c1")})
    assert [m[:2] for m in violations(out, inst)] == ["C3"]
    out = Assignment({"c0": place(inst, "c0"), "c1": place(inst, "c1", path_index=1)})
    assert violations(out, inst) == []


def test_capacity_boundary_is_feasible():
    inst = instance(servers=2, capacity=4.0)
    out = Assignment({"c0": place(inst, "c0"), "c1": place(inst, "c1")})
    assert violations(out, inst) == []


def test_deadline_violation():
    inst = instance()
    pl = place(inst, "c0")
    out = Assignment({"c0": replace(pl, bandwidth=pl.bandwidth * 0.99)})
    (msg,) = violations(out, inst)
    assert msg.startswith("C4")


def test_bandwidth_above_phi_is_fine():
    inst = instance(capacity=100.0)
    pl = place(inst, "c0")
    assert violations(Assignment({"c0": replace(pl, bandwidth=pl.bandwidth * 3)}), inst) == []


@pytest.mark.parametrize("mutate,code", [
    (lambda inst, pl: replace(pl, site="nowhere"), "C1"),
    (lambda inst, pl: replace(pl, k=7), "C1"),
    (lambda inst, pl: replace(pl, bandwidth=0.0), "C3"),
    (lambda inst, pl: replace(pl, path=None), "C1"),
    (lambda inst, pl: replace(pl, path=inst.paths["c1", "s0"][0]), "C1"),
    (lambda inst, pl: replace(pl, path=Path("c0", "r", ("Ac0:c0>r",), ("c0", "r"), 0)), "C1"),
])
def test_malformed_placements(mutate, code):
    inst = instance()
    out = Assignment({"c0": mutate(inst, place(inst, "c0"))})
    msgs = violations(out, inst)
    assert msgs and msgs[0].startswith(code)


def test_client_bookkeeping():
    inst = instance()
    pl = place(inst, "c0")
    assert violations(Assignment({"c0": pl}, {"c0"}), inst)[0].startswith("C1")
    assert violations(Assignment({"ghost": pl}), inst)[0].startswith("C1")


def test_local_training_checked_against_deadline():
    inst = instance(client_capacity=100.0)
    local = Placement(LOCAL, None, PROFILE.num_layers, 0.0)
    assert inst.local_latency("c0").total == pytest.approx(8.0)
    assert violations(Assignment({"c0": local}), inst) == []
    slow = instance(client_capacity=50.0)
    assert violations(Assignment({"c0": local}), slow)[0].startswith("C4")
