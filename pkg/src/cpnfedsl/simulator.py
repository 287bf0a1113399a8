"""Round-based driver: sample client states, schedule, audit, score, update queues."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import audit
from .baselines import Scheduler
from .core import (Assignment, ClientState, Latency, Placement, SchedulingInstance, TaskConfig,
                   round_latency, round_ratio, system_cost, training_utility, update_queue)
from .errors import InvalidSchedule
from .profile import bundled_profile
from .scenario import Scenario, ScenarioConfig, generate_scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskPreset:
    profile: str
    deadline: float
    batch_size: int
    link_cost_range: tuple[float, float]


TASK_PRESETS = {
    "densenet": TaskPreset("densenet", 150.0, 8, (1.0, 10.0)),
    "mobilenet": TaskPreset("mobilenet", 5.0, 4, (0.1, 1.0)),
}


def make_task(name: str = "densenet", **overrides) -> TaskConfig:
    """TaskConfig for a bundled synthetic model; keyword arguments override any field."""
    try:
        preset = TASK_PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown task {name!r}; choose from {sorted(TASK_PRESETS)}") from None
    fields = dict(profile=bundled_profile(preset.profile), deadline=preset.deadline,
                  batch_size=preset.batch_size, epochs=1)
    fields.update(overrides)
    return TaskConfig(**fields)


@dataclass
class RoundLog:
    t: int
    admitted: list[str]
    placements: dict[str, Placement]
    latency: dict[str, Latency]
    utility: float
    cost: float
    ratio: float
    trained_samples: int
    queues_before: dict[str, float]
    queues_after: dict[str, float]
    rho: float | None = None
    infeasible_bound: bool = False


@dataclass
class SimulationResult:
    logs: list[RoundLog]
    weights: dict[str, float]

    @property
    def rounds(self) -> int:
        return len(self.logs)

    @property
    def rue(self) -> float:
        return math.fsum(log.ratio for log in self.logs) / self.rounds if self.logs else 0.0

    @property
    def average_training_amount(self) -> float:
        return sum(log.trained_samples for log in self.logs) / self.rounds if self.logs else 0.0

    @property
    def admission_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in self.weights}
        for log in self.logs:
            for c in log.admitted:
                counts[c] += 1
        return counts


@dataclass
class SimState:
    scenario: Scenario
    queues: dict[str, float]
    t: int = 0
    history: list[RoundLog] = field(default_factory=list)

    @classmethod
    def start(cls, scenario: Scenario) -> "SimState":
        return cls(scenario, {c.id: 0.0 for c in scenario.clients})


def sample_clients(state: SimState, rng: np.random.Generator) -> list[ClientState]:
    """Fresh per-round capacity (tier x uniform utilization) and parameter-server bandwidth."""
    cfg = state.scenario.config
    lo_u, hi_u = cfg.client_utilization_range
    lo_b, hi_b = cfg.ps_bandwidth_range
    out = []
    for bc in state.scenario.clients:
        util = float(rng.uniform(lo_u, hi_u))
        bw = float(rng.uniform(lo_b, hi_b))
        out.append(ClientState(bc.id, bc.weight, bc.dataset_size, bc.capacity_tier * util, bw,
                               state.queues[bc.id], cfg.client_comm_cost))
    return out


def build_round_instance(state: SimState, task: TaskConfig, rng: np.random.Generator) -> SchedulingInstance:
    sc = state.scenario
    return SchedulingInstance(sc.topology, sc.paths, sample_clients(state, rng), sc.sites, task)


def score_round(t: int, instance: SchedulingInstance, assignment: Assignment) -> RoundLog:
    task = instance.task
    problems = audit.violations(assignment, instance, check_capacity=not assignment.infeasible_bound)
    if problems:
        raise InvalidSchedule(f"round {t}: " + "; ".join(problems))
    flags = {c.id: int(c.id in assignment.admitted) for c in instance.clients}
    utility = training_utility(instance.clients, flags, task.fairness_weight, task.utility_scale)
    cost = system_cost(assignment, instance)
    latency = {c: round_latency(instance.client[c], p, instance) for c, p in sorted(assignment.admitted.items())}
    trained = sum(task.epochs * instance.client[c].dataset_size for c in assignment.admitted)
    before = {c.id: c.queue for c in instance.clients}
    after = {c.id: update_queue(c.queue, flags[c.id], c.weight) for c in instance.clients}
    return RoundLog(t, sorted(assignment.admitted), dict(sorted(assignment.admitted.items())), latency,
                    utility, cost, round_ratio(utility, cost), trained, before, after,
                    assignment.rho, assignment.infeasible_bound)


def step_round(state: SimState, scheduler: Scheduler, task: TaskConfig,
               rng: np.random.Generator, sched_rng: np.random.Generator | None = None) -> RoundLog:
    state.t += 1
    instance = build_round_instance(state, task, rng)
    assignment = scheduler(instance, sched_rng if sched_rng is not None else rng)
    entry = score_round(state.t, instance, assignment)
    state.queues = dict(entry.queues_after)
    state.history.append(entry)
    log.debug("round %d: admitted %d, U=%g, C=%g", state.t, len(entry.admitted), entry.utility, entry.cost)
    return entry


def streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent scenario / per-round state / scheduler streams derived from one seed.

    Keeping the scheduler's randomness separate means every scheduler sees the
    same scenario and the same sequence of client states for a given seed.
    """
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(s) for s in children)


def run_simulation(config: ScenarioConfig, scheduler: Scheduler, task: TaskConfig) -> SimulationResult:
    scen_rng, round_rng, sched_rng = streams(config.seed)
    scenario = generate_scenario(config, scen_rng)
    state = SimState.start(scenario)
    for _ in range(config.rounds):
        step_round(state, scheduler, task, round_rng, sched_rng)
    return SimulationResult(state.history, {c.id: c.weight for c in scenario.clients})
