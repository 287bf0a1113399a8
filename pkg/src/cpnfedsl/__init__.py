"""Multivariate scheduling for federated split learning over a computing power network."""
from .core import (Assignment, ClientState, Placement, SchedulingInstance, SiteState, TaskConfig,
                   rue, system_cost, training_utility)
from .profile import ModelProfile, bundled_profile, load_profile
from .topology import Topology, build_topology, enumerate_paths, load_topology

__version__ = "0.1.0"

__all__ = [
    "Assignment", "ClientState", "ModelProfile", "Placement", "SchedulingInstance", "SiteState",
    "TaskConfig", "Topology", "build_topology", "bundled_profile", "enumerate_paths", "load_profile",
    "load_topology", "rue", "system_cost", "training_utility",
]
