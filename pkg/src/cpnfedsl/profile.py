"""Per-cut compute/communication profiles of a training model."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from .errors import InvariantViolation, ParseError


@dataclass(frozen=True)
class LayerCut:
    k: int
    client_density: float  # compute units per batch on the client side
    server_density: float
    exchange_size: float  # data units per batch (activations, gradients, labels)


@dataclass(frozen=True)
class ModelProfile:
    name: str
    num_layers: int
    cuts: tuple[LayerCut, ...]
    model_size: float
    local_density: float  # whole-model compute per batch, used for pure local training

    def cut(self, k: int) -> LayerCut:
        for c in self.cuts:
            if c.k == k:
                return c
        raise KeyError(k)

    @property
    def ks(self) -> list[int]:
        return [c.k for c in self.cuts]


def _finite_nonneg(value, what: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{what}: expected a number, got {value!r}") from None
    if not math.isfinite(x) or x < 0:
        raise InvariantViolation(f"{what} must be finite and >= 0, got {value!r}")
    return x


def profile_from_dict(data: Mapping) -> ModelProfile:
    try:
        name = str(data["name"])
        num_layers = int(data["num_layers"])
        model_size = _finite_nonneg(data["model_size"], "model_size")
        raw_cuts = list(data["cuts"])
    except KeyError as exc:
        raise ParseError(f"profile missing field {exc.args[0]!r}") from None
    if not raw_cuts:
        raise InvariantViolation("profile has no cuts")
    cuts = []
    seen: set[int] = set()
    for n, rc in enumerate(raw_cuts):
        try:
            k = int(rc["k"])
            cut = LayerCut(k,
                           _finite_nonneg(rc["q_client"], f"cuts[{n}].q_client"),
                           _finite_nonneg(rc["q_server"], f"cuts[{n}].q_server"),
                           _finite_nonneg(rc["s_exchange"], f"cuts[{n}].s_exchange"))
        except KeyError as exc:
            raise ParseError(f"cuts[{n}] missing field {exc.args[0]!r}") from None
        # k = 0 would ship raw samples to the server
        if k <= 0:
            raise InvariantViolation(f"cut k={k} not allowed; cuts start at 1")
        if k >= num_layers:
            raise InvariantViolation(f"cut k={k} must be below num_layers={num_layers}")
        if k in seen:
            raise InvariantViolation(f"duplicate cut k={k}")
        seen.add(k)
        cuts.append(cut)
    cuts.sort(key=lambda c: c.k)
    if "local_density" in data:
        local = _finite_nonneg(data["local_density"], "local_density")
    else:
        local = max(c.client_density + c.server_density for c in cuts)
    return ModelProfile(name, num_layers, tuple(cuts), model_size, local)


def load_profile(path) -> ModelProfile:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return profile_from_dict(data)


def bundled_profile(name: str) -> ModelProfile:
    """Synthetic ``densenet`` / ``mobilenet`` profiles shipped with the package."""
    text = resources.files("cpnfedsl.data").joinpath(f"{name.lower()}.json").read_text()
    return profile_from_dict(json.loads(text))


def effective_partition_points(profile: ModelProfile, shrink_factor: float = 1.0) -> list[int]:
    """Cuts whose exchange size beats ``shrink_factor`` times every earlier cut's.

    Later cuts cost more client compute, so a cut only earns its place by
    moving strictly less data than anything before it.
    """
    if not 0 < shrink_factor <= 1:
        raise ValueError("shrink_factor must lie in (0, 1]")
    if not profile.cuts:
        raise ValueError("profile has no cuts")
    selected = [profile.cuts[0].k]
    running_min = profile.cuts[0].exchange_size
    for cut in profile.cuts[1:]:
        if cut.exchange_size < shrink_factor * running_min:
            selected.append(cut.k)
        running_min = min(running_min, cut.exchange_size)
    return selected
