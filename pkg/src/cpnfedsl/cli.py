"""Experiment driver: config parsing, (scheduler x layout x seed) runs, CSV export.

Exit codes: 0 ok, 1 config error, 2 run failure, 3 feasibility audit failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .baselines import SchedulerKind, exact, make_scheduler
from .core import SchedulingInstance
from .errors import CpnFedSLError, InvalidSchedule, ParseError
from .profile import load_profile
from .scenario import LAYOUTS, ScenarioConfig
from .simulator import TASK_PRESETS, SimulationResult, make_task, run_simulation

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_AUDIT = 0, 1, 2, 3

EXPERIMENTS: dict[str, tuple[list[SchedulerKind], list[str]]] = {
    "frameworks": ([SchedulerKind.FEDAVG_LOCAL, SchedulerKind.SPLITFED_UNLIMITED,
                    SchedulerKind.SPLITFED_LIMITED, SchedulerKind.NQ, SchedulerKind.REFINERY],
                   ["NS1", "NS2", "NS3", "NS4"]),
    "ablations": ([SchedulerKind.REFINERY, SchedulerKind.RCA, SchedulerKind.RMP, SchedulerKind.RPS],
                  ["NS1", "NS2", "NS3", "NS4"]),
    "heuristics": ([SchedulerKind.REFINERY, SchedulerKind.MTU, SchedulerKind.MCC, SchedulerKind.MNC],
                   ["NS1", "NS2", "NS3", "NS4"]),
    "rounding": ([SchedulerKind.REFINERY, SchedulerKind.WRR, SchedulerKind.RR, SchedulerKind.EXACT],
                 ["TINY"]),
}

ROUND_COLUMNS = ["run_id", "scheduler", "layout", "seed", "t", "admitted", "trained_samples",
                 "utility", "cost", "ratio", "rho_final"]
SUMMARY_COLUMNS = ["scheduler", "layout", "seeds", "mean_rue", "mean_training_amount"]
OPT_COLUMN = "mean_ratio_to_opt"


@dataclass
class ExperimentSpec:
    experiment: str
    layouts: list[str]
    seeds: list[int]
    schedulers: list[SchedulerKind]
    task: str = "densenet"  # a bundled task name or a profile JSON path
    out: str = "results"
    rounds: int = 30
    tol: float = 1e-6
    max_iter: int = 50
    k_paths: int | None = None  # None: the layout's own count (3 on NS1-NS4)
    fairness_weight: float = 1.0
    utility_scale: float = 1e4
    deadline: float | None = None  # required only for a custom profile path
    batch_size: int | None = None
    epochs: int = 1
    trace: bool = False
    budget: int | None = 2 ** 20

    def runs(self) -> list[tuple[SchedulerKind, str, int]]:
        return [(s, lay, seed) for s in self.schedulers for lay in self.layouts for seed in self.seeds]


@dataclass
class RunRecord:
    scheduler: SchedulerKind
    layout: str
    seed: int
    result: SimulationResult | None = None
    opt_ratios: list[float] = field(default_factory=list)
    error: str | None = None
    audit_failed: bool = False

    @property
    def run_id(self) -> str:
        return f"{self.scheduler.value}-{self.layout}-s{self.seed}"


_SPEC_FIELDS = {f.name for f in fields(ExperimentSpec)}


def _parse_seeds(value, where: str) -> list[int]:
    """Seeds as a list of ints or a string like ``"1,2,5-9"``."""
    try:
        if isinstance(value, str):
            seeds: list[int] = []
            for part in value.split(","):
                part = part.strip()
                if "-" in part:
                    lo, hi = part.split("-", 1)
                    seeds.extend(range(int(lo), int(hi) + 1))
                elif part:
                    seeds.append(int(part))
        elif isinstance(value, int):
            seeds = [value]
        else:
            seeds = [int(s) for s in value]
    except (TypeError, ValueError):
        raise ParseError(f"{where}: cannot read seeds from {value!r}") from None
    if not seeds:
        raise ParseError(f"{where}: seeds must not be empty")
    return seeds


def _as_list(value) -> list[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def build_spec(raw: dict, where: str = "config") -> ExperimentSpec:
    """Validate a raw mapping (from JSON and/or flags) and fill in defaults."""
    unknown = sorted(set(raw) - _SPEC_FIELDS)
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {', '.join(unknown)}")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ParseError(f"{where}: field 'experiment' must be one of {sorted(EXPERIMENTS)}, got {exp!r}")
    default_scheds, default_layouts = EXPERIMENTS[exp]

    layouts = [l.upper() for l in _as_list(raw.get("layouts", default_layouts))]
    for lay in layouts:
        if lay not in LAYOUTS:
            raise ParseError(f"{where}: field 'layouts': unknown layout {lay!r}")
    if not layouts:
        raise ParseError(f"{where}: field 'layouts' must not be empty")

    try:
        schedulers = [SchedulerKind.parse(s) for s in _as_list(raw.get("schedulers", []))] or default_scheds
    except ValueError as exc:
        raise ParseError(f"{where}: field 'schedulers': {exc}") from None

    seeds = _parse_seeds(raw.get("seeds", [0]), f"{where}: field 'seeds'")
    spec = ExperimentSpec(exp, layouts, seeds, schedulers)
    numeric = {"rounds": int, "tol": float, "max_iter": int, "k_paths": int, "fairness_weight": float,
               "utility_scale": float, "deadline": float, "batch_size": int, "epochs": int}
    for name, kind in numeric.items():
        if raw.get(name) is not None:
            try:
                setattr(spec, name, kind(raw[name]))
            except (TypeError, ValueError):
                raise ParseError(f"{where}: field {name!r}: expected {kind.__name__}, got {raw[name]!r}") from None
    for name in ("task", "out"):
        if raw.get(name) is not None:
            setattr(spec, name, str(raw[name]))
    if "trace" in raw:
        spec.trace = bool(raw["trace"])
    if "budget" in raw:
        spec.budget = None if raw["budget"] is None else int(raw["budget"])

    if spec.rounds < 1 or (spec.k_paths is not None and spec.k_paths < 1) or spec.max_iter < 1 or not spec.tol > 0:
        raise ParseError(f"{where}: rounds, k_paths, max_iter must be >= 1 and tol > 0")
    if spec.task.lower() not in TASK_PRESETS:
        if not os.path.exists(spec.task):
            raise ParseError(f"{where}: field 'task': {spec.task!r} is neither "
                             f"{'/'.join(sorted(TASK_PRESETS))} nor an existing profile file")
        try:
            load_profile(spec.task)
        except CpnFedSLError as exc:
            raise ParseError(f"{where}: field 'task': {exc}") from None
    return spec


def _read_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return raw


def parse_config(path) -> ExperimentSpec:
    return build_spec(_read_config(path), str(path))


def task_for(spec: ExperimentSpec):
    common = dict(epochs=spec.epochs, fairness_weight=spec.fairness_weight, utility_scale=spec.utility_scale)
    if spec.task.lower() in TASK_PRESETS:
        over = {k: v for k, v in (("deadline", spec.deadline), ("batch_size", spec.batch_size)) if v is not None}
        task = make_task(spec.task, **common, **over)
        link_costs = TASK_PRESETS[spec.task.lower()].link_cost_range
    else:
        base = make_task("densenet", **common)
        task = replace(base, profile=load_profile(spec.task),
                       deadline=spec.deadline or base.deadline, batch_size=spec.batch_size or base.batch_size)
        link_costs = ScenarioConfig().link_cost_range
    return task, link_costs


class _OptProbe:
    """Wraps an optimizing scheduler and scores its ratio against the exact one per round."""

    def __init__(self, scheduler, budget, tol, max_iter):
        self.scheduler = scheduler
        self.budget = budget
        self.tol = tol
        self.max_iter = max_iter
        self.ratios: list[float] = []

    def __call__(self, instance: SchedulingInstance, rng):
        out = self.scheduler(instance, rng)
        opt = exact(instance, rng, budget=self.budget, tol=self.tol, max_iter=self.max_iter).rho or 0.0
        if opt > 0:
            self.ratios.append((out.rho or 0.0) / opt)
        return out


def run_cell(spec: ExperimentSpec, kind: SchedulerKind, layout: str, seed: int,
             trace_dir: Path | None = None) -> RunRecord:
    rec = RunRecord(kind, layout, seed)
    task, link_costs = task_for(spec)
    config = ScenarioConfig(layout=layout, seed=seed, rounds=spec.rounds, k_paths=spec.k_paths,
                            link_cost_range=link_costs)
    trace_fh = None
    options = dict(tol=spec.tol, max_iter=spec.max_iter, budget=spec.budget)
    if trace_dir is not None:
        trace_fh = open(trace_dir / f"{rec.run_id}.jsonl", "w")
        counter = {"round": 0}

        def trace(record):
            if record["iteration"] == 1:
                counter["round"] += 1
            trace_fh.write(json.dumps({"round": counter["round"], **record}, sort_keys=True) + "\n")
        options["trace"] = trace
    scheduler = make_scheduler(kind, **options)
    probe = None
    if spec.experiment == "rounding" and kind is not SchedulerKind.EXACT:
        scheduler = probe = _OptProbe(scheduler, spec.budget, spec.tol, spec.max_iter)
    try:
        rec.result = run_simulation(config, scheduler, task)
        if probe is not None:
            rec.opt_ratios = probe.ratios
        elif kind is SchedulerKind.EXACT:
            rec.opt_ratios = [1.0 for r in rec.result.logs if (r.rho or 0.0) > 0]
    except InvalidSchedule as exc:
        rec.error, rec.audit_failed = str(exc), True
    except (CpnFedSLError, ValueError, ArithmeticError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    finally:
        if trace_fh is not None:
            trace_fh.close()
    return rec


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def export_csv(records: list[RunRecord], path, with_opt: bool = False) -> None:
    """Write the summary table for ``records`` to ``path`` (header only when empty)."""
    columns = SUMMARY_COLUMNS + ([OPT_COLUMN] if with_opt else [])
    cells: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        if rec.result is not None:
            cells.setdefault((rec.scheduler.value, rec.layout), []).append(rec)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(columns)
        for (sched, layout), recs in cells.items():
            row = [sched, layout, len(recs),
                   math.fsum(r.result.rue for r in recs) / len(recs),
                   math.fsum(r.result.average_training_amount for r in recs) / len(recs)]
            if with_opt:
                ratios = [x for r in recs for x in r.opt_ratios]
                row.append(math.fsum(ratios) / len(ratios) if ratios else None)
            out.writerow([_fmt(v) for v in row])


def export_rounds(rec: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(ROUND_COLUMNS)
        for r in (rec.result.logs if rec.result else []):
            out.writerow([_fmt(v) for v in (rec.run_id, rec.scheduler.value, rec.layout, rec.seed, r.t,
                                               len(r.admitted), r.trained_samples, r.utility, r.cost,
                                               r.ratio, r.rho)])


def run_experiment(spec: ExperimentSpec) -> int:
    out = Path(spec.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    trace_dir = None
    if spec.trace:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
    records = []
    for kind, layout, seed in spec.runs():
        rec = run_cell(spec, kind, layout, seed, trace_dir)
        if rec.error:
            print(f"cell {rec.run_id} failed: {rec.error}", file=sys.stderr)
        else:
            export_rounds(rec, out / "runs" / f"{rec.run_id}.csv")
            log.info("%s: RUE %.6g, training amount %.6g", rec.run_id, rec.result.rue,
                     rec.result.average_training_amount)
        records.append(rec)
    export_csv(records, out / "summary.csv", with_opt=spec.experiment == "rounding")
    if any(r.audit_failed for r in records):
        return EXIT_AUDIT
    if any(r.error for r in records):
        return EXIT_RUN
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpnfedsl", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", help="JSON experiment file; flags override its fields")
    p.add_argument("--layout", help="comma-separated layouts, e.g. NS1,NS3")
    p.add_argument("--task", help="densenet, mobilenet or a profile JSON path")
    p.add_argument("--scheduler", help="comma-separated scheduler names")
    p.add_argument("--seeds", help="seed list such as 0,1,2 or 0-19")
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--trace", action=argparse.BooleanOptionalAction, default=None,
                   help="write per-iteration solver records as JSON lines")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    raw: dict = {}
    try:
        if args.config:
            raw = _read_config(args.config)
        flags = {"experiment": args.experiment, "layouts": args.layout, "task": args.task,
                 "schedulers": args.scheduler, "seeds": args.seeds, "rounds": args.rounds,
                 "out": args.out, "trace": args.trace}
        raw.update({k: v for k, v in flags.items() if v is not None})
        spec = build_spec(raw, args.config or "command line")
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
