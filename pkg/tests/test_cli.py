import csv
import json

import pytest

from cpnfedsl import cli
from cpnfedsl.baselines import SchedulerKind
from cpnfedsl.core import Assignment, Placement
from cpnfedsl.errors import ParseError
from cpnfedsl.scenario import LAYOUTS
from cpnfedsl.simulator import RoundLog, SimulationResult


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_minimal_config_gets_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "frameworks", "layouts": ["ns1"]}))
    spec = cli.parse_config(cfg)
    assert spec.layouts == ["NS1"] and spec.seeds == [0]
    assert (spec.rounds, spec.tol, spec.fairness_weight, spec.utility_scale) == (30, 1e-6, 1.0, 1e4)
    assert spec.k_paths is None and LAYOUTS["NS1"].k_paths == 3
    assert spec.schedulers == cli.EXPERIMENTS["frameworks"][0]
    assert spec.task == "densenet" and spec.out == "results" and not spec.trace


def test_seed_forms():
    spec = cli.build_spec({"experiment": "heuristics", "layouts": "NS2", "schedulers": "MTU,MCC",
                           "seeds": [1, 2, 3]})
    assert len(spec.runs()) == 2 * 3
    assert [r for r in spec.runs() if r[0] is SchedulerKind.MTU] == [(SchedulerKind.MTU, "NS2", s) for s in (1, 2, 3)]
    assert cli.build_spec({"experiment": "rounding", "seeds": "0,2,5-7"}).seeds == [0, 2, 5, 6, 7]
    assert cli.build_spec({"experiment": "rounding", "seeds": 4}).seeds == [4]


@pytest.mark.parametrize("raw,field", [
    ({"experiment": "frameworks", "schedulers": ["Oracle"]}, "schedulers"),
    ({"experiment": "frameworks", "layouts": ["NS7"]}, "layouts"),
    ({"experiment": "speed"}, "experiment"),
    ({"experiment": "frameworks", "colour": 1}, "colour"),
    ({"experiment": "frameworks", "seeds": []}, "seeds"),
    ({"experiment": "frameworks", "seeds": "a-b"}, "seeds"),
    ({"experiment": "frameworks", "rounds": "many"}, "rounds"),
    ({"experiment": "frameworks", "task": "no/such/profile.json"}, "task"),
])
def test_bad_fields_are_named(raw, field):
    with pytest.raises(ParseError, match=field):
        cli.build_spec(raw)


def test_json_errors_carry_line(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "experiment": "frameworks",\n  "seeds": [1,,2]\n}')
    with pytest.raises(ParseError, match="line 3"):
        cli.parse_config(cfg)
    with pytest.raises(ParseError):
        cli.parse_config(tmp_path / "missing.json")


def test_main_config_error_exit(tmp_path, capsys):
    assert cli.main(["--experiment", "frameworks", "--scheduler", "Oracle", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "Oracle" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["--experiment", "nope"])


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "heuristics", "layouts": "NS1", "rounds": 9, "seeds": [5]}))
    out = tmp_path / "out"
    code = cli.main(["--config", str(cfg), "--layout", "NS2", "--scheduler", "MNC", "--rounds", "1",
                     "--out", str(out)])
    assert code == cli.EXIT_OK
    assert [p.name for p in (out / "runs").iterdir()] == ["MNC-NS2-s5.csv"]
    rows = read_csv(out / "runs" / "MNC-NS2-s5.csv")
    assert rows[0] == cli.ROUND_COLUMNS and len(rows) == 2


def test_frameworks_ns1_layout_and_rerun(tmp_path):
    args = ["--experiment", "frameworks", "--layout", "NS1", "--seeds", "0-2", "--rounds", "1"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == cli.EXIT_OK
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == cli.EXIT_OK
    runs = sorted(p.name for p in (tmp_path / "a" / "runs").iterdir())
    assert len(runs) == 15 and "Refinery-NS1-s2.csv" in runs
    summary = read_csv(tmp_path / "a" / "summary.csv")
    assert summary[0] == cli.SUMMARY_COLUMNS and len(summary) == 6
    assert all(row[2] == "3" for row in summary[1:])
    for name in runs:
        assert (tmp_path / "a" / "runs" / name).read_bytes() == (tmp_path / "b" / "runs" / name).read_bytes()
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_rounding_summary_has_opt_column(tmp_path):
    code = cli.main(["--experiment", "rounding", "--seeds", "0,1", "--rounds", "2", "--out", str(tmp_path),
                     "--trace"])
    assert code == cli.EXIT_OK
    rows = read_csv(tmp_path / "summary.csv")
    assert rows[0] == cli.SUMMARY_COLUMNS + [cli.OPT_COLUMN]
    ratios = {r[0]: float(r[-1]) for r in rows[1:]}
    assert ratios["Exact"] == 1.0
    assert all(0 < v <= 1 + 1e-9 for v in ratios.values())
    trace = (tmp_path / "traces" / "Refinery-TINY-s0.jsonl").read_text().splitlines()
    records = [json.loads(line) for line in trace]
    assert {r["round"] for r in records} == {1, 2}
    assert set(records[0]) == {"round", "iteration", "rho", "utility", "cost", "objective", "accepted", "rejected"}


def test_bad_profile_is_a_config_error(tmp_path, capsys):
    bad = tmp_path / "profile.json"
    bad.write_text("{}")
    assert cli.main(["--experiment", "heuristics", "--task", str(bad), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "task" in capsys.readouterr().err


def test_run_failure_exit(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "rounding", "schedulers": ["Exact"], "budget": 2, "seeds": [0, 1],
                               "rounds": 1, "out": str(tmp_path / "o")}))
    assert cli.main(["--config", str(cfg)]) == cli.EXIT_RUN
    err = capsys.readouterr().err
    assert "Exact-TINY-s0 failed: BudgetExceeded" in err and "Exact-TINY-s1 failed" in err
    assert read_csv(tmp_path / "o" / "summary.csv") == [cli.SUMMARY_COLUMNS + [cli.OPT_COLUMN]]
    assert list((tmp_path / "o" / "runs").iterdir()) == []


def test_audit_failure_exit(tmp_path, monkeypatch):
    def overload(instance, rng):
        site = instance.sites[0]
        out = Assignment()
        for c in instance.clients:
            if (c.id, site.id) in instance.best:
                k, phi = instance.best[c.id, site.id]
                out.admitted[c.id] = Placement(site.id, instance.paths[c.id, site.id][0], k, phi)
        return out
    monkeypatch.setattr(cli, "make_scheduler", lambda kind, **kw: overload)
    code = cli.main(["--experiment", "heuristics", "--layout", "NS1", "--scheduler", "MTU", "--rounds", "1",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_AUDIT


def log(t, u, c):
    return RoundLog(t, [], {}, {}, u, c, u / c if c else 0.0, 0, {}, {})


def record(logs, seed=0):
    return cli.RunRecord(SchedulerKind.REFINERY, "NS1", seed, SimulationResult(logs, {}))


def test_export_empty_is_header_only(tmp_path):
    cli.export_csv([], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == ",".join(cli.SUMMARY_COLUMNS) + "\n"
    cli.export_csv([], tmp_path / "o.csv", with_opt=True)
    assert read_csv(tmp_path / "o.csv") == [cli.SUMMARY_COLUMNS + [cli.OPT_COLUMN]]


def test_export_round_ratio_and_mean(tmp_path):
    rec = record([log(1, 2.0, 4.0), log(2, 3.0, 3.0)])
    cli.export_rounds(rec, tmp_path / "r.csv")
    rows = read_csv(tmp_path / "r.csv")
    assert rows[1][cli.ROUND_COLUMNS.index("ratio")] == "0.5"
    assert rows[2][cli.ROUND_COLUMNS.index("ratio")] == "1"
    cli.export_csv([rec], tmp_path / "s.csv")
    (row,) = read_csv(tmp_path / "s.csv")[1:]
    assert float(row[cli.SUMMARY_COLUMNS.index("mean_rue")]) == 0.75


def test_summary_round_trips_full_precision(tmp_path):
    recs = [record([log(1, 1.0, 3.0), log(2, 2.0, 7.0)], 0), record([log(1, 0.1, 0.7)], 1)]
    cli.export_csv(recs, tmp_path / "s.csv")
    (row,) = read_csv(tmp_path / "s.csv")[1:]
    expected = ((1 / 3 + 2 / 7) / 2 + 0.1 / 0.7) / 2
    assert float(row[3]) == expected


def test_opt_ratio_mean(tmp_path):
    rec = record([log(1, 1.0, 1.0)])
    rec.opt_ratios = [0.5, 1.0]
    cli.export_csv([rec], tmp_path / "s.csv", with_opt=True)
    assert float(read_csv(tmp_path / "s.csv")[1][-1]) == 0.75
