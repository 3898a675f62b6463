import csv
import json

import numpy as np
import pytest

from slicemux import selfcheck
from slicemux.cli import main
from slicemux.demand_gen import DemandTrace, read_trace_csv, write_trace_csv

MARKOV = {
    "horizon": 20_000,
    "seed": 3,
    "slices": [
        {"name": "a", "p_h": 0.75, "p_l": 0.0,
         "model": {"kind": "markov", "states": [0, 10], "transitions": [[0.5, 0.5], [0.5, 0.5]]}},
        {"name": "b", "p_h": 0.75, "p_l": 0.0,
         "model": {"kind": "markov", "states": [0, 10], "transitions": [[0.5, 0.5], [0.5, 0.5]]}},
    ],
}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "markov.json"
    p.write_text(json.dumps(MARKOV))
    return p


@pytest.fixture
def anti_trace(tmp_path):
    p = tmp_path / "anti.csv"
    a = np.tile([10, 0], 20)
    write_trace_csv(DemandTrace(np.stack([a, 10 - a], axis=1)), p)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_trace_command_deterministic(config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["trace", "--config", str(config), "--out", str(a)]) == 0
    assert main(["trace", "--config", str(config), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads(a.with_suffix(".meta.json").read_text())
    assert meta["seed"] == 3 and meta["rows"] == 20_000 and len(meta["spec_hash"]) == 64
    assert read_trace_csv(a).demands.shape == (20_000, 2)


def test_trace_command_window(config, tmp_path):
    out = tmp_path / "w.csv"
    assert main(["trace", "--config", str(config), "--out", str(out), "--window", "100"]) == 0
    assert read_trace_csv(out).horizon == 200
    assert json.loads(out.with_suffix(".meta.json").read_text())["window_slots"] == 100


def test_stats_command(anti_trace, tmp_path, capsys):
    assert main(["stats", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1], "p_l": [0.5, 1]}']) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["slice", "w_l", "p_m"]
    assert [int(r[1]) for r in rows[1:]] == [0, 10]


def test_provision_anti_correlated(anti_trace, tmp_path):
    shared, isolated = tmp_path / "s.json", tmp_path / "i.json"
    assert main(["provision", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1], "p_l": [0, 0]}', "--out", str(shared)]) == 0
    assert main(["provision", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1], "p_l": [1, 1]}', "--out", str(isolated)]) == 0
    s, i = json.loads(shared.read_text()), json.loads(isolated.read_text())
    assert s["total"] == 10 and i["total"] == 20 and i["w_c"] == 0
    assert s["full_isolation_total"] == 20
    assert s["report"]["passed"] and s["report"]["availability"] == [1.0, 1.0]


def test_sla_file(anti_trace, tmp_path, capsys):
    sla = tmp_path / "sla.json"
    sla.write_text('{"p_h": [1, 1]}')
    assert main(["provision", "--trace", str(anti_trace), "--sla", str(sla)]) == 0
    assert json.loads(capsys.readouterr().out)["total"] == 10


def test_sweep_command(anti_trace, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1]}', "--step", "0.5", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["pl_0", "pl_1", "wl_0", "wl_1", "wc", "total"]
    assert len(rows) == 10
    assert int(rows[1][-1]) == 10 and int(rows[-1][-1]) == 20
    assert out.with_suffix(".svg").read_text().lstrip().startswith("<?xml")


def test_oracle_two_slice(config, tmp_path):
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", str(config), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["kind", "w_c", "value"]
    got = {r[0]: int(r[1]) for r in rows[1:] if r[0] != "epsilon_star"}
    assert got == {"offline": 10, "max_weight": 10, "static_threshold": 10}
    curve = [(int(r[1]), float(r[2])) for r in rows[1:] if r[0] == "epsilon_star"]
    assert curve[0][1] < 0 and dict(curve)[10] >= 0


def test_oracle_no_coverage_needed(anti_trace, capsys):
    assert main(["oracle", "--trace", str(anti_trace), "--sla", '{"p_h": [0.5, 0.5]}']) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert [r[1] for r in rows[1:]] == ["0", "0"]


def test_bench_command(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--out", str(out), "--n", "2,4", "--slots", "200", "--repeats", "2", "--backend", "python"]) == 0
    rows = read_csv(out)
    assert rows[0] == ["backend", "n_slices", "slots", "repeats", "mean_us_per_slot", "min_us_per_slot", "max_us_per_slot"]
    assert [r[1] for r in rows[1:]] == ["2", "4"]


def test_validate_passes(capsys):
    assert main(["validate", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_validate_catches_broken_knapsack(monkeypatch, capsys):
    def greedy(values, weights, capacity):
        order = np.argsort(-np.asarray(values) / np.asarray(weights), kind="stable")
        picked, used = [], 0
        for i in order:
            if used + weights[i] <= capacity:
                picked.append(int(i))
                used += weights[i]
        return tuple(sorted(picked))

    monkeypatch.setattr(selfcheck, "solve_knapsack", greedy)
    assert main(["validate"]) == 2
    assert "FAIL  knapsack" in capsys.readouterr().out


def test_validate_deterministic(capsys):
    main(["validate", "--seed", "4"])
    first = capsys.readouterr().out
    main(["validate", "--seed", "4"])
    assert capsys.readouterr().out == first


def test_exit_codes(anti_trace, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"horizon": 10,\n "slices": [}')
    assert main(["provision", "--config", str(bad)]) == 3
    assert "line 2" in capsys.readouterr().err
    # P^L above P^H
    assert main(["provision", "--trace", str(anti_trace), "--sla", '{"p_h": [0.5, 1], "p_l": [0.6, 0]}']) == 2
    assert main(["provision", "--trace", str(anti_trace), "--sla", '{"p_h": [1]}']) == 2
    assert main(["sweep", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1]}', "--step", "0.1",
                 "--caps", "sweep_cells=5", "--out", str(tmp_path / "x.csv")]) == 4
    assert main(["stats", "--trace", str(anti_trace), "--sla", '{"p_h": [1, 1]}', "--caps", "nope=1"]) == 3
    broken = tmp_path / "broken.csv"
    broken.write_text("slot,a\n0,1\n")
    assert main(["stats", "--trace", str(broken), "--sla", '{"p_h": [1]}']) == 2
    assert main(["stats", "--trace", str(tmp_path / "missing.csv"), "--sla", '{"p_h": [1]}']) == 3
    assert main(["stats", "--sla", '{"p_h": [1]}']) == 3
