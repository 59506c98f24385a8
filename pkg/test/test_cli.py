import csv
import json
import os
import subprocess
import sys

import pytest
from conftest import make_star_grid

from rocofd import cli
from rocofd.cli import EXIT_INFEASIBLE, EXIT_MODEL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main, thread_limit
from rocofd.data import serialize_grid
from rocofd.errors import ModelAssumptionError


@pytest.fixture
def star_path(tmp_path):
    path = os.path.join(tmp_path, "star.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_grid(make_star_grid()))
    return path


@pytest.fixture
def chain_path(tmp_path, chain_grid):
    path = os.path.join(tmp_path, "chain.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_grid(chain_grid))
    return path


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def test_rocof_json(star_path, tmp_path):
    out = os.path.join(tmp_path, "rocof.json")
    assert main(["rocof", "--grid", star_path, "--bus", "L1", "--mw", "150", "--output", out]) == EXIT_OK
    doc = read_json(out)
    assert doc["worst_bus"] == "G1"
    assert doc["worst_rocof_hz_per_s"] == -2.5
    assert doc["delta_pg_mw"] == {"G1": 50.0, "G2": 100.0}
    assert [b["bus_id"] for b in doc["buses"]] == ["G1", "G2", "L1"]


def test_rocof_csv_matches_json(chain_path, tmp_path):
    out_json = os.path.join(tmp_path, "rocof.json")
    out_csv = os.path.join(tmp_path, "rocof.csv")
    argv = ["rocof", "--grid", chain_path, "--bus", "L1", "--mw", "150"]
    assert main(argv + ["--output", out_json]) == EXIT_OK
    assert main(argv + ["--format", "csv", "--output", out_csv]) == EXIT_OK
    rows = read_csv(out_csv)
    assert rows[0] == ["bus_id", "bus_kind", "rocof_hz_per_s"]
    from_json = {b["bus_id"]: b["rocof_hz_per_s"] for b in read_json(out_json)["buses"]}
    assert {bus: float(value) for bus, _, value in rows[1:]} == from_json
    assert rows[1] == ["G1", "generator", "-3.21428571"]


def test_outputs_are_deterministic(chain_path, tmp_path):
    outputs = []
    for i in range(2):
        out = os.path.join(tmp_path, f"screen{i}.json")
        assert main(["screen", "--grid", chain_path, "--mw", "150", "--output", out]) == EXIT_OK
        with open(out, "rb") as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    assert [c["worst_bus"] for c in json.loads(outputs[0])["contingencies"]] == ["G1", "G2"]


def test_dispatch(star_path, tmp_path):
    out = os.path.join(tmp_path, "dispatch.json")
    argv = ["dispatch", "--grid", star_path, "--all-load-buses", "--mw", "150", "--rocof-max", "1.0", "--output", out]
    assert main(argv) == EXIT_OK
    doc = read_json(out)
    assert doc["status"] == "optimal"
    assert doc["objective"] == 1250.0
    assert doc["awards"] == [
        {"bus": "G1", "h_v_mws": 750.0, "price_per_mws": 1.0},
        {"bus": "G2", "h_v_mws": 500.0, "price_per_mws": 1.0},
    ]
    assert doc["audit"]["worst_bus"] == "G1"
    assert doc["audit"]["worst_rocof_hz_per_s"] == -1.0


def test_dispatch_infeasible(tmp_path, capsys):
    path = os.path.join(tmp_path, "tight.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_grid(make_star_grid(h_max_1=1000.0)))
    code = main(["dispatch", "--grid", path, "--all-load-buses", "--mw", "150", "--rocof-max", "1.0"])
    assert code == EXIT_INFEASIBLE
    captured = capsys.readouterr()
    assert json.loads(captured.out)["infeasible"] == [{"generator": "G1", "disturbance": {"bus": "L1", "mw": 150.0}}]
    assert "error: dispatch is infeasible: (G1, L1@150MW)" in captured.err


def test_dispatch_coi(chain_path, capsys):
    argv = ["dispatch", "--grid", chain_path, "--all-load-buses", "--mw", "150", "--rocof-max", "1.0", "--coi"]
    assert main(argv) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["model"] == "coi"
    assert doc["audit"]["secure"] is False


def test_validate_isolated_bus(tmp_path, chain_grid, capsys):
    doc = json.loads(serialize_grid(chain_grid))
    doc["load_buses"].append("L3")
    path = os.path.join(tmp_path, "broken.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
    assert main(["validate", "--grid", path]) == EXIT_USAGE
    assert "isolated bus" in capsys.readouterr().err


def test_validate_brace_pattern(star_path, chain_path, tmp_path, capsys):
    pattern = os.path.join(tmp_path, "{star,chain}.json")
    assert main(["validate", "--grid", pattern]) == EXIT_OK
    assert capsys.readouterr().out.count(": ok") == 2


def test_parse_error(tmp_path, capsys):
    path = os.path.join(tmp_path, "bad.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write("{\n  \"f0_hz\": 50,\n")
    assert main(["rocof", "--grid", path, "--bus", "L1", "--mw", "1"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("error: syntax error at line")
    assert "Traceback" not in err


@pytest.mark.parametrize(
    "argv",
    [
        ["rocof", "--grid", "g.json", "--mw", "150"],
        ["rocof", "--grid", "g.json", "--bus", "L1"],
        ["rocof", "--grid", "g.json", "--bus", "L1", "--trip", "G1", "--mw", "1"],
        ["dispatch", "--grid", "g.json", "--bus", "L1", "--mw", "150"],
        ["screen", "--grid", "g.json", "--trip", "G1", "--mw", "150"],
        ["rocof", "--grid", "g.json", "--bus", "L1", "--mw", "1", "--coi"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "extra",
    [
        ["rocof", "--bus", "L1", "--mw", "inf"],
        ["rocof", "--bus", "L1", "--mw", "nan"],
        ["dispatch", "--all-load-buses", "--mw", "nan", "--rocof-max", "1"],
        ["dispatch", "--all-load-buses", "--mw", "150", "--rocof-max", "inf"],
        ["simulate", "--bus", "L1", "--mw", "150", "--horizon", "inf"],
    ],
)
def test_non_finite_arguments(star_path, extra, capsys):
    assert main([extra[0], "--grid", star_path] + extra[1:]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("error:") and "finite" in err
    assert "Traceback" not in err


def test_out_of_range_number(tmp_path, capsys):
    doc = json.loads(serialize_grid(make_star_grid()))
    doc["generators"][0]["h_max_mws"] = 10**400
    path = os.path.join(tmp_path, "huge.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
    assert main(["rocof", "--grid", path, "--bus", "L1", "--mw", "150"]) == EXIT_USAGE
    assert "generators[0].h_max_mws is out of range" in capsys.readouterr().err


def test_model_assumption_exit_code(star_path, monkeypatch):
    def breach(grid, d):
        raise ModelAssumptionError("largest initial RoCoF is at load bus 'L1'")

    monkeypatch.setattr(cli, "nodal_rocof_report", breach)
    assert main(["rocof", "--grid", star_path, "--bus", "L1", "--mw", "150"]) == EXIT_MODEL


def test_trip(chain_path, capsys):
    assert main(["rocof", "--grid", chain_path, "--trip", "G2", "--mw", "150"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["disturbance"] == {"bus": "L2", "mw": 150.0, "label": "trip G2"}
    assert doc["worst_rocof_hz_per_s"] == -3.75


def test_simulate_csv(star_path, tmp_path):
    out = os.path.join(tmp_path, "trace.csv")
    argv = ["simulate", "--grid", star_path, "--bus", "L1", "--mw", "150", "--dt", "1e-4", "--horizon", "0.01"]
    assert main(argv + ["--format", "csv", "--output", out]) == EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["t_s", "G1", "G2", "L1"]
    assert len(rows) == 102
    rocof_rows = read_csv(os.path.join(tmp_path, "trace_rocof.csv"))
    assert rocof_rows[0] == rows[0]
    assert float(rocof_rows[1][1]) == pytest.approx(-2.5, rel=1e-3)


def test_simulate_json(star_path, capsys):
    argv = ["simulate", "--grid", star_path, "--bus", "L1", "--mw", "150", "--dt", "1e-4", "--horizon", "0.01"]
    assert main(argv) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["initial_rocof_hz_per_s"]["G1"] == pytest.approx(-2.5, rel=1e-3)
    assert doc["algebraic_rocof_hz_per_s"]["G1"] == -2.5


def test_dump_blocks(chain_path, tmp_path, capsys):
    dump = os.path.join(tmp_path, "blocks.csv")
    argv = ["rocof", "--grid", chain_path, "--bus", "L1", "--mw", "150", "--dump-blocks", dump]
    assert main(argv) == EXIT_OK
    rows = read_csv(dump)
    assert rows[0] == ["bus", "G1", "G2", "L1", "L2"]
    assert rows[3] == ["L1", "-10", "0", "12", "-2"]


def test_thread_limit():
    assert thread_limit({"ROCOF_DISPATCH_THREADS": "2"}) == 2
    assert 1 <= thread_limit({}) <= 4
    with pytest.raises(UsageError):
        thread_limit({"ROCOF_DISPATCH_THREADS": "zero"})
    with pytest.raises(UsageError, match="--rocof-max"):
        RunConfig(command="dispatch", grid_path="g.json", bus="L1", mw=1.0)


def test_console_entry_point(star_path):
    subprocess.check_call(
        [sys.executable, "-m", "rocofd", "rocof", "--grid", star_path, "--bus", "L1", "--mw", "150"],
        stdout=subprocess.DEVNULL,
        cwd=os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    )
