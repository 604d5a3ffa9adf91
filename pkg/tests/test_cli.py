import csv
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from suiteopt import Selection, build_default_library, bundled_scenario, evaluate, load_scenario
from suiteopt import cli

SMALL = "linear:length=60,spacing=3,landmarks=30,halfwidth=12,seed=2"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# suiteopt ")
    return list(csv.reader(lines[1:]))


class TestGen:
    def test_writes_file_and_summary(self, tmp_path, capsys):
        code, out, _ = run(["gen", "--kind", "linear", "--seed", "7", "--out", tmp_path / "s.json"], capsys)
        assert code == 0
        assert "151 poses, 120 landmarks" in out
        assert len(load_scenario(tmp_path / "s.json").landmarks) == 120

    def test_rerun_identical(self, tmp_path, capsys):
        for name in ("a.json", "b.json"):
            run(["gen", "--kind", "loop", "--seed", "3", "--landmarks", "40", "--out", tmp_path / name], capsys)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_zero_landmarks_rejected(self, tmp_path, capsys):
        code, _, err = run(["gen", "--kind", "loop", "--landmarks", "0", "--out", tmp_path / "x.json"], capsys)
        assert code == 2 and "landmark_count" in err
        assert not (tmp_path / "x.json").exists()


class TestEval:
    def test_empty_is_baseline(self, capsys):
        code, out, _ = run(["eval", "--gen", SMALL, "--sensors", ""], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["score"]["logdet"] == evaluate(cli.parse_gen_spec(SMALL), ()).logdet

    def test_matches_api_bit_for_bit(self, capsys):
        code, out, _ = run(["eval", "--gen", "linear03", "--sensors", "0,14,40"], capsys)
        lib = build_default_library()
        api = evaluate(bundled_scenario("linear03"), Selection.of(lib, [0, 14, 40]))
        assert json.loads(out)["score"]["logdet"] == api.logdet
        assert json.loads(out)["score"]["n"] == api.n

    def test_superset_scores_higher(self, capsys):
        _, a, _ = run(["eval", "--gen", SMALL, "--sensors", "1"], capsys)
        _, b, _ = run(["eval", "--gen", SMALL, "--sensors", "1,20,45"], capsys)
        assert json.loads(b)["score"]["logdet"] >= json.loads(a)["score"]["logdet"]

    def test_window(self, capsys):
        code, out, _ = run(["eval", "--gen", SMALL, "--sensors", "1", "--window", "0"], capsys)
        assert code == 0 and json.loads(out)["score"]["n"] == 3 * 5 + 2 * 30

    def test_unknown_sensor(self, capsys):
        code, _, err = run(["eval", "--gen", SMALL, "--sensors", "99"], capsys)
        assert code == 2 and "unknown sensor id 99" in err

    def test_missing_scenario_file(self, tmp_path, capsys):
        code, _, err = run(["eval", "--scenario", tmp_path / "nope.json"], capsys)
        assert code == 2 and "no such scenario file" in err

    def test_custom_library_file(self, tmp_path, capsys):
        from suiteopt import save_library
        save_library(build_default_library().subset([0, 40]), tmp_path / "lib.json")
        code, out, _ = run(["eval", "--gen", SMALL, "--library", tmp_path / "lib.json", "--sensors", "1"], capsys)
        assert code == 0 and json.loads(out)["selection"]["sensors"] == ["HD2K stereo @ 2 o'clock"]


class TestGreedy:
    def test_default_budget_in_metadata(self, tmp_path, capsys):
        code, _, _ = run(["greedy", "--gen", SMALL, "--cardinality", "2", "--out", tmp_path], capsys)
        doc = json.loads((tmp_path / "selection.json").read_text())
        assert code == 0
        assert doc["meta"]["config"]["budget"] == 110000
        assert doc["budget_usd"] == 110000

    def test_one_dollar_budget(self, tmp_path, capsys):
        code, _, _ = run(["greedy", "--gen", SMALL, "--budget", "1", "--out", tmp_path], capsys)
        doc = json.loads((tmp_path / "selection.json").read_text())
        assert code == 0 and doc["selection"]["sensor_ids"] == []

    def test_toy_library_against_oracle(self, tmp_path, capsys):
        from suiteopt import Evaluator, exhaustive, save_library
        lib = build_default_library().subset([0, 1, 2, 14, 26, 38, 44, 50])
        save_library(lib, tmp_path / "toy.json")
        code, _, _ = run(["greedy", "--gen", SMALL, "--library", tmp_path / "toy.json",
                          "--cardinality", "3", "--out", tmp_path / "o"], capsys)
        doc = json.loads((tmp_path / "o" / "selection.json").read_text())
        scenario = cli.parse_gen_spec(SMALL)
        ev = Evaluator(scenario)
        best = ev.score(exhaustive(lib, scenario, 110_000, 3, evaluator=ev)).logdet
        assert doc["evaluations"] == 8 + 7 + 6
        assert doc["score"] - doc["baseline"] >= (1 - 1 / math.e) * (best - doc["baseline"])

    def test_trace_csv(self, tmp_path, capsys):
        run(["greedy", "--gen", SMALL, "--objective", "cost-benefit", "--budget", "8000", "--out", tmp_path], capsys)
        rows = _csv_rows(tmp_path / "trace.csv")
        assert rows[0][:3] == ["step", "sensor_id", "sensor"]
        costs = [float(r[3]) for r in rows[1:]]
        assert costs == sorted(costs) and costs[-1] <= 8000


class TestPareto:
    def test_front_outputs(self, tmp_path, capsys):
        code, _, _ = run(["pareto", "--gen", SMALL, "--budget", "20000", "--svg", "--out", tmp_path], capsys)
        assert code == 0
        rows = _csv_rows(tmp_path / "front.csv")[1:]
        pts = [(float(r[0]), float(r[1]), float(r[2])) for r in rows]
        assert [p[0] for p in pts] == sorted(p[0] for p in pts)
        assert max(p[2] for p in pts) == 1.0 and all(0 <= p[2] <= 1 for p in pts)
        for c, j, _ in pts:
            assert not any(c2 <= c and j2 >= j and (c2 < c or j2 > j) for c2, j2, _ in pts)
        root = ET.parse(tmp_path / "front.svg").getroot()
        assert root.tag.endswith("svg")


class TestResilient:
    def test_outputs(self, tmp_path, capsys):
        code, out, _ = run(["resilient", "--gen", SMALL, "--budget", "8000", "--period-s", "10",
                            "--runs", "2", "--svg", "--out", tmp_path], capsys)
        assert code == 0 and "periods" in out
        grid = _csv_rows(tmp_path / "grid.csv")
        for row in grid[1:]:
            assert row.count("failed") == 1
        report = json.loads((tmp_path / "report.json").read_text())["report"]
        assert len(report["periods"]) == len(grid) - 1
        assert len(report["simulation"]["runs"]) == 2
        ET.parse(tmp_path / "grid.svg")


@pytest.mark.parametrize("argv, files", [
    (["eval", "--gen", SMALL, "--sensors", "1,40"], ["eval.json"]),
    (["greedy", "--gen", SMALL, "--budget", "9000"], ["selection.json", "trace.csv"]),
    (["pareto", "--gen", SMALL, "--budget", "9000", "--svg"], ["front.csv", "front.json", "front.svg"]),
    (["resilient", "--gen", SMALL, "--budget", "7000", "--period-s", "10", "--runs", "2", "--svg"],
     ["plan.json", "grid.csv", "report.json", "grid.svg"]),
])
def test_rerun_byte_identical(tmp_path, capsys, argv, files):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        target = d / "eval.json" if argv[0] == "eval" else d
        assert run(argv + ["--out", target], capsys)[0] == 0
        outs.append({f: (d / f).read_bytes() for f in files})
    assert outs[0] == outs[1]


def test_budget_must_be_positive(capsys):
    code, _, err = run(["greedy", "--gen", SMALL, "--budget", "0"], capsys)
    assert code == 2 and "--budget" in err


def test_singular_exit_code(monkeypatch, capsys):
    from suiteopt import SingularSystemError

    def boom(*args, **kwargs):
        raise SingularSystemError("information matrix is singular: non-positive pivot at pose 0 (x)")

    monkeypatch.setattr(cli, "evaluate", boom)
    code, _, err = run(["eval", "--gen", SMALL], capsys)
    assert code == 3 and "pose 0 (x)" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "suiteopt", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("suiteopt ")
