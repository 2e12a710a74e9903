import csv
import io
import json
import math
from pathlib import Path

import pytest

from crslab.core.file_handler import load_instance, load_partition, save_partition, save_system
from crslab.core.guarantees import auto_alpha, baseline
from crslab.main import run_command
from crslab.models.lp import LpSolution, LpStatus


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def tightness_file(tmp_path, default_config, capsys):
    path = tmp_path / "tight.json"
    assert run_command(["generate", "--kind", "tightness", "--L", "2", "--eps", "0.1", "--out", str(path)],
                       default_config) == 0
    capsys.readouterr()
    return str(path)


def test_usage_error(default_config, capsys):
    assert run_command(["guarantees", "--bogus"], default_config) == 2
    assert run_command([], default_config) == 2


def test_version(default_config, capsys):
    assert run_command(["--version"], default_config) == 0
    assert "crslab" in capsys.readouterr().out


def test_guarantees_single_row(default_config, capsys):
    assert run_command(["guarantees", "--L", "2", "--grid", "1000"], default_config) == 0
    rows = csv_rows(capsys.readouterr().out)
    assert len(rows) == 1
    assert rows[0]["L"] == "2"
    assert float(rows[0]["baseline"]) == pytest.approx(0.33333, abs=1e-5)
    assert float(rows[0]["offline_ub"]) == pytest.approx(0.48148, abs=1e-5)
    assert float(rows[0]["integrality_gap"]) == pytest.approx(0.66667, abs=1e-5)
    assert float(rows[0]["standard_alpha"]) == pytest.approx(0.33336, abs=1e-4)


def test_guarantees_range_as_json(default_config, capsys):
    assert run_command(["guarantees", "--L", "2..5", "--grid", "1000", "--format", "json"], default_config) == 0
    document = json.loads(capsys.readouterr().out)
    assert [row["L"] for row in document["rows"]] == [2, 3, 4, 5]


def test_generate_to_stdout(default_config, capsys):
    assert run_command(["generate", "--kind", "random", "--L", "2", "--seed", "4"], default_config) == 0
    instance = load_instance(capsys.readouterr().out)
    assert instance.L == 2


def test_generate_plane(default_config, capsys):
    assert run_command(["generate", "--kind", "plane", "--L", "3"], default_config) == 0
    assert json.loads(capsys.readouterr().out)


def test_generate_bad_plane_order(default_config, capsys):
    assert run_command(["generate", "--kind", "plane", "--L", "6"], default_config) == 1
    assert "not a prime power" in capsys.readouterr().err


def test_validate(tightness_file, default_config, capsys, tmp_path):
    assert run_command(["validate", "--instance", tightness_file], default_config) == 0
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert run_command(["validate", "--instance", str(broken)], default_config) == 1
    assert run_command(["validate", "--instance", str(tmp_path / "missing.json")], default_config) == 1


def test_lp(tightness_file, default_config, capsys):
    assert run_command(["lp", "--instance", tightness_file], default_config) == 0
    rows = csv_rows(capsys.readouterr().out)
    assert rows[0] == {"variable": "status", "value": "optimal"}
    assert rows[1]["variable"] == "objective"
    assert float(rows[1]["value"]) == pytest.approx(2.8)
    # one row per product after status and objective
    assert len(rows) == 2 + 6


def test_lp_reports_non_optimal_status(tightness_file, default_config, capsys, monkeypatch):
    monkeypatch.setattr("crslab.main.simplex_solve",
                        lambda program, tol=1e-9: LpSolution(LpStatus.INFEASIBLE, (), math.nan))
    assert run_command(["lp", "--instance", tightness_file], default_config) == 0
    captured = capsys.readouterr()
    rows = csv_rows(captured.out)
    assert rows == [{"variable": "status", "value": "infeasible"}, {"variable": "objective", "value": "n/a"}]
    assert "infeasible" in captured.err


def test_simulate_ocrs(tightness_file, default_config, capsys):
    assert run_command(["simulate", "ocrs", "--instance", tightness_file, "--alpha", "0.3333"], default_config) == 0
    rows = csv_rows(capsys.readouterr().out)
    assert len(rows) == 6
    assert all(float(row["ratio"]) == pytest.approx(0.3333) for row in rows)


def test_alpha_out_of_range(tightness_file, default_config, capsys):
    assert run_command(["simulate", "ocrs", "--instance", tightness_file, "--alpha", "1.5"], default_config) == 2


def test_simulate_rcrs(tightness_file, default_config, capsys):
    argv = ["simulate", "rcrs", "--instance", tightness_file, "--scheme", "greedy", "--paths", "2000"]
    assert run_command(argv, default_config) == 0
    assert len(csv_rows(capsys.readouterr().out)) == 6


def test_oracle_dp(tightness_file, default_config, capsys):
    assert run_command(["oracle", "dp", "--instance", tightness_file], default_config) == 0
    row = csv_rows(capsys.readouterr().out)[0]
    assert float(row["lp_value"]) == pytest.approx(2.8)
    assert float(row["ratio"]) >= 1 / 3 - 1e-4


def test_verify_tightness(default_config, capsys):
    assert run_command(["verify", "tightness", "--L", "2", "--eps", "0.01"], default_config) == 0
    assert "PASS" in capsys.readouterr().err


def test_selection_function_to_file(default_config, capsys, tmp_path):
    out = tmp_path / "c2.csv"
    assert run_command(["selection-function", "--L", "2", "--grid", "1000", "--out", str(out)], default_config) == 0
    rows = csv_rows(out.read_text(encoding="utf-8"))
    assert len(rows) == 1000
    assert float(rows[0]["c"]) == 1.0


def test_reduce_and_run_online(one_item_system, default_config, capsys, tmp_path):
    path = tmp_path / "system.json"
    path.write_text(save_system(one_item_system), encoding="utf-8")
    assert run_command(["reduce", "--system", str(path)], default_config) == 0
    document = json.loads(capsys.readouterr().out)
    assert set(document) == {"lp_value", "dummy_counts", "mapping", "instance"}

    argv = ["run-online", "--system", str(path), "--alpha", "0.5", "--paths", "2000", "--recourse", "table"]
    assert run_command(argv, default_config) == 0
    captured = capsys.readouterr()
    assert csv_rows(captured.out)
    assert "mean reward" in captured.err


def test_partition_unlocks_partite_alpha(default_config, capsys, tmp_path):
    instance_path, partition_path = tmp_path / "partite.json", tmp_path / "groups.json"
    argv = ["generate", "--kind", "partite", "--L", "2", "--group-size", "3", "--batches", "4",
            "--max-batch", "3", "--tight", "--seed", "3", "--out", str(instance_path),
            "--partition", str(partition_path)]
    assert run_command(argv, default_config) == 0
    capsys.readouterr()
    instance = load_instance(instance_path.read_text(encoding="utf-8"))
    partition = load_partition(partition_path.read_text(encoding="utf-8"))
    expected = auto_alpha(instance, partition)
    assert expected > baseline(2)

    argv = ["simulate", "ocrs", "--instance", str(instance_path), "--partition", str(partition_path)]
    assert run_command(argv, default_config) == 0
    rows = csv_rows(capsys.readouterr().out)
    assert rows
    assert all(float(row["ratio"]) == pytest.approx(expected, abs=1e-6) for row in rows)


def test_partition_must_certify_instance(tightness_file, default_config, capsys, tmp_path):
    items = [item.id for item in load_instance(Path(tightness_file).read_text(encoding="utf-8")).items]
    path = tmp_path / "groups.json"
    path.write_text(save_partition([items[:2], items[2:]]), encoding="utf-8")
    # the tightness instance for L=2 is K4, which has no proper 2-coloring
    argv = ["simulate", "ocrs", "--instance", tightness_file, "--partition", str(path)]
    assert run_command(argv, default_config) == 1
    assert "rejected" in capsys.readouterr().err


def test_partition_needs_partite_kind(default_config, capsys, tmp_path):
    argv = ["generate", "--kind", "tightness", "--partition", str(tmp_path / "groups.json")]
    assert run_command(argv, default_config) == 1
    assert "--kind partite" in capsys.readouterr().err
