import csv
import json
import subprocess
import sys

import pytest

from cluspt.bench import CSV_HEADER, SUMMARY_HEADER, mean_ranks, rpd, run_campaign
from cluspt.cli import main
from cluspt.engine import EngineConfig
from cluspt.instance import generate_instance, write_instance

from .conftest import SAMPLE


@pytest.mark.parametrize(
    "avg, best, expected",
    [(110, 100, 10.0), (100, 100, 0.0), (43971, 43724.1, 0.5647)],
)
def test_rpd(avg, best, expected):
    assert rpd(avg, best) == pytest.approx(expected, abs=1e-4)


def test_rpd_rejects_zero_best():
    with pytest.raises(ValueError):
        rpd(5, 0)


def test_mean_ranks():
    assert mean_ranks([[1, 2, 3], [3, 2, 1]]) == [2.0, 2.0, 2.0]
    assert mean_ranks([[5, 5, 1]]) == [2.5, 2.5, 1.0]
    with pytest.raises(ValueError):
        mean_ranks([[1, 2], [1]])


def test_campaign_rows_and_seeds(path_graph):
    report = run_campaign([path_graph], EngineConfig(pop_size=4, generations=2, master_seed=7), runs=3)
    assert [(r.run, r.seed) for r in report.rows] == [(0, 7), (1, 8), (2, 9)]
    (agg,) = report.aggregates()
    assert agg.bf == agg.avg == 6.0
    assert report.to_csv().splitlines()[0] == ",".join(CSV_HEADER)
    assert report.summary_csv().splitlines()[0] == ",".join(SUMMARY_HEADER)
    assert json.loads(report.to_json())["rows"][0]["best_cost"] == 6.0


@pytest.fixture
def instances(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text(write_instance(generate_instance(20, 4, 0.4, seed=1, name="a")))
    b.write_text(write_instance(generate_instance(24, 4, 0.4, seed=2, name="b")))
    return a, b


def solve(tmp_path, instances, out, *extra):
    a, b = instances
    return main([
        "solve", "--instance", str(a), "--instance", str(b), "--pop", "10", "--gens", "5",
        "--runs", "2", "--out", str(tmp_path / out), *extra,
    ])


def rows_without_time(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r.pop("time_ms")
    return rows


def test_cli_solve_outputs(tmp_path, instances, capsys):
    code = solve(tmp_path, instances, "r.csv", "--json", str(tmp_path / "r.json"), "--trace", str(tmp_path / "tr"))
    assert code == 0
    rows = rows_without_time(tmp_path / "r.csv")
    assert [(r["instance"], r["run"]) for r in rows] == [("a", "0"), ("a", "1"), ("b", "0"), ("b", "1")]
    assert (tmp_path / "r.summary.csv").read_text().startswith("instance,runs,bf,avg,time_ms")
    assert len(json.loads((tmp_path / "r.json").read_text())["rows"]) == 4
    trace = (tmp_path / "tr" / "a_run0.csv").read_text().splitlines()
    assert trace[0] == "generation,best_cost" and len(trace) == 7
    assert "a: BF=" in capsys.readouterr().out


def test_cli_solve_reproducible_and_memo_neutral(tmp_path, instances):
    solve(tmp_path, instances, "one.csv")
    solve(tmp_path, instances, "two.csv")
    solve(tmp_path, instances, "plain.csv", "--no-memo")
    solve(tmp_path, instances, "par.csv", "--workers", "2")
    base = rows_without_time(tmp_path / "one.csv")
    assert base == rows_without_time(tmp_path / "two.csv")
    assert base == rows_without_time(tmp_path / "par.csv")
    plain = rows_without_time(tmp_path / "plain.csv")
    assert [r["best_cost"] for r in plain] == [r["best_cost"] for r in base]
    assert {r["memo"] for r in plain} == {"0"}


def test_cli_gen_validate_oracle(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen", "--vertices", "8", "--clusters", "3", "--density", "0.5", "--out", str(out)]) == 0
    assert main(["validate", "--instance", str(out)]) == 0
    assert main(["oracle", "--instance", str(out)]) == 0
    assert "optimal_cost" in capsys.readouterr().out


def test_cli_oracle_fixed_roots(tmp_path, capsys):
    p = tmp_path / "s.txt"
    p.write_text(SAMPLE)
    assert main(["oracle", "--instance", str(p), "--fixed-roots", "1,3"]) == 0
    out = capsys.readouterr().out
    assert "optimal_cost 6.0" in out and "enumerated 1" in out
    assert main(["oracle", "--instance", str(p), "--fixed-roots", "1"]) == 1


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text(SAMPLE.replace("2 3 1.0\n", ""))
    big = tmp_path / "big.txt"
    big.write_text(write_instance(generate_instance(40, 7, 0.5, seed=1)))
    assert main(["validate", "--instance", str(bad)]) == 2
    assert main(["solve", "--instance", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["solve", "--instance", str(tmp_path / "missing"), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["oracle", "--instance", str(big)]) == 2
    assert main(["solve", "--instance", str(big), "--out", str(tmp_path / "x.csv"), "--pop", "1"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1


def test_module_entry_point(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text(SAMPLE)
    proc = subprocess.run(
        [sys.executable, "-m", "cluspt", "validate", "--instance", str(p)], capture_output=True, text=True
    )
    assert proc.returncode == 0
