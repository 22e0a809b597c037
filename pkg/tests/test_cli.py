import csv
import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

import coopgrid.cli as cli
from coopgrid.cli import main
from coopgrid.scenario import dump_scenario, load_scenario, scenario_digest
from coopgrid.generate import GenSpec, gen_scenario


def write_scenario(path: Path, sc) -> Path:
    path.write_text(dump_scenario(sc))
    return path


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def arbitrage_path(fixtures_dir) -> str:
    return str(fixtures_dir / "arbitrage_t2.json")


def test_validate_ok_prints_digest(fixtures_dir, capsys):
    assert main(["validate", "--scenario", arbitrage_path(fixtures_dir)]) == 0
    sc = load_scenario(arbitrage_path(fixtures_dir))
    assert scenario_digest(sc) in capsys.readouterr().out


def test_validate_rejects_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--scenario", str(bad)]) == 2


def test_missing_scenario_leaves_no_artifacts(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--scenario", str(tmp_path / "nope.json"),
                 "--out-dir", str(out)])
    assert code == 2
    assert not out.exists()


def test_solve_centralized_writes_schedule_and_report(fixtures_dir, tmp_path):
    code = main(["solve", "--centralized", "--scenario", arbitrage_path(fixtures_dir),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "schedule_centralized.csv")
    assert [r["t"] for r in rows] == ["0", "1"]
    assert float(rows[0]["P_B_1_kw"]) == -4.0
    assert float(rows[1]["E_1_kwh"]) == 1.0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["command"] == "solve"
    assert abs(report["j"] - (-1.4)) < 1e-9
    sc = load_scenario(arbitrage_path(fixtures_dir))
    assert report["scenario_digest"] == scenario_digest(sc)


def test_solve_codes_writes_trace(fixtures_dir, tmp_path):
    code = main(["solve", "--codes", "--scenario", arbitrage_path(fixtures_dir),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    trace = read_csv(tmp_path / "trace_codes.csv")
    assert list(trace[0]) == ["iter", "J_est", "max_imbalance_kw",
                              "consensus_disagreement", "primal_step_norm"]
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["converged"] is True
    assert len(trace) == report["iterations"]
    assert float(trace[-1]["max_imbalance_kw"]) <= report["config"]["tol_balance_kw"]


def test_solve_codes_iteration_cap_exits_nonzero_but_writes(tmp_path, fixtures_dir):
    sc = load_scenario(arbitrage_path(fixtures_dir))
    starved = write_scenario(tmp_path / "starved.json",
                             dataclasses.replace(sc, codes=(("max_iters", 40.0),)))
    out = tmp_path / "out"
    code = main(["solve", "--codes", "--scenario", str(starved), "--out-dir", str(out)])
    assert code == 4
    assert (out / "schedule_codes.csv").is_file()
    assert len(read_csv(out / "trace_codes.csv")) == 40


def test_solve_runs_are_bit_identical(fixtures_dir, tmp_path):
    for sub in ("a", "b"):
        main(["solve", "--codes", "--scenario", arbitrage_path(fixtures_dir),
              "--out-dir", str(tmp_path / sub)])
    for name in ("schedule_codes.csv", "trace_codes.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_allocate_table_balances(fixtures_dir, tmp_path, capsys):
    code = main(["allocate", "--scenario", str(fixtures_dir / "three_agent.json"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "costs.csv")
    report = json.loads((tmp_path / "report.json").read_text())
    allocated = np.array([float(r["J_alloc"]) for r in rows])
    selfish = np.array([float(r["D"]) for r in rows])
    eps = {float(r["epsilon"]) for r in rows}
    assert abs(allocated.sum() - report["j"]) <= 1e-9
    assert len(eps) == 1
    assert np.allclose(selfish - allocated, report["epsilon"], atol=1e-12)
    assert "epsilon" in capsys.readouterr().out


def test_allocate_distributed_matches_centralized(fixtures_dir, tmp_path):
    base = fixtures_dir / "three_agent.json"
    main(["allocate", "--scenario", str(base), "--out-dir", str(tmp_path / "c")])
    code = main(["allocate", "--distributed", "--graph-tol", "1e-8",
                 "--scenario", str(base), "--out-dir", str(tmp_path / "d")])
    assert code == 0
    central = read_csv(tmp_path / "c" / "costs.csv")
    distrib = read_csv(tmp_path / "d" / "costs.csv")
    for rc, rd in zip(central, distrib):
        assert abs(float(rc["J_alloc"]) - float(rd["J_alloc"])) <= 1e-6
    rounds = json.loads((tmp_path / "d" / "report.json").read_text())["rounds"]
    assert 0 < rounds <= 200


def test_allocate_failed_bargaining_exit_code(fixtures_dir, tmp_path, monkeypatch):
    # force a disagreement point that cooperation cannot beat
    monkeypatch.setattr(cli, "disagreement_point", lambda sc: np.full(sc.n_users, -100.0))
    code = main(["allocate", "--scenario", arbitrage_path(fixtures_dir),
                 "--out-dir", str(tmp_path)])
    assert code == 5


def test_compare_passes_on_pinned_fixture(fixtures_dir, tmp_path, capsys):
    code = main(["compare", "--scenario", str(fixtures_dir / "three_agent.json"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "rel_gap" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["rel_gap"] <= 0.005
    assert report["iterations"] <= 20000
    assert (tmp_path / "schedule_centralized.csv").is_file()
    assert (tmp_path / "schedule_codes.csv").is_file()
    assert (tmp_path / "trace_codes.csv").is_file()


def test_compare_zero_tolerance_fails(fixtures_dir, tmp_path):
    code = main(["compare", "--tol", "0", "--scenario", arbitrage_path(fixtures_dir),
                 "--out-dir", str(tmp_path)])
    assert code == 6


def test_compare_divergent_steps_reports_nonconvergence(fixtures_dir, tmp_path):
    sc = load_scenario(arbitrage_path(fixtures_dir))
    wild = write_scenario(
        tmp_path / "wild.json",
        dataclasses.replace(sc, codes=(("max_iters", 400.0), ("xi1_desd", 10.0),
                                       ("xi1_grid", 10.0))))
    out = tmp_path / "out"
    code = main(["compare", "--scenario", str(wild), "--out-dir", str(out)])
    assert code == 4
    assert len(read_csv(out / "trace_codes.csv")) == 400


def test_infeasible_scenario_exit_code(tmp_path):
    sc = gen_scenario(GenSpec(users=(2, 2), active=(0, 0), horizon=(3, 3)), 0)
    squeezed = dataclasses.replace(sc, p_grid_max_kw=0.01)
    path = write_scenario(tmp_path / "squeezed.json", squeezed)
    assert main(["solve", "--scenario", str(path), "--out-dir", str(tmp_path)]) == 3


def test_weights_matrix_is_doubly_stochastic(fixtures_dir, tmp_path):
    code = main(["weights", "--scenario", str(fixtures_dir / "three_agent.json"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "weights.csv")
    w = np.array([[float(r[c]) for c in ("1", "2", "3", "4")] for r in rows])
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-12)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert np.array_equal(w, w.T)


def test_gen_is_deterministic_and_valid(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--seed", "11", "--out", str(a), "--graph", "star"]) == 0
    assert main(["gen", "--seed", "11", "--out", str(b), "--graph", "star"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["validate", "--scenario", str(a)]) == 0


def test_gen_bad_range_is_validation_error(tmp_path):
    code = main(["gen", "--seed", "0", "--users", "0", "0",
                 "--out", str(tmp_path / "x.json")])
    assert code == 2
