import csv
import json
import math

import numpy as np
import pytest
import yaml

from apqaoa import bench
from apqaoa.cli import main
from apqaoa.sat import parse_dimacs
from apqaoa.spectrum import build_spectrum
from oracles import brute_force_values


def _cfg(tmp_path, **kw):
    base = dict(n_values=[6], suite_size=2, base_seed=7, strategies=["QaaInit", "ApBased"], output_dir=str(tmp_path))
    base.update(kw)
    return bench.ExperimentConfig.from_dict(base)


def test_gen_is_byte_identical(tmp_path):
    a = bench.cmd_gen(_cfg(tmp_path / "a", n_values=[8], suite_size=3))
    b = bench.cmd_gen(_cfg(tmp_path / "b", n_values=[8], suite_size=3))
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
        assert pa.with_suffix(".json").read_bytes() == pb.with_suffix(".json").read_bytes()


def test_gen_sidecar_matches_brute_force(tmp_path):
    for path in bench.cmd_gen(_cfg(tmp_path, n_values=[8], suite_size=3)):
        meta = json.loads(path.with_suffix(".json").read_text())
        values = brute_force_values(parse_dimacs(path.read_bytes()))
        assert meta["interpretations"] == int(np.count_nonzero(values == meta["m"]))
        assert meta["satisfiable"]


def test_gen_flags_unsatisfiable(tmp_path):
    cfg = _cfg(tmp_path, model="F", n_values=[5], m_rule="fixed", m_fixed=60, suite_size=3)
    metas = [json.loads(p.with_suffix(".json").read_text()) for p in bench.cmd_gen(cfg)]
    assert not all(m["satisfiable"] for m in metas)
    for m in metas:
        assert m["satisfiable"] == (m["interpretations"] > 0)


def test_run_record_count_and_free_init(tmp_path):
    path, records, failures = bench.cmd_run(_cfg(tmp_path))
    assert failures == 0
    assert len(records) == 4
    for rec in records:
        assert rec["schema_version"] == bench.SCHEMA_VERSION
        assert rec["config_hash"] == _cfg(tmp_path).config_hash()
        if rec["strategy"] == "QaaInit":
            assert rec["cost_evals"] == 0
    assert len(path.read_text().splitlines()) == 4


def test_parallel_matches_serial(tmp_path):
    strategies = ["QaaSetting", "Interp", "ApBased"]
    _, serial, _ = bench.cmd_run(_cfg(tmp_path / "s", strategies=strategies, workers=1))
    _, parallel, _ = bench.cmd_run(_cfg(tmp_path / "p", strategies=strategies, workers=4))
    assert bench.canonical(serial) == bench.canonical(parallel)


def test_run_is_deterministic(tmp_path):
    _, a, _ = bench.cmd_run(_cfg(tmp_path / "a", strategies=["Fourier", "Tqa"], tqa_samples=2))
    _, b, _ = bench.cmd_run(_cfg(tmp_path / "b", strategies=["Fourier", "Tqa"], tqa_samples=2))
    assert bench.canonical(a) == bench.canonical(b)


def test_run_uses_generated_files(tmp_path):
    cfg = _cfg(tmp_path, suite_size=1)
    path = bench.cmd_gen(cfg)[0]
    path.write_text("p cnf 6 1\n1 2 3 0\n")
    _, records, failures = bench.cmd_run(cfg)
    assert failures == len(records) == 2
    assert all("does not match" in r["error"] for r in records)


def test_cli_exit_code_on_failures(tmp_path):
    cfg = _cfg(tmp_path, suite_size=1)
    bench.cmd_gen(cfg)[0].write_text("garbage")
    code = main(["run", "--out", str(tmp_path), "--n", "6", "--suite-size", "1", "--seed", "7",
                 "--strategies", "QaaInit"])
    assert code == 2


def _record(n, strategy, cost, prob, index=0):
    return {"instance": {"n": n, "index": index, "seed": index}, "strategy": strategy, "cost_evals": cost,
            "target_prob": prob, "expectation": 0.0, "status": "ok", "stages": [], "params": {}}


def test_aggregate_single_and_mean():
    (row,) = bench.aggregate([_record(4, "ApBased", 300, 0.5)])
    assert (row.count, row.cost_mean, row.cost_median, row.prob_mean) == (1, 300, 300, 0.5)
    (row,) = bench.aggregate([_record(4, "ApBased", 300, 0.5), _record(4, "ApBased", 302, 0.7, 1)])
    assert row.cost_mean == 301


def test_aggregate_is_a_fold(tmp_path):
    r1 = [_record(4, "ApBased", c, 0.1 * i, i) for i, c in enumerate([100, 120, 130])]
    r2 = [_record(4, "ApBased", c, 0.2, i + 3) for i, c in enumerate([90, 200])] + [_record(8, "Tqa", 500, 0.3)]
    for name, recs in (("a.jsonl", r1), ("b.jsonl", r2)):
        (tmp_path / name).write_text("".join(json.dumps(r) + "\n" for r in recs))
    both = bench.cmd_aggregate([tmp_path / "a.jsonl", tmp_path / "b.jsonl"], tmp_path / "agg")
    assert both == bench.aggregate(r1 + r2)


def test_aggregate_empty_raises():
    with pytest.raises(ValueError):
        bench.aggregate([])


def test_aggregate_outputs(tmp_path):
    cfg = _cfg(tmp_path, n_values=[4, 6])
    path, _, _ = bench.cmd_run(cfg)
    rows = bench.cmd_aggregate([path], tmp_path / "agg")
    assert {(r.n, r.strategy) for r in rows} == {(4, "QaaInit"), (4, "ApBased"), (6, "QaaInit"), (6, "ApBased")}
    for name in ("table.csv", "runs.csv", "params_trace.csv", "stage_costs.csv"):
        assert (tmp_path / "agg" / name).exists()
    with open(tmp_path / "agg" / "params_trace.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 2 * 4 + 2 * 6


def test_scan_surface(tmp_path):
    cfg = _cfg(tmp_path, n_values=[6], suite_size=1)
    formula = parse_dimacs(bench.cmd_gen(cfg)[0].read_bytes())
    scan = bench.cmd_scan(formula, tmp_path / "s.csv", resolution=2)
    with open(tmp_path / "s.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert all(0.0 <= float(r["value"]) <= 1.0 for r in rows)
    assert scan.evals == 4


def test_scan_expectation_mode(tmp_path):
    formula = parse_dimacs(bench.cmd_gen(_cfg(tmp_path, suite_size=1))[0].read_bytes())
    scan = bench.scan_surface(formula, 6, "expectation", resolution=3)
    m = formula.m
    assert np.all(scan.values <= m) and np.all(scan.values > 0)
    with pytest.raises(ValueError):
        bench.scan_surface(formula, 6, "bogus", 2)


def test_config_dump_round_trip(capsys):
    assert main(["config", "--dump", "--n", "4,8,16", "--f-tol", "1e-5"]) == 0
    data = yaml.safe_load(capsys.readouterr().out)
    cfg = bench.ExperimentConfig.from_dict(data)
    assert cfg.n_values == [4, 8, 16]
    assert cfg.optimizer["f_tol"] == 1e-5


def test_config_file_overridden_by_flags(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"suite_size": 5, "n_values": [6], "optimizer": {"max_iters": 7}}))
    main(["config", "--config", str(path), "--suite-size", "3"])
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["suite_size"] == 3
    assert data["n_values"] == [6]
    assert data["optimizer"]["max_iters"] == 7
    assert data["optimizer"]["grad_tol"] == 1e-5


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        bench.ExperimentConfig.from_dict({"colour": "blue"})
    with pytest.raises(ValueError):
        bench.ExperimentConfig.from_dict({"n_values": [30]})


def test_env_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(bench.OUT_ENV, str(tmp_path / "envout"))
    assert bench.ExperimentConfig().output_dir == str(tmp_path / "envout")


def test_hash_ignores_workers_and_output():
    a = bench.ExperimentConfig(workers=1, output_dir="x")
    b = bench.ExperimentConfig(workers=3, output_dir="y")
    c = bench.ExperimentConfig(base_seed=1)
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_cli_end_to_end(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["gen", "--out", out, "--n", "5", "--suite-size", "2"]) == 0
    inst = tmp_path / "instances" / "n05" / "inst_0000.cnf"
    capsys.readouterr()
    assert main(["spectrum", str(inst)]) == 0
    info = json.loads(capsys.readouterr().out)
    table = build_spectrum(parse_dimacs(inst.read_bytes()))
    assert info["G_0"] == table.c_max - table.c_min
    assert info["maximizers"] == table.maximizers.size
    assert main(["run", "--out", out, "--n", "5", "--suite-size", "2", "--strategies", "QaaInit,QaaSetting"]) == 0
    assert main(["aggregate", str(tmp_path / "results.jsonl")]) == 0
    assert (tmp_path / "aggregate" / "table.csv").exists()
    assert main(["scan", str(inst), "--output", str(tmp_path / "scan.csv"), "--resolution", "3"]) == 0
    assert main(["precompute-tqa", "--out", out, "--n", "5", "--tqa-samples", "2"]) == 0
    assert (tmp_path / "tqa_priors.json").exists()


def test_scan_ridge_near_quarter_pi(tmp_path):
    formula = parse_dimacs(bench.cmd_gen(_cfg(tmp_path, n_values=[8], suite_size=1))[0].read_bytes())
    scan = bench.scan_surface(formula, 8, "probability", resolution=25)
    assert abs(scan.best_theta - math.pi / 4) <= 0.3
