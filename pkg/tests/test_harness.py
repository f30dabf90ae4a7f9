import csv
import json

import numpy as np
import pytest

from onebit import harness
from onebit.cli import main
from onebit.exceptions import DegenerateSolutionError, InvalidArgumentError
from onebit.harness import (
    CSV_COLUMNS,
    BenchmarkConfig,
    aggregate,
    derive_trial_seed,
    emit_csv,
    run_benchmark,
    run_trials,
    tau_sensitivity,
)
from onebit.metrics import extract_support, score_support
from onebit.model import generate_instance, save_instance
from onebit.solver import SolverConfig, solve

SMALL = dict(m=40, n=20, k_values=(1, 3, 5), trials=4, master_seed=9)


class TestBenchmark:
    def test_single_trial_equals_its_score(self):
        cfg = BenchmarkConfig(m=40, n=20, k_values=(1,), trials=1, master_seed=3)
        records = run_benchmark(cfg)
        seed = derive_trial_seed(3, 1, 0)
        inst = generate_instance(40, 20, 1, seed)
        for rec in records:
            res = solve(inst, SolverConfig(mode=rec.algorithm, lam=0.5))
            est = extract_support(res.estimate, cfg.tau)
            score = score_support(inst.truth.support, est, 20)
            assert rec.trials == 1 and rec.failed == 0
            assert rec.mean_false_alarm_rate == score.false_alarm_rate
            assert rec.mean_miss_rate == score.miss_rate
            assert rec.mean_support_size == len(est)
            assert rec.mean_outer_iterations == res.outer_iterations

    def test_byte_identical_csv(self, tmp_path):
        cfg = BenchmarkConfig(**SMALL)
        emit_csv(run_benchmark(cfg), tmp_path / "a.csv")
        emit_csv(run_benchmark(cfg), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        serial = run_benchmark(BenchmarkConfig(**SMALL))
        parallel = run_benchmark(BenchmarkConfig(**SMALL, workers=2))
        assert serial == parallel

    def test_pairing(self):
        outcomes = run_trials(BenchmarkConfig(**SMALL))
        by_cell = {}
        for o in outcomes:
            by_cell.setdefault((o.k, o.trial), set()).add(o.instance_digest)
        assert len(by_cell) == 3 * 4
        assert all(len(d) == 1 for d in by_cell.values())
        assert len({next(iter(d)) for d in by_cell.values()}) == len(by_cell)

    def test_seeds_distinct(self):
        seeds = {derive_trial_seed(0, k, t) for k in range(1, 51) for t in range(300)}
        assert len(seeds) == 50 * 300
        assert all(0 <= s < 2**63 for s in seeds)

    def test_failed_trials_excluded_and_flagged(self, monkeypatch):
        real_solve = harness.solve

        def flaky(instance, cfg):
            if cfg.mode.value == "l1" and instance.seed % 2 == 0:
                raise DegenerateSolutionError("forced")
            return real_solve(instance, cfg)

        monkeypatch.setattr(harness, "solve", flaky)
        cfg = BenchmarkConfig(m=30, n=10, k_values=(2,), trials=20, master_seed=1)
        outcomes = run_trials(cfg)
        rec = {r.algorithm: r for r in aggregate(cfg, outcomes)}
        failed = sum(o.failed for o in outcomes)
        assert rec["l1"].failed == failed > 0
        assert rec["l1"].flagged and not rec["gauss"].flagged
        ok = [o.false_alarm_rate for o in outcomes if o.algorithm == "l1" and not o.failed]
        assert rec["l1"].mean_false_alarm_rate == pytest.approx(np.mean(ok))

    def test_timing_off_by_default(self):
        rec = run_benchmark(BenchmarkConfig(m=20, n=10, k_values=(2,), trials=2))
        assert all(r.mean_wall_time_ms == 0.0 for r in rec)
        rec = run_benchmark(BenchmarkConfig(m=20, n=10, k_values=(2,), trials=2, timing=True))
        assert all(r.mean_wall_time_ms > 0.0 for r in rec)

    def test_tau_sensitivity(self):
        cfg = BenchmarkConfig(**SMALL)
        outcomes = run_trials(cfg)
        rows = tau_sensitivity(outcomes, [cfg.tau, 0.5], cfg.n)
        assert len(rows) == 2 * 3 * 2
        base = {(r.k, r.algorithm): r for r in aggregate(cfg, outcomes)}
        for tau, k, alg, fa, miss in rows:
            if tau == cfg.tau:
                assert fa == pytest.approx(base[k, alg].mean_false_alarm_rate)
                assert miss == pytest.approx(base[k, alg].mean_miss_rate)

    @pytest.mark.parametrize("changes", [
        dict(k_values=(0,)), dict(k_values=(51,)), dict(trials=0), dict(algorithms=("l2",)),
        dict(lam=0.0), dict(tau=-1.0), dict(k_values=())])
    def test_invalid_config(self, changes):
        with pytest.raises(InvalidArgumentError):
            BenchmarkConfig(**changes)


class TestCsv:
    def test_rows_and_header(self, tmp_path):
        cfg = BenchmarkConfig(**SMALL)
        path = tmp_path / "out.csv"
        emit_csv(run_benchmark(cfg), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 7
        assert lines[0] == ("K,algorithm,trials,failed,false_alarm_rate,miss_rate,"
                            "mean_support_size,mean_outer_iterations,mean_wall_time_ms")
        assert tuple(lines[0].split(",")) == CSV_COLUMNS
        rows = list(csv.DictReader(lines))
        assert [(r["K"], r["algorithm"]) for r in rows] == [
            ("1", "gauss"), ("1", "l1"), ("3", "gauss"), ("3", "l1"), ("5", "gauss"), ("5", "l1")]

    def test_nine_significant_digits(self, tmp_path):
        rec = harness.MetricsRecord(2, "gauss", 3, 0, 1 / 3, 2 / 3, 1.5, 10.0, 0.0)
        path = tmp_path / "out.csv"
        emit_csv([rec], path)
        row = path.read_text().splitlines()[1]
        assert row == "2,gauss,3,0,0.333333333,0.666666667,1.5,10,0"

    def test_empty(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            emit_csv([], tmp_path / "x.csv")


class TestCli:
    def test_generate_then_solve(self, tmp_path, capsys):
        path = tmp_path / "inst.json"
        assert main(["generate", "--m", "100", "--n", "50", "--k", "3", "--seed", "7",
                     "--out", str(path)]) == 0
        doc = json.loads(path.read_text())
        assert doc["m"] == 100 and doc["seed"] == 7
        out_path = tmp_path / "res.json"
        code = main(["solve", "--instance", str(path), "--mode", "gauss", "--out", str(out_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "support:" in out and "true_support:" in out and "objective_trace:" in out
        res = json.loads(out_path.read_text())
        assert np.linalg.norm(res["estimate"]) == pytest.approx(1.0)
        assert res["converged"] is True

    def test_solve_from_params(self, capsys):
        code = main(["solve", "--m", "60", "--n", "20", "--k", "2", "--seed", "1", "--mode", "l1",
                     "--lambda", "0.5", "--init", "random:3", "--max-outer", "500"])
        assert code in (0, 2)
        assert "true_support:" in capsys.readouterr().out

    def test_nonconvergence_exit_code(self, capsys):
        assert main(["solve", "--m", "100", "--n", "50", "--k", "3", "--seed", "1",
                     "--mode", "gauss", "--max-outer", "1"]) == 2

    @pytest.mark.parametrize("argv", [
        ["solve", "--m", "10", "--n", "5", "--k", "2", "--seed", "1", "--mode", "l2"],
        ["solve", "--m", "10", "--n", "5", "--k", "2", "--seed", "1"],
        ["solve", "--mode", "gauss"],
        ["solve", "--m", "10", "--n", "5", "--k", "9", "--seed", "1", "--mode", "gauss"],
        ["bench", "--k", "2,x", "--csv", "a.csv"],
        ["bench", "--modes", "gauss,l3", "--csv", "a.csv"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            code = main(argv)
            raise SystemExit(code)
        assert exc.value.code == 64

    def test_missing_instance_file(self, tmp_path, capsys):
        assert main(["solve", "--instance", str(tmp_path / "none.json"), "--mode", "gauss"]) == 74

    def test_malformed_instance_reports_field(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        inst = generate_instance(5, 3, 1, 0)
        save_instance(inst, path)
        doc = json.loads(path.read_text())
        doc["signs"][0] = 0
        path.write_text(json.dumps(doc))
        assert main(["solve", "--instance", str(path), "--mode", "gauss"]) == 74
        err = capsys.readouterr().err
        assert "signs" in err and str(path) in err

    def test_bench_writes_csv(self, tmp_path, capsys):
        path = tmp_path / "b.csv"
        code = main(["bench", "--m", "30", "--n", "15", "--k", "1,2", "--trials", "2",
                     "--seed", "4", "--modes", "gauss,l1", "--csv", str(path),
                     "--tau-report", "0.001,0.1"])
        assert code == 0
        assert len(path.read_text().splitlines()) == 5
        assert "tau,K,algorithm" in capsys.readouterr().out

    def test_bench_unwritable_csv(self, tmp_path, capsys):
        code = main(["bench", "--m", "20", "--n", "10", "--k", "1", "--trials", "1",
                     "--csv", str(tmp_path / "no" / "such" / "dir.csv")])
        assert code == 74
