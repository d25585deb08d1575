import json

import pytest

from evobnb.cli import EXIT_ERROR, EXIT_LIMIT, EXIT_OK, EXIT_USAGE, main
from evobnb.milp import read_instance, write_instance
from instance_zoo import random_knapsack

import numpy as np


def write_tiny_instance(path):
    rng = np.random.default_rng(0)
    m = random_knapsack(rng, max_items=6)
    write_instance(m, path)


class TestGen:
    def test_writes_count_files(self, tmp_path, capsys):
        rc = main([
            "gen", "--type", "gisp", "--count", "5", "--nodes-graph", "6",
            "--seed", "3", "--out", str(tmp_path),
        ])
        assert rc == EXIT_OK
        files = sorted(tmp_path.glob("*.milp"))
        assert len(files) == 5
        assert files[0].name == "gisp_3_0000.milp"
        read_instance(files[0])  # parses back

    def test_byte_identical_reruns(self, tmp_path):
        for sub in ("a", "b"):
            rc = main([
                "gen", "--type", "maxsat", "--count", "3", "--nodes-graph", "8",
                "--seed", "11", "--out", str(tmp_path / sub),
            ])
            assert rc == EXIT_OK
        for fa in sorted((tmp_path / "a").glob("*.milp")):
            fb = tmp_path / "b" / fa.name
            assert fa.read_bytes() == fb.read_bytes()

    def test_zero_count_rejected(self, tmp_path, capsys):
        rc = main(["gen", "--type", "gisp", "--count", "0", "--out", str(tmp_path)])
        assert rc == EXIT_ERROR
        assert "error" in capsys.readouterr().err

    def test_fcmcnf_generates_connected(self, tmp_path):
        rc = main([
            "gen", "--type", "fcmcnf", "--count", "2", "--nodes-graph", "5",
            "--edge-prob", "0.4", "--seed", "1", "--out", str(tmp_path),
        ])
        assert rc == EXIT_OK
        assert len(list(tmp_path.glob("*.milp"))) == 2

    def test_config_header_on_stderr(self, tmp_path, capsys):
        main([
            "gen", "--type", "gisp", "--count", "1", "--nodes-graph", "5",
            "--seed", "9", "--out", str(tmp_path),
        ])
        err = capsys.readouterr().err
        header = [l for l in err.splitlines() if l.startswith("config: ")]
        assert len(header) == 1
        payload = json.loads(header[0][len("config: "):])
        assert payload["command"] == "gen"
        assert payload["seed"] == 9

    def test_seed_env_fallback(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("GP2S_SEED", "77")
        main([
            "gen", "--type", "gisp", "--count", "1", "--nodes-graph", "5",
            "--out", str(tmp_path),
        ])
        err = capsys.readouterr().err
        payload = json.loads(err.splitlines()[0][len("config: "):])
        assert payload["seed"] == 77
        assert list(tmp_path.glob("gisp_77_*.milp"))


class TestSolve:
    def test_optimal_exit_and_json(self, tmp_path, capsys):
        inst = tmp_path / "tiny.milp"
        write_tiny_instance(inst)
        rc = main(["solve", str(inst), "--strategy", "lb-bfs"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        payload = json.loads(out.strip().splitlines()[-1])
        assert payload["status"] == "optimal"
        assert payload["gap"] == 0.0
        assert payload["strategy"] == "lb-bfs"

    def test_node_limit_exit_code(self, tmp_path, capsys):
        inst = tmp_path / "tiny.milp"
        write_tiny_instance(inst)
        rc = main(["solve", str(inst), "--node-limit", "1"])
        assert rc == EXIT_LIMIT
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["status"] == "node_limit"
        assert payload["objective"] is None
        assert payload["gap"] == 1e20

    def test_expr_strategy_dispatch(self, tmp_path, capsys):
        inst = tmp_path / "tiny.milp"
        write_tiny_instance(inst)
        policy = tmp_path / "best.ssx"
        policy.write_text("(sub lb (mul bigM depth))\n")
        rc = main(["solve", str(inst), "--strategy", f"expr:{policy}"])
        assert rc == EXIT_OK
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["strategy"] == f"expr:{policy}"

    def test_unknown_strategy(self, tmp_path, capsys):
        inst = tmp_path / "tiny.milp"
        write_tiny_instance(inst)
        rc = main(["solve", str(inst), "--strategy", "dfs"])
        assert rc == EXIT_ERROR

    def test_unreadable_instance(self, capsys):
        rc = main(["solve", "/nonexistent/foo.milp"])
        assert rc == EXIT_ERROR


class TestTrainAndBench:
    def test_pipeline(self, tmp_path, capsys):
        inst_dir = tmp_path / "instances"
        rc = main([
            "gen", "--type", "gisp", "--count", "4", "--nodes-graph", "6",
            "--seed", "5", "--out", str(inst_dir),
        ])
        assert rc == EXIT_OK
        train_out = tmp_path / "gp"
        rc = main([
            "train", str(inst_dir), "--fitness", "nodes", "--pop", "6",
            "--gens", "2", "--tournament", "3", "--seed", "5",
            "--node-limit", "200", "--out", str(train_out),
        ])
        assert rc == EXIT_OK
        assert (train_out / "best.ssx").exists()
        assert (train_out / "convergence.csv").exists()
        header = (train_out / "convergence.csv").read_text().splitlines()[0]
        assert header == "generation,best_so_far_fitness,population_best_fitness,mean_size"

        bench_out = tmp_path / "bench"
        rc = main([
            "bench", str(inst_dir),
            "--strategy", "lb-bfs", "--strategy", "be-bfs", "--strategy", "be-dfs",
            "--strategy", f"expr:{train_out / 'best.ssx'}",
            "--measure", "nodes", "--node-limit", "200",
            "--out", str(bench_out), "--omit-wall-time",
        ])
        assert rc == EXIT_OK
        summary = (bench_out / "summary.csv").read_text().splitlines()
        assert summary[0] == "strategy,measure_geomean,geo_stddev,inf_count"
        assert len(summary) == 5  # four strategies
        report = (bench_out / "report.csv").read_text().splitlines()
        assert len(report) == 1 + 4 * 4

    def test_empty_directory_rejected(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        rc = main(["train", str(empty), "--pop", "4", "--gens", "1"])
        assert rc == EXIT_ERROR
        assert "no .milp instances" in capsys.readouterr().err

    def test_train_jobs_reproduces_sequential(self, tmp_path):
        inst_dir = tmp_path / "instances"
        main([
            "gen", "--type", "gisp", "--count", "3", "--nodes-graph", "6",
            "--seed", "21", "--out", str(inst_dir),
        ])
        flags = [
            "train", str(inst_dir), "--fitness", "nodes", "--pop", "5",
            "--gens", "2", "--tournament", "2", "--seed", "21",
            "--node-limit", "150",
        ]
        assert main(flags + ["--out", str(tmp_path / "seq")]) == EXIT_OK
        assert main(flags + ["--jobs", "2", "--out", str(tmp_path / "par")]) == EXIT_OK
        assert (tmp_path / "seq" / "best.ssx").read_bytes() == (
            tmp_path / "par" / "best.ssx"
        ).read_bytes()
        assert (tmp_path / "seq" / "convergence.csv").read_bytes() == (
            tmp_path / "par" / "convergence.csv"
        ).read_bytes()

    def test_bench_unknown_strategy_errors(self, tmp_path, capsys):
        inst_dir = tmp_path / "instances"
        main([
            "gen", "--type", "gisp", "--count", "1", "--nodes-graph", "5",
            "--seed", "2", "--out", str(inst_dir),
        ])
        rc = main(["bench", str(inst_dir), "--strategy", "random-walk"])
        assert rc == EXIT_ERROR
        assert "unknown strategy" in capsys.readouterr().err


class TestExprCommand:
    def test_canonicalizes(self, capsys):
        rc = main(["expr", "( add lb   lb )"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "canonical: (add lb lb)" in out
        assert "size: 3" in out
        assert "depth: 1" in out

    def test_evaluates(self, capsys):
        rc = main([
            "expr", "(sub lb (mul bigM depth))", "--eval",
            "--lb", "5", "--depth", "2", "--big-m", "1e6",
        ])
        assert rc == EXIT_OK
        assert "value: -1999995.0" in capsys.readouterr().out

    def test_reads_file(self, tmp_path, capsys):
        f = tmp_path / "p.ssx"
        f.write_text("# comment\n(div estimate depth)\n")
        rc = main(["expr", "--file", str(f)])
        assert rc == EXIT_OK
        assert "canonical: (div estimate depth)" in capsys.readouterr().out

    def test_bad_expression(self, capsys):
        rc = main(["expr", "(add lb"])
        assert rc == EXIT_ERROR


class TestUsageErrors:
    def test_unknown_subcommand_exits_3(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_missing_required_flag_exits_3(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--count", "3"])
        assert exc.value.code == EXIT_USAGE
