"""CLI tests: argument handling, output formats, artifact writing, and the
0/1/2 exit-code contract."""
import pytest

import dynsched.cli as cli
from dynsched.experiments import parse_csv
from dynsched.kernel import SimulationFault


def run_cli(*argv, capsys=None):
    code = cli.main(list(argv))
    out, err = capsys.readouterr() if capsys else ("", "")
    return code, out, err


class TestSimulate:
    def test_one_result_line(self, capsys):
        code, out, err = run_cli(
            "simulate", "--kernel", "outer", "--n", "20", "--p", "3",
            "--strategy", "random-outer", "--seed", "1", capsys=capsys,
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 1
        assert "kernel=outer" in lines[0]
        assert "normalized_comm=" in lines[0]
        assert "beta=" not in lines[0]

    def test_two_phase_reports_beta(self, capsys):
        code, out, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "20", "--p", "3",
            "--strategy", "dynamic-outer-2p", "--beta", "auto", "--seed", "1",
            capsys=capsys,
        )
        assert code == 0 and "beta=" in out

    def test_explicit_beta(self, capsys):
        code, out, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "20", "--p", "3",
            "--strategy", "dynamic-outer-2p", "--beta", "2.5", "--seed", "1",
            capsys=capsys,
        )
        assert code == 0 and "beta=2.5" in out

    def test_deterministic_across_calls(self, capsys):
        argv = ("simulate", "--kernel", "matmul", "--n", "6", "--p", "2",
                "--strategy", "dynamic-matrix", "--seed", "9")
        _, first, _ = run_cli(*argv, capsys=capsys)
        _, second, _ = run_cli(*argv, capsys=capsys)
        assert first == second

    def test_trace_file(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        code, _, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "2",
            "--strategy", "dynamic-outer", "--seed", "3",
            "--trace", str(trace), capsys=capsys,
        )
        assert code == 0
        lines = trace.read_text().strip().split("\n")
        assert lines[0] == "event_time,worker,x,unprocessed_fraction"
        assert len(lines) > 2

    def test_uniform_speeds(self, capsys):
        code, out, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "4",
            "--strategy", "random-outer", "--uniform", "10,100", "--seed", "2",
            capsys=capsys,
        )
        assert code == 0 and "comm_blocks=" in out

    def test_set_speeds(self, capsys):
        code, _, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "4",
            "--strategy", "random-outer", "--set", "80,100,150", "--seed", "2",
            capsys=capsys,
        )
        assert code == 0

    def test_jitter(self, capsys):
        code, _, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "4",
            "--strategy", "random-outer", "--uniform", "80,120",
            "--jitter", "0.05", "--seed", "2", capsys=capsys,
        )
        assert code == 0

    def test_speeds_file(self, tmp_path, capsys):
        speeds = tmp_path / "speeds.txt"
        speeds.write_text("120.0\n80.0\n100.0\n")
        code, _, _ = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "3",
            "--strategy", "sorted-outer", "--speeds-file", str(speeds),
            "--seed", "2", capsys=capsys,
        )
        assert code == 0

    def test_speeds_file_p_mismatch(self, tmp_path, capsys):
        speeds = tmp_path / "speeds.txt"
        speeds.write_text("120.0\n80.0\n")
        code, _, err = run_cli(
            "simulate", "--kernel", "outer", "--n", "16", "--p", "3",
            "--strategy", "random-outer", "--speeds-file", str(speeds),
            "--seed", "2", capsys=capsys,
        )
        assert code == 1 and "speeds file has 2" in err


class TestAnalyze:
    def test_report_fields(self, capsys):
        code, out, _ = run_cli(
            "analyze", "--kernel", "outer", "--n", "100", "--p", "20",
            "--beta", "4.17", capsys=capsys,
        )
        assert code == 0
        for field in ("objective=", "phase1_volume=", "phase2_volume=",
                      "total_volume=", "lower_bound="):
            assert field in out

    def test_matmul(self, capsys):
        code, out, _ = run_cli(
            "analyze", "--kernel", "matmul", "--n", "40", "--p", "100",
            "--beta", "2.92", capsys=capsys,
        )
        assert code == 0 and "lower_bound=" in out

    def test_requires_beta(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("analyze", "--kernel", "outer", "--n", "100", "--p", "20",
                    capsys=capsys)
        assert exc.value.code == 1

    def test_inadmissible_beta(self, capsys):
        # switch fraction undefined at this beta for p=2: usage error
        code, _, err = run_cli(
            "analyze", "--kernel", "outer", "--n", "100", "--p", "2",
            "--beta", "11", capsys=capsys,
        )
        assert code == 1 and "error:" in err


class TestOptimizeBeta:
    def test_homogeneous_reference_point(self, capsys):
        code, out, _ = run_cli(
            "optimize-beta", "--kernel", "outer", "--n", "100", "--p", "20",
            capsys=capsys,
        )
        assert code == 0
        fields = dict(line.split("=") for line in out.strip().split("\n"))
        assert float(fields["beta"]) == pytest.approx(4.1705, abs=1e-3)
        assert float(fields["phase1_fraction"]) == pytest.approx(0.9846, abs=1e-3)
        assert float(fields["objective"]) > 0

    def test_speeds_file(self, tmp_path, capsys):
        speeds = tmp_path / "speeds.txt"
        speeds.write_text("120.0\n80.0\n100.0\n60.0\n")
        code, out, _ = run_cli(
            "optimize-beta", "--kernel", "outer", "--n", "30", "--p", "4",
            "--speeds-file", str(speeds), capsys=capsys,
        )
        assert code == 0 and "beta=" in out


class TestExperiment:
    def test_spec_run_writes_csv(self, tmp_path, capsys):
        spec = tmp_path / "mini.spec"
        spec.write_text(
            "kernel = outer\nn = 16\np = 2 3\n"
            "strategies = random-outer dynamic-outer\n"
            "scenario = uniform:10:100\nreplications = 2\nseed = 1\n"
        )
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            "experiment", "--spec", str(spec), "--out", str(out_dir),
            capsys=capsys,
        )
        assert code == 0
        rows = parse_csv(out_dir / "mini.csv")
        assert len(rows) == 4
        assert f"wrote {out_dir / 'mini.csv'}" in out

    def test_plot_flag_adds_svg(self, tmp_path, capsys):
        # homogeneous speeds keep the auto beta admissible at tiny p, so the
        # analysis overlay series is always present
        spec = tmp_path / "mini.spec"
        spec.write_text(
            "kernel = outer\nn = 16\np = 2 3\n"
            "strategies = random-outer dynamic-outer-2p\n"
            "scenario = homogeneous\nreplications = 2\nseed = 1\n"
        )
        out_dir = tmp_path / "out"
        code, _, _ = run_cli(
            "experiment", "--spec", str(spec), "--out", str(out_dir), "--plot",
            capsys=capsys,
        )
        assert code == 0
        svg = (out_dir / "mini.svg").read_text()
        assert svg.startswith("<svg")
        assert svg.count("<polyline") == 3  # 2 strategies + analysis overlay

    def test_jobs_flag_same_rows(self, tmp_path, capsys):
        spec = tmp_path / "mini.spec"
        spec.write_text(
            "kernel = outer\nn = 16\np = 2 3\n"
            "strategies = random-outer\nscenario = homogeneous\n"
            "replications = 2\nseed = 1\n"
        )
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("experiment", "--spec", str(spec), "--out", str(a), capsys=capsys)
        run_cli("experiment", "--spec", str(spec), "--out", str(a.with_name('b')),
                "--jobs", "2", capsys=capsys)
        assert (a / "mini.csv").read_text() == (b / "mini.csv").read_text()

    def test_bad_spec_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "bad.spec"
        spec.write_text("kernel = outer\n")
        code, _, err = run_cli(
            "experiment", "--spec", str(spec), "--out", str(tmp_path / "o"),
            capsys=capsys,
        )
        assert code == 1 and "missing" in err

    def test_unknown_recipe_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("experiment", "--recipe", "fig99", "--out", "/tmp/x",
                    capsys=capsys)
        assert exc.value.code == 1

    def test_recipe_and_spec_mutually_exclusive(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("experiment", "--recipe", "fig2", "--spec", "x.spec",
                    "--out", str(tmp_path), capsys=capsys)
        assert exc.value.code == 1


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["bogus"],
            ["simulate", "--kernel", "outer", "--n", "9"],
            ["simulate", "--kernel", "triangular", "--n", "9", "--p", "2",
             "--strategy", "random-outer", "--seed", "0"],
            ["simulate", "--kernel", "outer", "--n", "x", "--p", "2",
             "--strategy", "random-outer", "--seed", "0"],
            ["simulate", "--kernel", "outer", "--n", "9", "--p", "2",
             "--strategy", "random-outer", "--seed", "0", "--beta", "oops"],
            ["simulate", "--kernel", "outer", "--n", "9", "--p", "2",
             "--strategy", "random-outer", "--seed", "0", "--uniform", "10"],
            ["experiment", "--out", "/tmp/x"],
        ],
    )
    def test_usage_errors_exit_1(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 1
        capsys.readouterr()

    def test_semantic_errors_return_1(self, capsys):
        code, _, err = run_cli(
            "simulate", "--kernel", "outer", "--n", "9", "--p", "2",
            "--strategy", "random-matrix", "--seed", "0", capsys=capsys,
        )
        assert code == 1 and "does not apply" in err

    def test_beta_on_static_strategy_returns_1(self, capsys):
        code, _, err = run_cli(
            "simulate", "--kernel", "outer", "--n", "9", "--p", "2",
            "--strategy", "random-outer", "--beta", "3", "--seed", "0",
            capsys=capsys,
        )
        assert code == 1 and "two-phase" in err

    def test_simulation_fault_returns_2(self, monkeypatch, capsys):
        def boom(config):
            raise SimulationFault("worker 0 saw 1000 empty batches")

        monkeypatch.setattr(cli, "run_simulation", boom)
        code, _, err = run_cli(
            "simulate", "--kernel", "outer", "--n", "9", "--p", "2",
            "--strategy", "random-outer", "--seed", "0", capsys=capsys,
        )
        assert code == 2 and "empty batches" in err

    def test_help_exits_0(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--help"])
        assert exc.value.code == 0
        capsys.readouterr()


class TestConsoleScript:
    def test_installed_entry_point(self):
        import shutil
        import subprocess

        exe = shutil.which("dynsched")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run(
            [exe, "optimize-beta", "--kernel", "outer", "--n", "100", "--p", "20"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("beta=4.17")
