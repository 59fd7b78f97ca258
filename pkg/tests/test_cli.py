"""CLI contract tests: exit codes, file outputs, determinism."""

import json

import pytest

from dpolab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFieldCommand:
    def test_writes_csv_and_meta(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, stdout, _ = run(
            capsys, "field", "--beta", "0.1", "--grid", "0.01:2:50", "--out", str(out)
        )
        assert code == 0
        field = out / "field.csv"
        meta = out / "meta.json"
        assert field.exists() and meta.exists()
        lines = field.read_text().splitlines()
        assert lines[0] == "x1,x2,loss,g_x1,g_x2,grad_norm,dir_x1,dir_x2,ratio,region"
        assert len(lines) == 2501
        body = json.loads(meta.read_text())
        assert body["command"] == "field"
        assert body["schema_version"] == "1"
        assert body["parameters"]["beta"] == 0.1

    def test_identical_argv_byte_identical_data(self, tmp_path, capsys):
        argv = ["field", "--beta", "0.3", "--grid", "0.05:1.5:10"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(out_a)]) == 0
        assert main(argv + ["--out", str(out_b)]) == 0
        capsys.readouterr()
        assert (out_a / "field.csv").read_bytes() == (out_b / "field.csv").read_bytes()

    def test_json_format(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, _, _ = run(
            capsys, "field", "--grid", "1:2:2", "--format", "json", "--out", str(out)
        )
        assert code == 0
        rows = json.loads((out / "field.json").read_text())
        assert len(rows) == 4
        assert rows[0]["region"] in {"TopLeft", "TopRight", "BottomLowX2", "Interior"}


class TestLandscapeCommand:
    def test_separate_axes(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, _, _ = run(
            capsys, "landscape", "--grid", "1:2:2", "--grid2", "0.5:1:3", "--out", str(out)
        )
        assert code == 0
        lines = (out / "landscape.csv").read_text().splitlines()
        assert lines[0] == "x1,x2,loss"
        assert len(lines) == 7  # header + 2*3 nodes


class TestFlowCommand:
    def test_trajectory_output(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, stdout, _ = run(
            capsys, "flow", "--init", "1,1", "--beta", "0.5", "--method", "euler",
            "--step", "0.1", "--max-steps", "1", "--stop-loss", "0", "--out", str(out)
        )
        assert code == 0
        lines = (out / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,x1,x2,loss,g_x1,g_x2,grad_norm,ratio"
        assert len(lines) == 3
        final = lines[-1].split(",")
        assert float(final[1]) == pytest.approx(1.025, rel=1e-15)
        assert float(final[2]) == pytest.approx(0.975, rel=1e-15)
        assert "MaxSteps" in stdout

    def test_negative_beta_is_usage_error(self, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "flow", "--init", "1,1", "--beta", "-0.5", "--out", str(tmp_path / "d")
        )
        assert code == 2
        assert "usage error" in stderr
        assert "--beta" in stderr

    def test_malformed_init(self, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "flow", "--init", "1;1", "--out", str(tmp_path / "d")
        )
        assert code == 2
        assert "--init" in stderr


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, _, _ = run(
            capsys, "sweep", "--beta", "0.5", "--grid", "0.8:1.2:2", "--step", "0.005",
            "--max-steps", "200", "--stop-loss", "0", "--record-every", "10",
            "--out", str(out)
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "x1_0,x2_0,region,steps_to_stop,termination,final_x1,final_x2,slow_time"
        assert len(lines) == 5


class TestTrainCommand:
    def test_preset_trace(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, _, _ = run(
            capsys, "train", "--preset", "preferred_leading", "--steps", "20",
            "--lr", "0.1", "--out", str(out)
        )
        assert code == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "step,loss,pi_w,pi_l,x1,x2,margin,rest_mass,grad_norm,d_pi_w,d_pi_l"
        assert len(lines) == 22
        report = json.loads((out / "rate_report.json").read_text())
        assert report["asymmetry_holds"] is True

    def test_dataset_file(self, tmp_path, capsys):
        dataset = tmp_path / "triples.jsonl"
        dataset.write_text(
            '{"prompt": "q", "y_w": [0, 1], "y_l": [0, 0]}\n'
            '{"prompt": "q", "y_w": [1, 1], "y_l": [1, 0]}\n'
        )
        out = tmp_path / "d"
        code, _, _ = run(
            capsys, "train", "--mode", "autoregressive", "--vocab", "2", "--length", "2",
            "--dataset", str(dataset), "--steps", "3", "--out", str(out)
        )
        assert code == 0
        assert (out / "trace.csv").exists()

    def test_bad_dataset_line(self, tmp_path, capsys):
        dataset = tmp_path / "triples.jsonl"
        dataset.write_text('{"prompt": "q"}\n')
        code, _, stderr = run(
            capsys, "train", "--dataset", str(dataset), "--out", str(tmp_path / "d")
        )
        assert code == 2
        assert "--dataset" in stderr

    def test_unknown_preset(self, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "train", "--preset", "nowhere", "--out", str(tmp_path / "d")
        )
        assert code == 2
        assert "--preset" in stderr


class TestCheckGradCommand:
    def test_pass_run_prints_report(self, capsys):
        code, stdout, _ = run(capsys, "check-grad", "--beta", "0.5", "--samples", "100")
        assert code == 0
        assert "max relative gradient error" in stdout
        assert "PASS" in stdout

    def test_fail_exit_code_with_unreachable_tol(self, capsys):
        code, stdout, _ = run(
            capsys, "check-grad", "--samples", "50", "--tol", "1e-18"
        )
        assert code == 1
        assert "FAIL" in stdout

    def test_zero_samples_usage_error(self, capsys):
        code, _, stderr = run(capsys, "check-grad", "--samples", "0")
        assert code == 2
        assert "--samples" in stderr

    def test_optional_output_files(self, tmp_path, capsys):
        out = tmp_path / "d"
        code, _, _ = run(capsys, "check-grad", "--samples", "20", "--out", str(out))
        assert code == 0
        body = json.loads((out / "check_grad.json").read_text())
        assert body["passed"] is True
        assert (out / "meta.json").exists()


class TestUsageErrors:
    def test_unknown_flag(self, capsys):
        code = main(["field", "--no-such-flag", "1"])
        captured = capsys.readouterr()
        assert code == 2
        assert "--no-such-flag" in captured.err

    def test_unknown_command(self, capsys):
        assert main(["render"]) == 2

    def test_missing_out(self, capsys):
        code, _, stderr = run(capsys, "field")
        assert code == 2
        assert "--out" in stderr

    def test_bad_grid_syntax(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "field", "--grid", "0:2", "--out", str(tmp_path / "d"))
        assert code == 2
        assert "--grid" in stderr

    def test_grid_below_floor(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "field", "--grid", "0:2:50", "--out", str(tmp_path / "d"))
        assert code == 2
        assert "--grid" in stderr
