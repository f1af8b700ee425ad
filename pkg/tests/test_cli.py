import json

import pytest
from click.testing import CliRunner

from lorhol.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def emitted(tmp_path, runner):
    """Emit the appendix fixture's files once per test."""
    def _emit(name="r9"):
        res = runner.invoke(main, ["fixtures", "emit", name, "-o",
                                   str(tmp_path)])
        assert res.exit_code == 0, res.output
        return {
            "g": str(tmp_path / f"{name}-g.json"),
            "a": str(tmp_path / f"{name}-a.json"),
            "gp": str(tmp_path / f"{name}-gprime-expected.json"),
        }
    return _emit


def run_json(runner, args):
    res = runner.invoke(main, args + ["--json"])
    try:
        report = json.loads(res.output)
    except json.JSONDecodeError:
        report = None
    return res, report


class TestFixturesCommands:
    def test_list(self, runner):
        res, report = run_json(runner, ["fixtures", "list"])
        assert res.exit_code == 0
        assert "minkowski" in report["fixtures"]

    def test_emit_unknown_name(self, runner):
        res = runner.invoke(main, ["fixtures", "emit", "nope"])
        assert res.exit_code == 2


class TestClassify:
    def test_minkowski_is_O_everywhere(self, runner, emitted):
        files = emitted("minkowski")
        res, report = run_json(runner, ["classify", "-m", files["g"],
                                        "--samples", "8"])
        assert res.exit_code == 0
        assert report["classes_seen"] == ["O"]

    def test_appendix_class_A(self, runner, emitted):
        files = emitted("r9")
        res, report = run_json(runner, ["classify", "-m", files["g"],
                                        "--samples", "8"])
        assert res.exit_code == 0
        assert report["classes_seen"] == ["A"]

    def test_waveband_class_D_spacelike(self, runner, emitted):
        files = emitted("r11")
        res, report = run_json(runner, ["classify", "-m", files["g"],
                                        "--samples", "8"])
        assert res.exit_code == 0
        assert report["classes_seen"] == ["D"]
        assert all(e["theta"] > 0 for e in report["per_point"])

    def test_single_point(self, runner, emitted):
        files = emitted("r9")
        res, report = run_json(runner, ["classify", "-m", files["g"],
                                        "-p", "1.0,1.0,0.2,0.3"])
        assert res.exit_code == 0
        assert len(report["per_point"]) == 1

    def test_missing_file_is_usage_error(self, runner):
        res = runner.invoke(main, ["classify", "-m", "no-such-file.json"])
        assert res.exit_code == 2


class TestHolonomy:
    def test_appendix_r9(self, runner, emitted):
        files = emitted("r9")
        res, report = run_json(runner, ["holonomy", "-m", files["g"],
                                        "--samples", "12"])
        assert res.exit_code == 0
        assert report["label"] == "R9"

    def test_nonharmonic_r14(self, runner, emitted):
        files = emitted("r14")
        res, report = run_json(runner, ["holonomy", "-m", files["g"],
                                        "--samples", "12"])
        assert res.exit_code == 0
        assert report["label"] == "R14"

    def test_minkowski_r1(self, runner, emitted):
        files = emitted("minkowski")
        res, report = run_json(runner, ["holonomy", "-m", files["g"],
                                        "--samples", "8"])
        assert res.exit_code == 0
        assert report["label"] == "R1"


class TestSinyukovAndPartner:
    def test_sinyukov_check_passes(self, runner, emitted):
        files = emitted("r9")
        res, report = run_json(runner, ["sinyukov-check", "-m", files["g"],
                                        "-a", files["a"], "--samples", "20"])
        assert res.exit_code == 0
        assert report["residual"] < 1e-9

    def test_derive_partner_matches_expected(self, runner, emitted,
                                             tmp_path):
        files = emitted("r9")
        partner = str(tmp_path / "partner.json")
        res, report = run_json(runner, ["derive-partner", "-m", files["g"],
                                        "-a", files["a"], "-o", partner])
        assert res.exit_code == 0, res.output
        res2, rep2 = run_json(runner, ["weyl-projective", "-m", partner,
                                       "-M", files["gp"], "--samples", "10"])
        assert res2.exit_code == 0
        assert rep2["max_diff"] < 1e-8

    def test_projective_check_auto_psi(self, runner, emitted, tmp_path):
        files = emitted("r9")
        partner = str(tmp_path / "partner.json")
        runner.invoke(main, ["derive-partner", "-m", files["g"], "-a",
                             files["a"], "-o", partner])
        res, report = run_json(runner, ["projective-check", "-m", files["g"],
                                        "-M", partner, "--auto-psi",
                                        "--samples", "20"])
        assert res.exit_code == 0
        assert report["eq13_residual"] < 1e-8

    def test_projective_check_with_pair(self, runner, emitted, tmp_path):
        files = emitted("r11")
        partner = str(tmp_path / "partner.json")
        runner.invoke(main, ["derive-partner", "-m", files["g"], "-a",
                             files["a"], "-o", partner])
        res, report = run_json(runner, ["projective-check", "-m", files["g"],
                                        "-M", partner, "-a", files["a"],
                                        "--samples", "15"])
        assert res.exit_code == 0
        assert report["eq14_residual"] < 1e-8
        assert report["weyl_projective_diff"] < 1e-8

    def test_projective_check_fails_on_unrelated(self, runner, emitted,
                                                 tmp_path):
        files = emitted("r9")
        mink = {
            "version": 1, "coordinates": ["u", "v", "x", "y"],
            "parameters": {}, "metric": [["-1"], ["0", "1"], ["0", "0", "1"],
                                         ["0", "0", "0", "1"]],
            "constraints": ["v"],
            "sample_box": {"u": [0.5, 2], "v": [0.5, 2],
                           "x": [-1, 1], "y": [-1, 1]},
        }
        mink_path = tmp_path / "mink.json"
        mink_path.write_text(json.dumps(mink))
        res, report = run_json(runner, ["projective-check", "-m", files["g"],
                                        "-M", str(mink_path), "--auto-psi",
                                        "--samples", "10"])
        assert res.exit_code == 1
        assert report["aggregate"]["verdict"] == "fail"


class TestGeodesicCheck:
    def test_pass_and_negative_control(self, runner, emitted, tmp_path):
        files = emitted("r9")
        partner = str(tmp_path / "partner.json")
        runner.invoke(main, ["derive-partner", "-m", files["g"], "-a",
                             files["a"], "-o", partner])
        res, report = run_json(runner, ["geodesic-check", "-m", files["g"],
                                        "-M", partner, "--trials", "4",
                                        "--steps", "100", "--horizon", "0.5"])
        assert res.exit_code == 0
        assert report["score"] < 1e-6

        mink = {
            "version": 1, "coordinates": ["u", "v", "x", "y"],
            "parameters": {}, "metric": [["-1"], ["0", "1"], ["0", "0", "1"],
                                         ["0", "0", "0", "1"]],
            "constraints": ["v"],
            "sample_box": {"u": [0.5, 2], "v": [0.5, 2],
                           "x": [-1, 1], "y": [-1, 1]},
        }
        mink_path = tmp_path / "mink.json"
        mink_path.write_text(json.dumps(mink))
        res2, rep2 = run_json(runner, ["geodesic-check", "-m", files["g"],
                                       "-M", str(mink_path), "--trials", "4",
                                       "--steps", "50", "--horizon", "0.3"])
        assert res2.exit_code == 1
        assert rep2["score"] > 1e-2


class TestDeterminism:
    @pytest.mark.parametrize("args", [
        ["classify", "--samples", "6"],
        ["holonomy", "--samples", "6"],
    ])
    def test_byte_identical_reports(self, runner, emitted, args):
        files = emitted("r9")
        full = [args[0], "-m", files["g"]] + args[1:] + ["--seed", "3"]
        res1, _ = run_json(runner, full)
        res2, _ = run_json(runner, full)
        assert res1.output == res2.output

    def test_seed_env_override(self, runner, emitted, monkeypatch):
        files = emitted("r9")
        res1, rep1 = run_json(runner, ["classify", "-m", files["g"],
                                       "--samples", "4"])
        monkeypatch.setenv("LORHOL_SEED", "99")
        res2, rep2 = run_json(runner, ["classify", "-m", files["g"],
                                       "--samples", "4"])
        assert rep1["seed"] == 7 and rep2["seed"] == 99
        assert rep1["points"] != rep2["points"]
