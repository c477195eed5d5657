import numpy as np
import pytest

from lifecycle_childcare.cli import main
from lifecycle_childcare.simulate import AgeProfile


def test_export_defaults(tmp_path):
    assert main(["export-defaults", "--out", str(tmp_path)]) == 0
    for name in ("productivity.csv", "survival.csv", "timeuse.csv", "penalty.csv", "defaults.cfg"):
        assert (tmp_path / name).exists()
    # exported tables feed back in
    out = tmp_path / "sim"
    assert main(["simulate", "--data-dir", str(tmp_path), "--config", str(tmp_path / "defaults.cfg"),
                 "--preset", "desk", "--set", "types.education=college", "--out", str(out)]) == 0


def test_simulate_with_defaults(tmp_path):
    assert main(["simulate", "--preset", "desk", "--out", str(tmp_path)]) == 0
    agg = AgeProfile.from_csv(tmp_path / "profile_aggregate.csv")
    assert agg.ages[0] == 20 and agg.ages[-1] == 80
    assert (tmp_path / "profile_college_nursery.csv").exists()
    assert (tmp_path / "child_penalty.csv").exists()


def test_rr75_counterfactual(tmp_path):
    assert main(["counterfactual", "rr75", "--preset", "desk", "--out", str(tmp_path)]) == 0
    diff = AgeProfile.from_csv(tmp_path / "rr75_difference.csv")
    assert np.all(diff["pl_takeup"] >= 0)
    assert np.all(diff["prob_pl"] >= -1e-12)


def test_validate_desk(tmp_path, capsys):
    code = main(["validate", "--preset", "desk", "--out", str(tmp_path)])
    report = (tmp_path / "validation_report.txt").read_text()
    assert code == 0
    assert "state count" not in report
    assert "budget identity" in report and "child penalty" in report


@pytest.mark.parametrize("args", [
    ["solve", "--set", "calibrated.beta=2"],
    ["solve", "--set", "nonsense"],
    ["solve", "--config", "/nonexistent/file.cfg"],
    ["solve", "--survival", "/nonexistent/survival.csv"],
    ["solve", "--workers", "0"],
])
def test_input_errors_exit_2(args, tmp_path, capsys):
    assert main([*args, "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_data_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "survival.csv"
    bad.write_text("age,male,female\n20,1.2,0.9\n")
    assert main(["solve", "--survival", str(bad), "--out", str(tmp_path)]) == 2
    assert "survival.csv:2" in capsys.readouterr().err


def test_solve_dump_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["solve", "--preset", "desk", "--set", "types.education=highschool", "--set", "types.nursery=no"]
    assert main([*base, "--out", str(a), "--workers", "1"]) == 0
    assert main([*base, "--out", str(b), "--workers", "2"]) == 0
    name = "solution_highschool_nonursery.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()
