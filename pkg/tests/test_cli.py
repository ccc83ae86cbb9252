"""Command-line interface: schemas, exit codes, determinism."""

import csv
import io
import shutil
import subprocess
import sys

import pytest

from cdx import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def header_line(text):
    first = text.splitlines()[0]
    assert first.startswith("# cdx ")
    return first


# ---------------------------------------------------------------- subcommands


def test_theory_row(capsys):
    code, out, _ = run_cli(["theory", "--v", "0.0", "--c", "5.0"], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 1
    row = rows[0]
    assert row["regime"] == "V-"
    assert float(row["theta_star"]) == pytest.approx(1.0)
    assert float(row["b"]) == pytest.approx(11.656854249492369)
    assert "v=0.0" in header_line(out) and "c=5.0" in header_line(out)


def test_theory_vplus_row(capsys):
    code, out, _ = run_cli(["theory", "--v", "1.0", "--c", "10"], capsys)
    assert code == 0
    row = parse_csv(out)[0]
    assert row["regime"] == "V+"
    assert row["theta_star"] == ""
    assert float(row["point"]) == pytest.approx(20.0)


def test_simulate_schema_and_determinism(capsys):
    argv = ["simulate", "--test", "cusum", "--c", "3.0", "--shift", "0.0,1.0",
            "--tau", "1", "--reps", "500", "--seed", "12"]
    code, first, _ = run_cli(argv, capsys)
    assert code == 0
    rows = parse_csv(first)
    assert [list(r) for r in rows[:1]][0] == cli.GRID_COLUMNS
    assert len(rows) == 2
    assert {r["shift"] for r in rows} == {"0.0", "1.0"}
    assert all(int(r["conditional_kept"]) == 500 for r in rows)
    code, second, _ = run_cli(argv, capsys)
    assert first == second


def test_simulate_markdown(capsys):
    argv = ["simulate", "--test", "slr", "--r", "0.01", "--shift", "1.0",
            "--tau", "1", "--reps", "300", "--format", "md"]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    body = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert body[0].startswith("| test |")
    assert body[1].startswith("|---")


def test_simulate_oal_requires_u(capsys):
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--test", "oal", "--c", "3", "--g", "gtilde",
                  "--reps", "100"])


def test_calibrate_row(capsys):
    argv = ["calibrate", "--test", "cusum", "--target-arl0", "50",
            "--reps", "2000", "--seed", "4"]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["parameter"]) > 0
    assert abs(float(row["achieved_arl0"]) - 50.0) <= 0.05 * 50.0
    assert float(row["bracket_lo"]) <= float(row["parameter"]) <= float(row["bracket_hi"])


def test_detect_alarm_exit_zero(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("x\n0.2\n2.5\n2.9\n2.7\n")
    code, out, _ = run_cli(
        ["detect", "--input", str(path), "--has-header", "--test", "cusum", "--c", "2.0"],
        capsys,
    )
    assert code == 0
    assert out.strip().isdigit()


def test_detect_no_alarm_exit_three(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("0.0\n0.1\n-0.2\n")
    code, out, _ = run_cli(
        ["detect", "--input", str(path), "--test", "cusum", "--c", "30.0"], capsys
    )
    assert code == 3
    assert out.strip() == "NONE"


def test_detect_flat_stream_never_alarms(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("0\n" * 1000)
    code, out, _ = run_cli(
        ["detect", "--input", str(path), "--test", "cusum", "--c", "5.0"], capsys
    )
    assert code == 3 and out.strip() == "NONE"


def test_detect_big_jump_alarms_at_row_one(tmp_path, capsys):
    path = tmp_path / "jump.csv"
    path.write_text("10\n10\n10\n")
    code, out, _ = run_cli(
        ["detect", "--input", str(path), "--test", "cusum", "--c", "5.0"], capsys
    )
    assert code == 0 and out.strip() == "1"  # Z = 9.5 on the first row


def test_detect_oal_limit(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("3.0\n3.0\n")
    code, out, _ = run_cli(
        ["detect", "--input", str(path), "--test", "oal", "--c", "50",
         "--g", "gtilde", "--u", "100"],
        capsys,
    )
    assert code == 0  # negative limit forces the alarm despite the huge c


def test_detect_bad_cell_reports_line(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("1.0\noops\n2.0\n")
    code, _, err = run_cli(
        ["detect", "--input", str(path), "--test", "slr"], capsys
    )
    assert code == 1
    assert "line 2" in err


def test_detect_missing_file(capsys):
    code, _, err = run_cli(
        ["detect", "--input", "/nonexistent.csv", "--test", "slr"], capsys
    )
    assert code == 1
    assert "cannot read" in err


def test_detect_empty_input(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("x\n")
    code, _, err = run_cli(
        ["detect", "--input", str(path), "--has-header", "--test", "slr"], capsys
    )
    assert code == 1
    assert "no observations" in err


# -------------------------------------------------------------------- tables


def test_table1_shape(tmp_path, capsys):
    out_path = tmp_path / "t1.csv"
    code, _, _ = run_cli(
        ["table1", "--reps", "10000", "--seed", "5", "--out", str(out_path)], capsys
    )
    assert code == 0
    text = out_path.read_text()
    assert header_line(text).startswith("# cdx table1 seed=5 reps=10000")
    rows = parse_csv(text)
    assert len(rows) == 9 * 8  # nine rules, eight shifts
    tests = {r["test"] for r in rows}
    assert "T_C" in tests and "T_star_r0" in tests and "T_C_min_T_star0" in tests
    assert sum(1 for r in rows if r["test"].startswith("T_C_gtilde")) == 5 * 8
    in_control_slr = next(
        r for r in rows if r["test"] == "T_star_r0" and r["shift"] == "0.0"
    )
    assert int(in_control_slr["censored"]) > 0


def test_table2_jace_identity(tmp_path, capsys):
    out_path = tmp_path / "t2.csv"
    code, _, _ = run_cli(
        ["table2", "--reps", "10000", "--seed", "5", "--out", str(out_path)], capsys
    )
    assert code == 0
    rows = parse_csv(out_path.read_text())
    cells = [r for r in rows if r["tau"] != "-1"]
    assert len(cells) == 5 * 2 * 7
    jace = [r for r in rows if r["tau"] == "-1"]
    assert len(jace) == 5 * 2
    for agg in jace:
        parts = [
            float(r["mean"]) for r in cells
            if r["test"] == agg["test"] and r["shift"] == agg["shift"]
            and int(r["tau"]) in (1, 10, 50, 100, 150, 200)
        ]
        assert len(parts) == 6
        assert float(agg["mean"]) == pytest.approx(sum(parts) / 6.0, rel=1e-12)


def test_table_reps_floor():
    with pytest.raises(SystemExit):
        cli.main(["table1", "--reps", "500"])


# ------------------------------------------------------------------ plumbing


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("CDX_SEED", "777")
    argv = ["simulate", "--test", "cusum", "--c", "2.0", "--reps", "200",
            "--shift", "1.0", "--tau", "1"]
    _, out, _ = run_cli(argv, capsys)
    assert "seed=777" in header_line(out)
    monkeypatch.delenv("CDX_SEED")
    _, out, _ = run_cli(argv, capsys)
    assert "seed=42" in header_line(out)


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--test", "cusum", "--c", "2", "--frobnicate"])
    assert exc.value.code == 2


def test_missing_subcommand_rejected():
    with pytest.raises(SystemExit):
        cli.main([])


@pytest.mark.skipif(shutil.which("cdx") is None, reason="console script not installed")
def test_console_script_runs():
    proc = subprocess.run(
        ["cdx", "theory", "--v", "0.0", "--c", "4.0"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "V-" in proc.stdout
