"""CLI commands, exit codes, and output plumbing."""

import pytest

from harvestsim.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_TRACE, main
from harvestsim.scenario import CSV_HEADER, data_dir


GOOD_CONFIG = """
duration_s: 50.0
sample_interval_s: 10.0
master_seed: 5
source:
  kind: basic
  initial_energy_j: 1.0
  supply_voltage_v: 3.0
  update_interval_s: 10.0
harvester:
  kind: basic
  h_max_w: 1.0e-5
  update_period_s: 10.0
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(GOOD_CONFIG, encoding="utf-8")
    return path


def test_validate_ok(config, capsys):
    assert main(["validate", "--config", str(config)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("OK:")


def test_validate_bundled_names(capsys):
    for name in ("fig2", "fig3", "fig3_solar", "fig4"):
        assert main(["validate", "--config", name]) == EXIT_OK


def test_run_writes_csv(config, tmp_path, capsys):
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 7  # rows at 0,10,...,50


def test_run_to_stdout(config, capsys):
    assert main(["run", "--config", str(config)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 7


def test_seed_override_changes_output(config, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    main(["run", "--config", str(config), "--out", str(a), "--seed", "1"])
    main(["run", "--config", str(config), "--out", str(b), "--seed", "2"])
    main(["run", "--config", str(config), "--out", str(c), "--seed", "1"])
    assert a.read_bytes() != b.read_bytes()
    assert a.read_bytes() == c.read_bytes()


def test_batch_runs_write_one_file_per_seed(config, tmp_path):
    out = tmp_path / "batch.csv"
    assert main(["run", "--config", str(config), "--out", str(out),
                 "--runs", "3"]) == EXIT_OK
    files = sorted(p.name for p in tmp_path.glob("batch_run*.csv"))
    assert files == ["batch_run000.csv", "batch_run001.csv", "batch_run002.csv"]


def test_batch_runs_require_out(config):
    assert main(["run", "--config", str(config), "--runs", "2"]) == EXIT_CONFIG


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(GOOD_CONFIG + "predictor:\n  alpha: 2.0\n"
                   "  slot_duration_s: 3600.0\n  slots_per_day: 24\n")
    assert main(["validate", "--config", str(bad)]) == EXIT_CONFIG
    assert "predictor.alpha" in capsys.readouterr().err

    missing = tmp_path / "missing.yaml"
    assert main(["validate", "--config", str(missing)]) == EXIT_CONFIG


def test_trace_errors_exit_3(tmp_path, capsys):
    config = tmp_path / "s.yaml"
    config.write_text(GOOD_CONFIG.replace(
        "kind: basic\n  h_max_w: 1.0e-5\n  update_period_s: 10.0",
        "kind: trace\n  file: gone.csv"))
    assert main(["validate", "--config", str(config)]) == EXIT_TRACE

    bad_trace = tmp_path / "bad.csv"
    bad_trace.write_text("time_s,power_w\n10,1.0\n5,1.0\n")
    assert main(["trace-info", str(bad_trace)]) == EXIT_TRACE
    assert main(["trace-info", str(tmp_path / "gone.csv")]) == EXIT_TRACE


def test_io_errors_exit_4(config, tmp_path):
    out = tmp_path / "no" / "such" / "dir" / "out.csv"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_IO


def test_trace_info_reports_summary(capsys):
    trace = data_dir() / "solar_7day.csv"
    assert main(["trace-info", str(trace)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "samples: 672" in out
    assert "duration_s: 604800.0" in out


def test_log_level_env_var_is_honored(config, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("HARVESTSIM_LOG", "debug")
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
