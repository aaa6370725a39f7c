"""
Tests for the command line: exit codes, argument validation and written outputs
"""

from pathlib import Path

import pandas as pd
import pytest

from fdkp.models.errors import UsageError
from fdkp.routers import linear
from fdkp.routers.linear import DispersiveRequest, run_dispersive
from fdkp.services.symbol import symbol_table
from fdkp.utils.config import float_list, get_settings, load_run_file
from main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_missing_command_is_a_usage_error():
    assert run([]) == EXIT_USAGE


def test_missing_required_flag_writes_nothing(output_dir):
    assert run(["symbol-check"]) == EXIT_USAGE
    assert not output_dir.exists() or not any(output_dir.iterdir())


def test_help_exits_cleanly():
    assert run(["--help"]) == EXIT_OK
    assert run(["symbol-check", "--help"]) == EXIT_OK


def test_invalid_beta_is_a_usage_error(output_dir):
    assert run(["symbol-check", "--beta", "-1"]) == EXIT_USAGE
    assert not (output_dir / "symbol.csv").exists()


def test_symbol_check_writes_its_table(output_dir, capsys):
    assert run(["symbol-check", "--beta", "1", "--points", "200"]) == EXIT_OK
    assert "✅ symbol-check" in capsys.readouterr().out
    written = pd.read_csv(output_dir / "symbol.csv")
    assert list(written.columns) == list(symbol_table(1.0, points=2).columns)
    assert len(written) == 200


def test_symbol_check_is_deterministic(output_dir):
    assert run(["symbol-check", "--beta", "0", "--points", "50", "--out", "a.csv"]) == EXIT_OK
    assert run(["symbol-check", "--beta", "0", "--points", "50", "--out", "b.csv"]) == EXIT_OK
    assert (output_dir / "a.csv").read_bytes() == (output_dir / "b.csv").read_bytes()


def test_evolve_needs_an_existing_run_file(tmp_path):
    assert run(["evolve", "--config", str(tmp_path / "missing.toml")]) == EXIT_USAGE


def test_evolve_from_a_small_run_file(tmp_path, output_dir):
    config = tmp_path / "small.toml"
    config.write_text(
        "[solver]\nbeta = 1.0\nn1 = 16\nn2 = 16\ndt = 0.01\n\n"
        '[initial]\nkind = "constrained"\namplitude = 0.05\nwidth = 0.8\n\n'
        '[run]\nt_final = 0.05\nrecord_every = 1\nledger = "small.csv"\nsnapshot = "small.snap"\n'
    )
    assert run(["evolve", "--config", str(config)]) == EXIT_OK
    ledger = pd.read_csv(output_dir / "small.csv")
    assert len(ledger) == 6
    assert ledger["time"].iloc[-1] == pytest.approx(0.05)
    assert (output_dir / "small.snap").stat().st_size == 64 + 8 * 16 * 16


def test_evolve_reports_blow_up(tmp_path, output_dir):
    config = tmp_path / "blowup.toml"
    config.write_text(
        "[solver]\nbeta = 1.0\nn1 = 32\nn2 = 32\ndt = 0.1\n\n"
        '[initial]\nkind = "constrained"\namplitude = 1000.0\nwidth = 0.6\n\n'
        '[run]\nt_final = 5.0\nrecord_every = 1\nledger = "blowup.csv"\n'
    )
    assert run(["evolve", "--config", str(config)]) == EXIT_FAILED
    assert (output_dir / "blowup.csv").exists()


def test_load_run_file():
    solver, initial, run_config = load_run_file(CONFIGS / "run.toml")
    assert solver.beta == 1.0
    assert solver.grid.n1 == 64
    assert initial.kind == "constrained"
    assert run_config.record_every == 10
    assert run_config.snapshot == Path("final.snap")


def test_load_run_file_rejects_unknown_tables(tmp_path):
    path = tmp_path / "extra.toml"
    path.write_text("[solver]\nbeta = 1.0\n\n[plot]\ncolour = 'red'\n")
    with pytest.raises(UsageError):
        load_run_file(path)
    path.write_text("[solver]\nn1 = 48\n")
    with pytest.raises(UsageError):
        load_run_file(path)


def test_float_list():
    assert float_list("0.25,1,4") == [0.25, 1.0, 4.0]
    assert float_list("1 2  3") == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        float_list(" , ")


def test_settings_come_from_the_environment(output_dir):
    settings = get_settings()
    assert settings.output_dir == output_dir
    assert settings.threads == 2


def test_bessel_check_runs_on_random_points(output_dir, capsys):
    argv = ["bessel-check", "--points", "4", "--rmax", "50", "--r-points", "2", "--a-points", "2", "--no-decay"]
    assert run(argv) == EXIT_OK
    assert "bessel-check" in capsys.readouterr().out
    assert (output_dir / "bessel.json").exists()


def test_bessel_check_tolerance_decides_the_verdict(output_dir):
    argv = ["bessel-check", "--points", "2", "--rmax", "50", "--r-points", "2", "--a-points", "2", "--no-decay"]
    argv += ["--out", "t.json"]
    assert run(argv + ["--tol", "1e-30"]) == EXIT_FAILED
    assert run(argv + ["--tol", "1e-6"]) == EXIT_OK
    assert run(argv + ["--tol", "0"]) == EXIT_USAGE


@pytest.mark.slow
def test_solver_correctness_check_passes(output_dir, capsys):
    assert run(["verify-all", "--only", "solver correctness"]) == EXIT_OK
    assert "✅ solver correctness" in capsys.readouterr().out


def test_dispersive_takes_grid_domain_and_tlist(output_dir):
    argv = ["dispersive", "--beta", "1", "--lambda", "1", "--grid", "128", "--domain", "32", "--tlist", "2,4"]
    assert run(argv) in (EXIT_OK, EXIT_FAILED)
    written = pd.read_csv(output_dir / "dispersive.csv")
    assert list(written["t"]) == [2.0, 4.0]
    assert run(["dispersive", "--beta", "1", "--lambda", "1", "--grid", "100", "--tlist", "2"]) == EXIT_USAGE


def _synthetic_decay(exponent):
    def experiment(beta, Lambda, t_list, grid):
        t = pd.Series([float(v) for v in t_list])
        sup = t ** exponent
        return pd.DataFrame({"t": t, "sup_abs": sup, "l1_norm": 1.0, "predicted": 1.0 / t, "ratio": sup * t})

    return experiment


def test_dispersive_verdict_checks_the_slope(monkeypatch):
    request = DispersiveRequest(beta=1.0, Lambda=1.0, t_list=[1.0, 2.0, 4.0], n=64, L=32.0)
    monkeypatch.setattr(linear, "dispersive_sup_experiment", _synthetic_decay(-1.0))
    assert run_dispersive(request)["success"]
    monkeypatch.setattr(linear, "dispersive_sup_experiment", _synthetic_decay(-0.7))
    result = run_dispersive(request)
    assert not result["success"]
    assert result["slope"] == pytest.approx(-0.7)
    single = DispersiveRequest(beta=1.0, Lambda=1.0, t_list=[2.0], n=64, L=32.0)
    assert run_dispersive(single)["success"]
