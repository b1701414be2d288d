import numpy as np
import pytest

from extwave.cli import (EXIT_FAIL, EXIT_PASS, EXIT_USAGE, SUBCOMMANDS, dispatch,
                         emit_plot_data, parse_data, parse_number, parse_points)


def test_no_arguments_prints_usage(capsys):
    assert dispatch([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["weights-certify", "--inequality", "el9"],
                                  ["weights-certify", "--config", "/no/such/file"],
                                  ["propagate", "--data", "nope"],
                                  ["weights-certify", "--undefined-flag", "1"]])
def test_usage_errors(argv):
    assert dispatch(argv) == EXIT_USAGE


def test_every_subcommand_has_help(capsys):
    for name in SUBCOMMANDS:
        with pytest.raises(SystemExit) as exc:
            dispatch([name, "--help"])
        assert exc.value.code == 0
    assert "--config" in capsys.readouterr().out


def test_value_parsers():
    assert parse_number("1/64") == 1 / 64
    assert parse_points("1,2; 3,4") == [(1.0, 2.0), (3.0, 4.0)]
    d = parse_data("annular_bump:r_in=3,r_out=6")
    assert d.support_radius == pytest.approx(6.0)


def test_weights_certify_writes_csv(tmp_path):
    assert dispatch(["weights-certify", "--inequality", "el1", "--rho", "0.5",
                     "--out", str(tmp_path)]) == EXIT_PASS
    lines = (tmp_path / "weights_el1.csv").read_text().splitlines()
    assert lines[0] == "# seed=0" and lines[1].startswith("inequality,")


def test_kernel_identity_report(tmp_path, capsys):
    assert dispatch(["kernel-verify", "--inequality", "kernel1-identity", "--n-points", "10",
                     "--seed", "4", "--out", str(tmp_path)]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "max_relative_error" in out
    err = float(out.splitlines()[1].split(",")[2])
    assert err < 1e-6


def test_failing_threshold_exits_2(tmp_path):
    argv = ["kernel-verify", "--inequality", "kernel1-identity", "--n-points", "3",
            "--tolerance", "0", "--out", str(tmp_path)]
    assert dispatch(argv) == EXIT_FAIL


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.txt"
    cfg.write_text("# propagation\npropagate.data = gaussian:alpha=4\nt = 1\npoints = 0,0\n")
    assert dispatch(["propagate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert dispatch(["propagate", "--config", str(cfg), "--t", "2",
                     "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "propagate.csv").read_text().splitlines()
    b = (tmp_path / "b" / "propagate.csv").read_text().splitlines()
    assert a[2].startswith("1.0,") and b[2].startswith("2.0,")


def test_outputs_are_reproducible(tmp_path):
    argv = ["estimate-certify", "--which", "sobolev", "--seed", "7"]
    dispatch(argv + ["--out", str(tmp_path / "a")])
    dispatch(argv + ["--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "estimates_sobolev.csv").read_bytes()
    assert a == (tmp_path / "b" / "estimates_sobolev.csv").read_bytes()
    assert a.startswith(b"# seed=7\n")


def test_solve_then_decay_fit(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("solver.h = 1/16\nsolver.domain_half_width = 31\nsolver.t_end = 24\n"
                   "solver.obstacle = disk:0.5\nsolver.record_stride = 8\n"
                   "data = annular_bump:r_in=3,r_out=6\nwindow = 5,23\nmin_gamma = 0.1\n")
    assert dispatch(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_PASS
    assert dispatch(["decay-fit", "--config", str(cfg), "--record", str(tmp_path / "record"),
                     "--out", str(tmp_path)]) == EXIT_PASS
    side = (tmp_path / "decay_plot.txt").read_text()
    assert "x_label=log<t>" in side and "fit.gamma=" in side
    assert dispatch(["decay-fit", "--record", str(tmp_path / "record"), "--window", "5,23",
                     "--min-gamma", "100", "--out", str(tmp_path)]) == EXIT_FAIL


def test_lifespan_sweep_subcommand(tmp_path):
    cfg = tmp_path / "l.txt"
    cfg.write_text("epsilons = 1.6,1.4,1.2,1.0\nt_cap = 2\nh = 1/32\n")
    assert dispatch(["lifespan-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "lifespan.csv").read_text()
    assert "epsilon,T_hat,censored,resolved_flag" in text
    assert "fit.slope_C=" in (tmp_path / "lifespan_plot.txt").read_text()


def test_emit_plot_data(tmp_path):
    p = emit_plot_data((np.arange(3.0), np.arange(3.0) ** 2), tmp_path / "s.csv",
                       ("a", "b"), {"slope": 2.0})
    assert p.read_text().splitlines() == ["a,b", "0.0,0.0", "1.0,1.0", "2.0,4.0"]
    assert "fit.slope=2.0" in (tmp_path / "s.txt").read_text()
    emit_plot_data([(0, 1), (1, 2)], tmp_path / "pairs.csv")
    with pytest.raises(ValueError):
        emit_plot_data([], tmp_path / "empty.csv")
