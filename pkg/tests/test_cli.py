import numpy as np
import pytest

from hopflab import cli
from hopflab.mesh import read_mesh


def run(*argv):
    return cli.main(list(argv))


def test_mesh_command(tmp_path, capsys):
    path = tmp_path / "disk.mesh"
    assert run("mesh", "--target-h", "0.2", "--output", str(path)) == 0
    mesh = read_mesh(path)
    assert mesh.num_vertices > 0
    assert "vertices" in capsys.readouterr().out


def test_solve_command(tmp_path, capsys):
    sol_path = tmp_path / "solution.txt"
    rep_path = tmp_path / "report.csv"
    code = run("solve", "--sigma", "identity", "--k", "1",
               "--target-h", "0.2",
               "--solution-out", str(sol_path), "--report-out", str(rep_path))
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("sigma_kind,k,h,")
    assert "[PASS] normal-derivative positivity" in out

    lines = sol_path.read_text().splitlines()
    first = lines[0].split()
    assert first[0] == "0" and len(lines) > 100
    assert rep_path.read_text().splitlines()[1].startswith("identity,1,")


def test_kernel_command(tmp_path, capsys):
    kpath = tmp_path / "kernel.csv"
    bpath = tmp_path / "bounds.csv"
    code = run("kernel", "--sigma", "gaussian", "--target-h", "0.2",
               "--kernel-out", str(kpath), "--bound-report-out", str(bpath))
    assert code == 0
    out = capsys.readouterr().out
    assert "[PASS] kernel row stochasticity" in out
    assert "[PASS] two-sided kernel bound" in out
    assert kpath.exists() and bpath.exists()


def test_kernel_command_cert_failure(monkeypatch, capsys):
    def broken(kernel):
        raise ValueError("negative ratio at (0, 0)")
    monkeypatch.setattr(cli.kernels, "kernel_bound_ratios", broken)
    code = run("kernel", "--sigma", "identity", "--target-h", "0.4")
    assert code == 2
    assert "[FAIL] two-sided kernel bound" in capsys.readouterr().out


def test_barrier_command(capsys):
    code = run("barrier", "--sigma", "linear", "--k", "2", "--target-h", "0.1")
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("x0_x,x0_y,r,rho,lambda,")
    assert "[PASS] barrier subsolution" in out
    assert "[PASS] normal-derivative lower bound" in out


def test_sweep_command_with_certifications(tmp_path, capsys):
    out_csv = tmp_path / "sweep.csv"
    code = run("sweep", "--sigma-kinds", "identity,gaussian",
               "--k-values", "1,2,4", "--target-h", "0.2",
               "--output", str(out_csv), "--with-barrier")
    assert code == 0
    out = capsys.readouterr().out
    assert "[PASS] normal-derivative positivity over sweep" in out
    assert "[PASS] barrier [gaussian, k=4]" in out
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 1 + 6


def test_sweep_determinism_via_cli(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        assert run("sweep", "--sigma-kinds", "linear", "--k-values", "1,2",
                   "--target-h", "0.2", "--output", str(path)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_fit_command(tmp_path, capsys):
    csv = tmp_path / "sweep.csv"
    assert run("sweep", "--sigma-kinds", "identity",
               "--k-values", "1,2,4,8,16,32", "--target-h", "0.2",
               "--output", str(csv)) == 0
    capsys.readouterr()
    assert run("fit", "--input", str(csv), "--sigma", "identity",
               "--exclude-k1") == 0
    out = capsys.readouterr().out
    assert out.startswith("sigma=identity slope=")
    slope = float(out.split("slope=")[1].split()[0])
    assert 0.7 <= slope <= 1.3


def test_config_file_key_value(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("target_h = 0.2\nk = 2\nsigma = linear  # preset\n")
    assert run("--config", str(cfg), "solve") == 0
    row = capsys.readouterr().out.splitlines()[1]
    assert row.startswith("linear,2,0.2,")


def test_config_file_json_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{"target_h": 0.2, "k_values": [1, 2], '
                   '"sigma_kinds": ["identity"]}')
    out_csv = tmp_path / "sweep.csv"
    assert run("--config", str(cfg), "sweep", "--k-values", "1,2,4",
               "--output", str(out_csv)) == 0
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 1 + 3  # flag overrode the config's k list
    assert lines[1].split(",")[2] == "0.2"  # config target_h applied


def test_unknown_preset_is_runtime_error(capsys):
    assert run("solve", "--sigma", "bogus", "--target-h", "0.4") == 1
    assert "error:" in capsys.readouterr().err


def test_usage_error_exits_one():
    assert run("no-such-command") == 1


def test_fit_missing_file_is_runtime_error():
    assert run("fit", "--input", "/nonexistent.csv", "--sigma", "identity") == 1
