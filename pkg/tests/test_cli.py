import numpy as np
import pytest

from boussinesq2d import ModelParams, State, make_grid, parse_config
from boussinesq2d.cli import main
from boussinesq2d.io import (read_residual_csv, read_snapshot,
                             write_snapshot)

SMALL_CFG = """\
alpha = 0.3
beta = 0.3
nx = 32
ny = 32
dt = 0.01
t_end = 0.1
snapshot_stride = 5
"""


@pytest.fixture()
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL_CFG)
    return path


def test_simulate_writes_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", str(cfg_file), "--out", str(out)]) == 0
    assert (out / "residuals.csv").exists()
    assert (out / "residuals_l2.csv").exists()
    assert (out / "checkpoint.bsq").exists()
    assert (out / "snap_00000005.bsq").exists()
    assert (out / "snap_00000010.bsq").exists()
    series = read_residual_csv(out / "residuals.csv")
    assert len(series) == 10
    assert "blew_up=False" in capsys.readouterr().out


def test_simulate_missing_resume_file_is_io_error(cfg_file, tmp_path):
    assert main(["simulate", str(cfg_file), "--out", str(tmp_path / "o"),
                 "--resume", str(tmp_path / "nope.bsq")]) == 3


def test_final_checkpoint_matches_final_snapshot(cfg_file, tmp_path):
    from boussinesq2d.io import read_checkpoint
    out = tmp_path / "full"
    assert main(["simulate", str(cfg_file), "--out", str(out)]) == 0
    a, _ = read_snapshot(out / "snap_00000010.bsq")
    b = read_checkpoint(out / "checkpoint.bsq", parse_config(SMALL_CFG))
    assert np.array_equal(a.eta, b.eta)


def test_cli_resume_from_midrun_checkpoint(tmp_path):
    # checkpoint.bsq is refreshed at every snapshot stride; interrupting
    # after the first write and resuming must reproduce the full run
    cfg_text = SMALL_CFG
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(cfg_text)
    full = tmp_path / "full"
    assert main(["simulate", str(cfg_path), "--out", str(full)]) == 0

    # simulate an interrupted run by taking the t = 0.05 snapshot state
    # and its checkpoint digest
    from boussinesq2d.io import write_checkpoint
    cfg = parse_config(cfg_text)
    mid_state, _ = read_snapshot(full / "snap_00000005.bsq")
    ckpt = tmp_path / "mid.bsq"
    write_checkpoint(ckpt, mid_state, cfg.params(), cfg)

    resumed = tmp_path / "resumed"
    assert main(["simulate", str(cfg_path), "--out", str(resumed),
                 "--resume", str(ckpt)]) == 0
    a, _ = read_snapshot(full / "snap_00000010.bsq")
    b, _ = read_snapshot(resumed / "snap_00000010.bsq")
    assert np.array_equal(a.eta, b.eta)
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.v, b.v)


def test_residuals_identical_snapshots(tmp_path, capsys):
    g = make_grid(16, 16, 40.0, 40.0, -20.0, -20.0)
    X, Y = g.meshgrid()
    p = ModelParams(alpha=0.3, beta=0.3)
    s = State(g, np.exp(-(X ** 2 + Y ** 2) / 5.0),
              0.1 * np.sin(2 * np.pi * X / 40.0), np.zeros(g.shape), 1.0)
    snap = tmp_path / "a.bsq"
    write_snapshot(snap, s, p)
    assert main(["residuals", str(snap), str(snap)]) == 0
    out = capsys.readouterr().out
    values = dict(line.split("=") for line in out.strip().splitlines())
    # time difference is zero, so what remains is the flux divergence
    assert float(values["r_mass"]) > 0.0
    assert float(values["r_momx"]) > 0.0


def test_sweep_writes_table_and_slopes(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("alpha = 0.3\nbeta = 0.3\nnx = 32\nny = 32\n"
                   "dt = 0.02\nt_end = 0.2\nsnapshot_stride = 1000000\n")
    out = tmp_path / "sweep_out"
    assert main(["sweep", str(cfg), "--alphas", "0.1,0.2", "--out",
                 str(out), "--jobs", "1"]) == 0
    text = (out / "sweep.csv").read_text().splitlines()
    assert text[0] == "alpha,r_mass,r_momentum,r_energy"
    assert len(text) == 4  # header + 2 rows + slope row
    assert text[-1].startswith("#slope,")
    assert (out / "residuals_alpha0p1.csv").exists()
    assert (out / "residuals_alpha0p2.csv").exists()
    rows = [line.split(",") for line in text[1:3]]
    assert float(rows[0][0]) == 0.1 and float(rows[1][0]) == 0.2
    assert float(rows[0][1]) < float(rows[1][1])  # mass residual grows


def test_sweep_outputs_independent_of_job_count(tmp_path):
    cfg_text = ("alpha = 0.3\nbeta = 0.3\nnx = 32\nny = 32\n"
                "dt = 0.02\nt_end = 0.1\nsnapshot_stride = 1000000\n")
    from boussinesq2d.cli import sweep_residuals
    out1 = tmp_path / "j1"
    out2 = tmp_path / "j2"
    out1.mkdir()
    out2.mkdir()
    rows1, slopes1, _ = sweep_residuals(cfg_text, [0.1, 0.2], out1, jobs=1)
    rows2, slopes2, _ = sweep_residuals(cfg_text, [0.1, 0.2], out2, jobs=2)
    assert rows1 == rows2
    assert slopes1 == slopes2
    for name in ("residuals_alpha0p1.csv", "residuals_alpha0p2.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_dispersion_kmax_zero(tmp_path, capsys):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("alpha = 0.3\nbeta = 0.3\n")
    assert main(["dispersion", str(cfg), "--kmax", "0"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "k,omega"
    assert len(lines) == 2
    k, w = lines[1].split(",")
    assert float(k) == 0.0 and float(w) == 0.0


def test_dispersion_table_with_unstable_tail(tmp_path):
    cfg = tmp_path / "d.cfg"
    # mu = 1 gives a > 0, so large wavenumbers go unstable
    cfg.write_text("alpha = 0.3\nbeta = 0.3\nmu = 1.0\n")
    out = tmp_path / "disp.csv"
    assert main(["dispersion", str(cfg), "--kmax", "12", "--n", "24",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,omega"
    assert len(lines) == 26
    assert any("unstable" in line for line in lines)


def test_profile_outputs_pressure_and_velocities(tmp_path, capsys):
    g = make_grid(32, 32, 40.0, 40.0, -20.0, -20.0)
    X, Y = g.meshgrid()
    p = ModelParams(alpha=0.3, beta=0.3)
    s = State(g, np.exp(-(X ** 2 + Y ** 2) / 5.0),
              0.05 * np.sin(2 * np.pi * X / 40.0), np.zeros(g.shape), 2.0)
    snap = tmp_path / "a.bsq"
    write_snapshot(snap, s, p)
    out = tmp_path / "prof.bsq"
    assert main(["profile", str(snap), "--z", "1.0", "--out", str(out)]) == 0
    prof, _ = read_snapshot(out)
    # z = 1 and a steady pair: the pressure field equals the elevation
    assert np.array_equal(prof.eta, s.eta)


def test_decay_fit_exact_power_law(tmp_path, capsys):
    csv = tmp_path / "amp.csv"
    ts = np.linspace(2.0, 12.0, 40)
    lines = ["t,amplitude"] + [f"{t},{5.0 / t}" for t in ts]
    csv.write_text("\n".join(lines) + "\n")
    assert main(["decay-fit", str(csv), "--window", "4:10"]) == 0
    value = float(capsys.readouterr().out.strip())
    assert value == pytest.approx(-1.0, abs=1e-10)


def test_exit_codes():
    assert main(["no-such-command"]) == 1
    assert main(["decay-fit", "/nonexistent/amp.csv"]) == 3


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("alpha = 0.3\nbeta = 0.3\nnx = 7\n")
    assert main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_exit_code_blowup(tmp_path):
    cfg = tmp_path / "blow.cfg"
    cfg.write_text("alpha = 0.3\nbeta = 0.3\nnx = 32\nny = 32\ndt = 0.5\n"
                   "t_end = 5.0\ninitial_condition = gaussian(1e150, 5.0)\n")
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["simulate", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
