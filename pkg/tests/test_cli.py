import json
import os

import numpy as np

from fracpme.cli import main

TWO_PI = 2.0 * np.pi


def write_config(path, out_dir, **overrides):
    cfg = {
        "params": {"gamma": 0.5, "s": 0.5, "m": 1.0, "a": 0.0, "T": 1.0,
                   "k": 32, "newton_tol": 1e-11},
        "grid": {"dim": 1, "n": 32, "length": TWO_PI},
        "initial": {"type": "gaussian", "center": [np.pi], "width": 0.6, "height": 1.0},
        "forcing": {"type": "zero"},
        "outputs": str(out_dir),
        "checks": ["mass"],
        "seed": 7,
        "trials": 2,
    }
    for key, value in overrides.items():
        cfg[key] = value
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return path


def test_solve_zero_initial(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out, initial={"type": "zero"})
    assert main(["solve", "--config", str(cfg)]) == 0
    data = np.loadtxt(out / "snapshots.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 2] == 0.0)
    for name in ("masses.csv", "newton_stats.csv", "run_report.json",
                 "snapshots.png", "masses.png"):
        assert (out / name).exists()


def test_solve_writes_constant_masses(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out)
    assert main(["solve", "--config", str(cfg)]) == 0
    masses = np.loadtxt(out / "masses.csv", delimiter=",", skiprows=1)[:, 2]
    assert np.abs(masses - masses[0]).max() <= 1e-10
    report = json.load(open(out / "run_report.json"))
    assert "wall_time_s" in report
    assert "m_star" in report["conditions"]


def test_malformed_config_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"params": {"gamma": 2.0}}')
    assert main(["solve", "--config", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    assert main(["solve", "--config", str(missing)]) == 2
    notjson = tmp_path / "notjson.json"
    notjson.write_text("{nope")
    assert main(["solve", "--config", str(notjson)]) == 2


def test_nonconvergence_exits_three(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path / "cfg.json", out,
        params={"gamma": 0.5, "s": 0.5, "m": 2.0, "a": 0.0, "T": 1.0, "k": 4,
                "newton_tol": 1e-30, "newton_max_iter": 2},
    )
    assert main(["solve", "--config", str(cfg)]) == 3
    record = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert record["error"] == "nonconvergence"
    assert record["step"] == 1


def test_verify_subset_checks_pass(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out, checks=["mass"])
    assert main(["verify", "--config", str(cfg)]) == 0
    report = json.load(open(out / "verify_report.json"))
    assert report["all_passed"] is True
    assert set(report["checks"]) == {"mass"}


def test_verify_full_suite_small_config(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path / "cfg.json", out,
        checks=["mass", "contraction", "comparison", "resolvent", "energy",
                "degiorgi", "weak_residual", "beta", "temporal"],
    )
    assert main(["verify", "--config", str(cfg)]) == 0
    assert (out / "checks.csv").exists()


def test_verify_full_suite_linear_desk_config(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(
        tmp_path / "cfg.json", out,
        params={"gamma": 0.5, "s": 0.5, "m": 1.0, "a": 0.0, "T": 1.0,
                "k": 200, "newton_tol": 1e-11},
        grid={"dim": 1, "n": 256, "length": TWO_PI},
        initial={"type": "gaussian", "center": [np.pi],
                 "width": TWO_PI / 16.0, "height": 1.0},
        checks=["mass", "contraction", "comparison", "resolvent", "energy",
                "degiorgi", "weak_residual", "beta", "temporal"],
        trials=5,
    )
    assert main(["verify", "--config", str(cfg)]) == 0
    report = json.load(open(out / "verify_report.json"))
    assert report["all_passed"] is True
    assert len(report["checks"]) == 9


def test_verify_detects_corrupted_snapshots(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out, checks=["contraction"])
    assert main(["solve", "--config", str(cfg)]) == 0
    # corrupt a late-time snapshot row, preserving the mass balance
    path = out / "snapshots.csv"
    lines = path.read_text().splitlines()
    n = 32
    base = 1 + 30 * n  # rows of step 30
    for offset, delta in ((3, 0.25), (9, -0.25)):
        parts = lines[base + offset].split(",")
        parts[2] = repr(float(parts[2]) + delta)
        lines[base + offset] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--config", str(cfg)]) == 1
    report = json.load(open(out / "verify_report.json"))
    assert report["checks"]["contraction"]["passed"] is False


def test_verify_outputs_are_byte_identical(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    out1, out2 = tmp_path / "a", tmp_path / "b"
    write_config(cfg_path, out1, checks=["mass", "contraction", "weak_residual"])
    assert main(["verify", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["verify", "--config", str(cfg_path), "--out", str(out2)]) == 0
    files1 = sorted(os.listdir(out1))
    assert files1 == sorted(os.listdir(out2))
    for name in files1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_sweep_writes_error_table(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out)
    code = main(["sweep", "--config", str(cfg), "--parameter", "k",
                 "--values", "16,32,64"])
    assert code == 0
    rows = np.loadtxt(out / "errors.csv", delimiter=",", skiprows=1)
    assert rows.shape == (3, 3)
    assert np.all(np.diff(rows[:, 1]) < 0)  # error decreases with k
    assert (out / "errors.png").exists()
    assert main(["sweep", "--config", str(cfg), "--parameter", "h",
                 "--values", "16,32"]) == 2
    assert main(["sweep", "--config", str(cfg), "--parameter", "k",
                 "--values", "16"]) == 2


def test_sweep_parallel_workers_match_serial(tmp_path):
    out1, out2 = tmp_path / "serial", tmp_path / "parallel"
    cfg = write_config(tmp_path / "cfg.json", out1)
    assert main(["sweep", "--config", str(cfg), "--out", str(out1),
                 "--parameter", "k", "--values", "16,32,64"]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out2),
                 "--parameter", "k", "--values", "16,32,64", "--threads", "3"]) == 0
    assert (out1 / "errors.csv").read_bytes() == (out2 / "errors.csv").read_bytes()


def test_beta_command_reports_and_validates(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out,
                       params={"gamma": 0.75, "s": 0.5, "m": 2.0, "a": 0.0,
                               "T": 1.0, "k": 64, "newton_tol": 1e-11},
                       grid={"dim": 1, "n": 64, "length": TWO_PI})
    assert main(["beta", "--config", str(cfg), "--center", f"1.0,{np.pi}",
                 "--zeta", "0.55", "--k-max", "6"]) == 0
    report = json.load(open(out / "oscillation_report.json"))
    assert report["degenerate"] is False
    assert 0.0 < report["beta_fit"] < 1.0
    assert (out / "oscillation.csv").exists()
    assert (out / "oscillation.png").exists()
    assert main(["beta", "--config", str(cfg), "--center", "0.0001,1.0"]) == 2
    assert main(["beta", "--config", str(cfg), "--center", "1.0"]) == 2


def test_beta_command_degenerate_on_constant_run(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out, initial={"type": "zero"})
    assert main(["beta", "--config", str(cfg), "--center", f"1.0,{np.pi}"]) == 0
    report = json.load(open(out / "oscillation_report.json"))
    assert report["degenerate"] is True
    assert report["beta_fit"] is None


def test_initial_from_file_and_forcing_file(tmp_path):
    out = tmp_path / "out"
    init = np.linspace(0.0, 1.0, 32)
    init_path = tmp_path / "init.npy"
    np.save(init_path, init)
    forcing = np.zeros((8, 32))
    forcing_path = tmp_path / "forcing.npy"
    np.save(forcing_path, forcing)
    cfg = write_config(
        tmp_path / "cfg.json", out,
        params={"gamma": 0.5, "s": 0.5, "m": 1.0, "a": 0.0, "T": 1.0, "k": 8,
                "newton_tol": 1e-11},
        initial={"type": "file", "path": str(init_path)},
        forcing={"type": "file", "path": str(forcing_path)},
    )
    assert main(["solve", "--config", str(cfg)]) == 0
    data = np.loadtxt(out / "snapshots.csv", delimiter=",", skiprows=1)
    first = data[: 32, 2]
    assert np.abs(first - init).max() < 1e-15


def test_box_initial_and_seed_override(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path / "cfg.json", out,
                       initial={"type": "box", "center": [np.pi],
                                "half_width": 0.5, "height": 1.0})
    assert main(["solve", "--config", str(cfg), "--seed", "99"]) == 0
    data = np.loadtxt(out / "snapshots.csv", delimiter=",", skiprows=1)
    first = data[:32, 2]
    assert set(np.unique(first)) <= {0.0, 1.0}
