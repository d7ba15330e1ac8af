import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sirwaves.cli import main

P0_CONFIG = {
    "params": {
        "d1": 1.0, "d2": 1.0, "d3": 1.0,
        "beta": 2.0, "gamma": 0.5, "delta": 0.5,
        "s_minus_inf": 1.0,
    },
    "c": 2.5,
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(P0_CONFIG))
    return str(path)


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_analyze_reports_c_star(config_path, tmp_path, capsys):
    out = str(tmp_path / "out")
    rc = main(["analyze", config_path, "--c", "2.5", "--out", out])
    assert rc == 0
    payload = json.loads((tmp_path / "out" / "analysis.json").read_text())
    assert payload["c_star"] == 2.0
    assert payload["r0"] == 2.0
    assert payload["lambda0_table"][0]["lambda0"] == 0.5
    assert os.path.exists(os.path.join(out, "manifest.json"))


def test_analyze_d3_boundary_flagged(tmp_path):
    cfg = {"params": {**P0_CONFIG["params"], "d3": 2.0}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    assert main(["analyze", path, "--c", "2.5", "--out", out]) == 0
    payload = json.loads((tmp_path / "out" / "analysis.json").read_text())
    entry = payload["lambda0_table"][0]
    assert entry["d3_condition"] is False
    assert "note" in entry


def test_analyze_subthreshold(tmp_path):
    cfg = {"params": {**P0_CONFIG["params"], "beta": 0.9}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    assert main(["analyze", path, "--out", out]) == 0
    payload = json.loads((tmp_path / "out" / "analysis.json").read_text())
    assert payload["c_star"] is None
    assert payload["subthreshold"] is True


def test_config_unknown_key_rejected(tmp_path):
    path = write_config(tmp_path, {**P0_CONFIG, "speling_mistake": 1})
    assert main(["analyze", path, "--out", str(tmp_path / "o")]) == 1
    path = write_config(tmp_path, {"params": {**P0_CONFIG["params"], "bogus": 2}})
    assert main(["analyze", path, "--out", str(tmp_path / "o")]) == 1


def test_config_invalid_value_message(tmp_path, capsys):
    path = write_config(tmp_path, {"params": {**P0_CONFIG["params"], "beta": -1.0}})
    rc = main(["analyze", path, "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "beta" in capsys.readouterr().err


def test_profile_refuses_subcritical_speed(config_path, tmp_path, capsys):
    rc = main(["profile", config_path, "--c", "1.9", "--out", str(tmp_path / "out")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "minimal speed" in err and "--force" in err


def test_profile_runs_and_writes_outputs(config_path, tmp_path):
    out = str(tmp_path / "out")
    rc = main([
        "profile", config_path, "--c", "2.5", "--L", "40", "--dx", "0.1",
        "--tol", "1e-7", "--solver", "both", "--out", out,
    ])
    assert rc == 0
    csv_lines = (tmp_path / "out" / "profile.csv").read_text().splitlines()
    assert csv_lines[0] == "x,S,I,R"
    assert len(csv_lines) == 802
    diag = json.loads((tmp_path / "out" / "diagnostics.json").read_text())
    assert diag["converged"] is True
    assert diag["solver_agreement"] is not None and diag["solver_agreement"] < 1e-4
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert "profile.csv" in manifest["outputs"]
    assert manifest["derived"]["c_star"] == 2.0


def test_profile_csv_roundtrip_precision(config_path, tmp_path):
    from sirwaves import Grid, ModelParams, solve_fixed_point

    out = str(tmp_path / "out")
    main(["profile", config_path, "--c", "2.5", "--L", "40", "--dx", "0.1",
          "--tol", "1e-7", "--out", out])
    lines = (tmp_path / "out" / "profile.csv").read_text().splitlines()[1:]
    vals = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    # 17 significant digits reproduce the doubles exactly: parsing recovers
    # the solved profile bit for bit
    p = ModelParams(**P0_CONFIG["params"])
    rep = solve_fixed_point(p, 2.5, Grid.symmetric(40.0, 0.1), tol=1e-7)
    assert np.array_equal(vals[:, 0], rep.profile.grid.x)
    assert np.array_equal(vals[:, 1], rep.profile.s.values)
    assert np.array_equal(vals[:, 2], rep.profile.i.values)
    assert np.array_equal(vals[:, 3], rep.profile.r.values)


def test_explicit_grid_block_in_config(tmp_path):
    cfg = {**P0_CONFIG, "grid": {"x_min": -30.0, "x_max": 30.0, "n": 601}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    rc = main(["profile", path, "--c", "2.5", "--tol", "1e-6", "--out", out])
    assert rc == 0
    lines = (tmp_path / "out" / "profile.csv").read_text().splitlines()
    assert len(lines) == 602
    assert lines[1].startswith("-30,")


def test_simulate_writes_summary(tmp_path):
    cfg = {"params": P0_CONFIG["params"], "sim": {"t_end": 12.0}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    rc = main(["simulate", path, "--L", "60", "--dx", "0.25", "--out", out])
    assert rc == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["c_star"] == 2.0
    assert summary["outcome"] in ("front", "no_front")
    assert summary["dt"] <= summary["dt_bound"]
    files = os.listdir(out)
    assert "front_trace.csv" in files and "mass_budget.csv" in files
    assert any(f.startswith("snapshot_t") for f in files)


def test_simulate_extinction_outcome(tmp_path):
    cfg = {"params": {**P0_CONFIG["params"], "beta": 1.8, "gamma": 1.0, "delta": 1.0}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    rc = main(["simulate", path, "--L", "40", "--dx", "0.25", "--t-end", "50", "--out", out])
    assert rc == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["outcome"] == "extinction"


def test_verify_quick_exit_code_and_determinism(config_path, tmp_path):
    out1, out2 = str(tmp_path / "v1"), str(tmp_path / "v2")
    assert main(["verify", config_path, "--out", out1]) == 0
    assert main(["verify", config_path, "--out", out2]) == 0
    r1 = (tmp_path / "v1" / "verify_report.json").read_bytes()
    r2 = (tmp_path / "v2" / "verify_report.json").read_bytes()
    assert r1 == r2


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    # a broken incidence must drive the suite to exit code 3
    import sirwaves.model as model

    original = model.incidence
    monkeypatch.setattr(
        "sirwaves.wave_profile.incidence",
        lambda s, i, r, beta, eta=model.ETA_DEFAULT: -original(s, i, r, beta, eta),
    )
    path = write_config(tmp_path, P0_CONFIG)
    assert main(["verify", path, "--out", str(tmp_path / "out")]) == 3


def test_sweep_rows_and_outcome_flip(tmp_path):
    path = write_config(tmp_path, P0_CONFIG)
    out = str(tmp_path / "out")
    rc = main([
        "sweep", path, "--vary", "beta=0.8:2.0:2", "--L", "60", "--dx", "0.1",
        "--tol", "1e-6", "--out", out,
    ])
    assert rc == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 2
    # the outcome flips from extinction to wave across the threshold beta = gamma + delta
    assert [r["outcome"] for r in rows] == ["extinction", "wave"]
    betas = [float(r["beta"]) for r in rows]
    assert betas == sorted(betas)


def test_sweep_parallel_matches_serial(tmp_path):
    path = write_config(tmp_path, P0_CONFIG)
    out1, out4 = str(tmp_path / "j1"), str(tmp_path / "j4")
    main(["sweep", path, "--vary", "c=2.1:3.0:3", "--jobs", "1",
          "--L", "30", "--dx", "0.2", "--tol", "1e-6", "--out", out1])
    main(["sweep", path, "--vary", "c=2.1:3.0:3", "--jobs", "4",
          "--L", "30", "--dx", "0.2", "--tol", "1e-6", "--out", out4])
    assert (tmp_path / "j1" / "sweep.csv").read_text() == (tmp_path / "j4" / "sweep.csv").read_text()


def test_sweep_two_keys(tmp_path):
    path = write_config(tmp_path, P0_CONFIG)
    out = str(tmp_path / "out")
    rc = main(["sweep", path, "--vary", "c=2.5:3.0:2", "--vary", "d3=0.5:1.0:2",
               "--L", "40", "--dx", "0.1", "--tol", "1e-6", "--out", out])
    assert rc == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 4
    keys = [(float(r["c"]), float(r["d3"])) for r in rows]
    assert keys == sorted(keys)  # canonical order
    assert all(r["outcome"] == "wave" for r in rows)


def test_simulate_front_hit_boundary_flagged(tmp_path):
    # window too small for the horizon: the run is flagged, not crashed
    cfg = {"params": P0_CONFIG["params"], "sim": {"t_end": 40.0}}
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "out")
    rc = main(["simulate", path, "--L", "30", "--dx", "0.25", "--out", out])
    assert rc == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["front_hit_boundary"] is True


def test_sweep_rejects_bad_vary(config_path, tmp_path):
    assert main(["sweep", config_path, "--vary", "nonsense=1:2:3",
                 "--out", str(tmp_path / "o")]) == 1
    assert main(["sweep", config_path, "--vary", "beta=1:2:3", "--vary", "c=2:3:2",
                 "--vary", "gamma=1:2:2", "--out", str(tmp_path / "o")]) == 1


def test_rerun_reproduces_output_hashes(config_path, tmp_path):
    # the manifest pins content hashes; re-running the same resolved config
    # must reproduce them all
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["profile", config_path, "--c", "2.5", "--L", "40", "--dx", "0.1",
                     "--tol", "1e-7", "--out", out]) == 0
        outs.append(json.loads((tmp_path / name / "manifest.json").read_text()))
    assert outs[0]["outputs"] == outs[1]["outputs"]
    assert outs[0]["config"] == outs[1]["config"]


def test_out_root_env_override(config_path, tmp_path, monkeypatch):
    monkeypatch.setenv("SIRWAVES_OUT_ROOT", str(tmp_path))
    rc = main(["analyze", config_path, "--c", "2.5", "--out", "rooted"])
    assert rc == 0
    assert (tmp_path / "rooted" / "analysis.json").exists()


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sirwaves.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "0.1.0" in proc.stdout
