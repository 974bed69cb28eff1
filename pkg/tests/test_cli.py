import json

import numpy as np
import pytest

import mcrd as m
from mcrd.cli import main
from mcrd.model import g_prime


def write_cfg(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def sim_config(out_dir, n=64, seed=3):
    return {
        "mode": "simulate",
        "params": {"D": 0.25, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [n]},
        "stepper": {"dt": 0.05, "t_end": 2.0, "output_every": 5},
        "initial": {"lambda": 3.0, "amplitude": 0.05},
        "seed": seed,
        "output": {"dir": str(out_dir), "plots": False},
    }


def test_negative_diffusion_rejected(tmp_path, capsys):
    cfg = sim_config(tmp_path / "out")
    cfg["params"]["D"] = -0.25
    rc = main(["simulate", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 2
    err = capsys.readouterr().err
    record = json.loads(err.strip().splitlines()[-1])
    assert record["error"] == "config"
    assert "D" in record["message"]


def test_inadmissible_params_rejected(tmp_path, capsys):
    # passes the schema but violates xi > 0
    cfg = sim_config(tmp_path / "out")
    cfg["params"]["D"] = 0.6
    rc = main(["simulate", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 2
    assert "xi" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = sim_config(tmp_path / "out")
    cfg["extra_knob"] = 1
    rc = main(["simulate", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 2


def test_mode_mismatch_rejected(tmp_path):
    cfg = sim_config(tmp_path / "out")
    rc = main(["stationary", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 2


def test_simulate_artifacts_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out3 = tmp_path / "c"
    rc = main(["simulate", "--config",
               write_cfg(tmp_path, "c1.json", sim_config(out1))])
    assert rc == 0
    for name in ("manifest.json", "timeseries.csv", "snapshot_initial.csv",
                 "snapshot_final.csv"):
        assert (out1 / name).exists()
    man = json.loads((out1 / "manifest.json").read_text())
    assert man["derived"]["xi"] == 0.5
    assert man["derived"]["alpha"] == 0.75
    assert man["derived"]["xi_eta2_gt_k"] is True

    main(["simulate", "--config", write_cfg(tmp_path, "c2.json", sim_config(out2))])
    assert (out1 / "timeseries.csv").read_bytes() == (out2 / "timeseries.csv").read_bytes()

    main(["simulate", "--config",
          write_cfg(tmp_path, "c3.json", sim_config(out3, seed=4))])
    assert (out1 / "timeseries.csv").read_bytes() != (out3 / "timeseries.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    main(["simulate", "--config",
          write_cfg(tmp_path, "c1.json", sim_config(out1, seed=3)), "--seed", "9"])
    main(["simulate", "--config",
          write_cfg(tmp_path, "c2.json", sim_config(out2, seed=9))])
    assert (out1 / "timeseries.csv").read_bytes() == (out2 / "timeseries.csv").read_bytes()


def test_stationary_mode(tmp_path):
    cfg = {
        "mode": "stationary",
        "params": {"D": 0.0015, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [96]},
        "stationary": {"lambda": 2.2188888888888889, "guess": "cosine",
                       "amplitude": 1.5},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    rc = main(["stationary", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["solution"]["residual_norm"] < 1e-10
    assert man["solution"]["z_max"] - man["solution"]["z_min"] > 1.0


def test_spectrum_mode(tmp_path):
    cfg = {
        "mode": "spectrum",
        "params": {"D": 0.0015, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [96]},
        "spectrum": {"lambda": 2.2188888888888889, "source": "homogeneous",
                     "s_count": 10, "j_max": 4},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    rc = main(["spectrum", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 0
    rep = json.loads((tmp_path / "out" / "spectrum_report.json").read_text())
    assert rep["morse_L"] == rep["morse_A"] == 1
    assert rep["hypothesis_xi_eta2_gt_k"] is True
    assert rep["realness_violations"] == []
    assert (tmp_path / "out" / "mu_curves.csv").exists()


def test_sweep_threshold_and_bookkeeping(tmp_path):
    lam = 2.2188888888888889
    cfg = {
        "mode": "sweep",
        "params": {"D": 0.25, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [96]},
        "sweep": {"lambda": lam,
                  "axes": {"D": {"start": 0.002, "stop": 0.005, "count": 7}}},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    rc = main(["sweep", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 0
    lines = (tmp_path / "out" / "sweep_summary.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 7

    # the Morse flip happens exactly where D*eta2 - g'(z_bar) changes sign
    grid = m.Grid.interval(96)
    for row in rows:
        D = float(row["D"])
        p = m.derive_params(D, 2.0, 1.0, 1.0)
        z_bar = m.homogeneous_roots(p, lam)[0]
        unstable_pred = p.D * grid.eta2 - g_prime(z_bar, p) < 0
        assert (int(row["morse_L"]) >= 1) == unstable_pred
        assert row["morse_L"] == row["morse_A"]
    flips = {int(r["morse_L"]) >= 1 for r in rows}
    assert flips == {True, False}  # the window actually crosses the threshold


def test_sweep_skips_inadmissible_points(tmp_path):
    cfg = {
        "mode": "sweep",
        "params": {"D": 0.25, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [64]},
        "sweep": {"lambda": 3.0,
                  "axes": {"D": {"start": 0.45, "stop": 0.55, "count": 5}}},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    rc = main(["sweep", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    counts = man["counts"]
    assert counts["done"] + counts["skipped"] + counts["failed"] == counts["total"] == 5
    assert counts["skipped"] >= 2  # D >= 0.5 makes xi <= 0 at tau = 2


def test_sweep_single_point_matches_direct_computation(tmp_path):
    lam = 2.2188888888888889
    cfg = {
        "mode": "sweep",
        "params": {"D": 0.0015, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [96]},
        "sweep": {"lambda": lam,
                  "axes": {"D": {"start": 0.0015, "stop": 0.0015, "count": 1}}},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    assert main(["sweep", "--config", write_cfg(tmp_path, "c.json", cfg)]) == 0
    line = (tmp_path / "out" / "sweep_summary.csv").read_text().strip().splitlines()[1]
    row = dict(zip(("index", "D", "tau", "lambda", "status", "reason", "n_roots",
                    "z_bar", "morse_L", "morse_A", "xi_eta2_gt_k", "patterned"),
                   line.split(",")))
    p = m.derive_params(0.0015, 2.0, 1.0, 1.0)
    z_bar = m.homogeneous_roots(p, lam)[0]
    assert float(row["z_bar"]) == z_bar
    grid = m.Grid.interval(96)
    vals, _ = m.hessian_eigs(np.full(grid.n_total, z_bar), grid, p)
    zero_tol = 1e-8 * np.abs(vals).max()
    assert int(row["morse_L"]) == int(np.sum(vals < -zero_tol))


def test_limit_tau1_mode(tmp_path):
    cfg = {
        "mode": "limit-tau1",
        "params": {"D": 0.0015, "tau": 2.0, "alpha1": 1.0, "alpha2": 1.0},
        "grid": {"n": [96]},
        "limit_tau1": {"lambda_hat": 2.0, "amplitude": 1.5},
        "output": {"dir": str(tmp_path / "out"), "plots": False},
    }
    rc = main(["limit-tau1", "--config", write_cfg(tmp_path, "c.json", cfg)])
    assert rc == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["solution"]["residual_norm"] < 1e-11
    assert (tmp_path / "out" / "tau1_profile.csv").exists()


def test_docs_schema_in_sync():
    import pathlib
    from mcrd.cli import load_schema
    docs = pathlib.Path(__file__).parent.parent / "docs" / "config_schema.json"
    assert json.loads(docs.read_text()) == load_schema()


def test_example_configs_validate(tmp_path):
    import pathlib
    import jsonschema
    from mcrd.cli import load_schema
    validator = jsonschema.Draft202012Validator(load_schema())
    examples = pathlib.Path(__file__).parent.parent / "docs" / "example_configs"
    paths = sorted(examples.glob("*.json"))
    assert paths
    for p in paths:
        validator.validate(json.loads(p.read_text()))


def test_plot_emission(tmp_path):
    out = tmp_path / "out"
    cfg = sim_config(out)
    cfg["output"]["plots"] = True
    assert main(["simulate", "--config", write_cfg(tmp_path, "c.json", cfg)]) == 0
    assert (out / "profile.svg").exists()
    assert (out / "lyapunov.svg").exists()
