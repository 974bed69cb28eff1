"""Command-line front end.

    rdcli <mode> --config <file> [--out DIR] [--seed N] [--no-plots]

Modes: simulate, stationary, spectrum, sweep, limit-tau1, verify.  Configs
are JSON, validated against the schema shipped as
``mcrd/config_schema.json`` (also in docs/); unknown keys are rejected.
Exit codes: 0 success, 2 config error, 3 solver failure, 4 invariant
violation.  All tabular artifacts are CSV and plots are SVG; identical
config and seed produce byte-identical CSV output.  The environment
variable RDCLI_WORKERS sets the sweep worker-pool size (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import State, StepperConfig, dt_budget, initial_state, run
from .grid import Grid
from .model import derive_params
from .reporting import (
    plot_mu_curves,
    plot_profile,
    plot_spectrum,
    plot_timeseries,
    spectrum_report_dict,
    write_csv,
    write_json,
    write_profile_csv,
    write_timeseries_csv,
)
from .spectra import mu_curve, spectral_comparison_report
from .stationary import (
    SolverError,
    cosine_seed,
    homogeneous_roots,
    limit_tau1_solve,
    newton_solve,
    reconstruct_uv,
)

MODES = ("simulate", "stationary", "spectrum", "sweep", "limit-tau1", "verify")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

_REQUIRED_SECTIONS = {
    "simulate": ("params", "grid", "stepper", "initial"),
    "stationary": ("params", "grid", "stationary"),
    "spectrum": ("params", "grid", "spectrum"),
    "sweep": ("params", "grid", "sweep"),
    "limit-tau1": ("params", "grid", "limit_tau1"),
    "verify": (),
}


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    with resources.files("mcrd").joinpath("config_schema.json").open() as fh:
        return json.load(fh)


def load_config(path: str | None, mode: str) -> dict:
    if path is None:
        if mode != "verify":
            raise ConfigError(f"mode {mode!r} requires --config")
        cfg = {"mode": "verify"}
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}")
    if cfg["mode"] != mode:
        raise ConfigError(f"config mode {cfg['mode']!r} does not match command {mode!r}")
    missing = [s for s in _REQUIRED_SECTIONS[mode] if s not in cfg]
    if missing:
        raise ConfigError(f"mode {mode!r} requires config sections: {', '.join(missing)}")
    return cfg


def _build_grid(cfg: dict) -> Grid:
    gc = cfg["grid"]
    n = gc["n"]
    lengths = gc.get("lengths", [1.0] * len(n))
    if len(lengths) != len(n):
        raise ConfigError("grid.n and grid.lengths must have matching lengths")
    if "dim" in gc and gc["dim"] != len(n):
        raise ConfigError("grid.dim does not match the length of grid.n")
    return Grid(n, lengths)


def _build_params(cfg: dict):
    pc = cfg["params"]
    try:
        return derive_params(pc["D"], pc["tau"], pc["alpha1"], pc["alpha2"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _manifest(cfg, args, grid, params, lam, extra=None) -> dict:
    man = {
        "version": __version__,
        "mode": cfg["mode"],
        "config": cfg,
        "seed": _seed(cfg, args),
        "rng": "numpy.random.default_rng (PCG64)",
        "derived": {
            "k": params.k,
            "xi": params.xi,
            "alpha": params.alpha,
            "lambda": lam,
            "eta2_h": grid.eta2,
            "xi_eta2_gt_k": bool(params.xi * grid.eta2 > params.k),
            "volume": grid.volume,
            "h": list(grid.h),
        },
    }
    if extra:
        man.update(extra)
    return man


def _seed(cfg, args) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.get("seed", 0)


def _out_dir(cfg, args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(cfg.get("output", {}).get("dir", "rdcli_out"))


def _plots_enabled(cfg, args) -> bool:
    if args.no_plots:
        return False
    return bool(cfg.get("output", {}).get("plots", True))


# -- modes -------------------------------------------------------------------

def _mode_simulate(cfg, args) -> int:
    grid = _build_grid(cfg)
    params = _build_params(cfg)
    ic = cfg["initial"]
    sc = cfg["stepper"]
    config = StepperConfig(
        dt=sc["dt"], t_end=sc["t_end"], scheme=sc.get("scheme", "imex-euler"),
        output_every=sc.get("output_every", 1), seed=_seed(cfg, args),
        amplitude=ic.get("amplitude", 0.01),
    )
    state0 = initial_state(grid, params, ic["lambda"], amplitude=config.amplitude,
                           seed=config.seed)
    traj = run(state0, grid, params, config, store_states=True)
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    write_timeseries_csv(out / "timeseries.csv", traj.rows)
    write_profile_csv(out / "snapshot_initial.csv", grid, state0.u, state0.v, params)
    fin = traj.final
    write_profile_csv(out / "snapshot_final.csv", grid, fin.u, fin.v, params)
    man = _manifest(cfg, args, grid, params, traj.lam, extra={
        "dt_budget_initial": dt_budget(state0, params),
        "positivity_violated": traj.positivity_violated,
        "min_u_run": traj.min_u_run,
        "min_v_run": traj.min_v_run,
        "artifacts": ["timeseries.csv", "snapshot_initial.csv", "snapshot_final.csv"],
    })
    write_json(out / "manifest.json", man)
    if _plots_enabled(cfg, args):
        plot_profile(out / "profile.svg", grid, fin.u, fin.v, params,
                     title=f"fields at t = {fin.t:g}")
        plot_timeseries(out / "lyapunov.svg", traj.rows)
    print(f"simulate: wrote {out}")
    return EXIT_OK


def _stationary_guess(section, grid, params, lam):
    roots = homogeneous_roots(params, lam, volume=grid.volume)
    if not roots:
        raise SolverError(f"no homogeneous root for lambda = {lam}")
    base = roots[0]
    if section.get("guess", "homogeneous") == "homogeneous":
        return np.full(grid.n_total, base)
    return cosine_seed(grid, base, section.get("amplitude", 1.5),
                       mode=section.get("mode_number", 1))


def _mode_stationary(cfg, args) -> int:
    grid = _build_grid(cfg)
    params = _build_params(cfg)
    sec = cfg["stationary"]
    lam = sec["lambda"]
    z0 = _stationary_guess(sec, grid, params, lam)
    st = newton_solve(z0, grid, params, lam, tol=sec.get("tol", 1e-10),
                      max_iter=sec.get("max_iter", 50), damped=sec.get("damped", True))
    u, v = reconstruct_uv(st, params)
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(out / "stationary_profile.csv", grid, u, v, params)
    man = _manifest(cfg, args, grid, params, lam, extra={
        "solution": {
            "residual_norm": st.residual_norm,
            "iterations": st.iterations,
            "w_bar": st.w_bar,
            "j_value": st.j_value,
            "z_min": float(st.z_star.min()),
            "z_max": float(st.z_star.max()),
            "homogeneous_roots": homogeneous_roots(params, lam, volume=grid.volume),
        },
        "artifacts": ["stationary_profile.csv"],
    })
    write_json(out / "manifest.json", man)
    if _plots_enabled(cfg, args):
        plot_profile(out / "profile.svg", grid, u, v, params, title="stationary profile")
    print(f"stationary: residual {st.residual_norm:.3e} in {st.iterations} iterations; wrote {out}")
    return EXIT_OK


def _mode_spectrum(cfg, args) -> int:
    grid = _build_grid(cfg)
    params = _build_params(cfg)
    sec = cfg["spectrum"]
    lam = sec["lambda"]
    if sec.get("source", "homogeneous") == "homogeneous":
        roots = homogeneous_roots(params, lam, volume=grid.volume)
        if not roots:
            raise SolverError(f"no homogeneous root for lambda = {lam}")
        z_star = np.full(grid.n_total, roots[0])
        w_bar = (lam - params.xi * grid.integral(z_star)) / grid.volume
    else:
        z0 = cosine_seed(grid, homogeneous_roots(params, lam, volume=grid.volume)[0],
                         sec.get("amplitude", 1.5), mode=sec.get("mode_number", 1))
        st = newton_solve(z0, grid, params, lam)
        z_star, w_bar = st.z_star, st.w_bar
    rep = spectral_comparison_report(z_star, grid, params, w_bar=w_bar)
    if sec.get("source", "homogeneous") == "newton":
        st.morse_index = rep.morse_L
    s_grid = np.linspace(sec.get("s_start", 0.2), sec.get("s_stop", 10.0),
                         sec.get("s_count", 50))
    table = mu_curve(z_star, grid, params, s_grid, sec.get("j_max", 6))
    rep.mu_samples = table
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "spectrum_report.json", spectrum_report_dict(rep))
    write_csv(out / "mu_curves.csv",
              ["s", *[f"mu_{j + 1}" for j in range(table.mu.shape[1])]],
              [[s, *table.mu[i]] for i, s in enumerate(table.s)])
    man = _manifest(cfg, args, grid, params, lam, extra={
        "counts": {"morse_L": rep.morse_L, "morse_A": rep.morse_A,
                   "zero_L": rep.zero_L, "zero_A": rep.zero_A},
        "artifacts": ["spectrum_report.json", "mu_curves.csv"],
    })
    write_json(out / "manifest.json", man)
    if _plots_enabled(cfg, args):
        plot_spectrum(out / "spectrum.svg", rep)
        plot_mu_curves(out / "mu_curves.svg", table, params.alpha)
    print(f"spectrum: morse_L={rep.morse_L} morse_A={rep.morse_A}; wrote {out}")
    return EXIT_OK


SWEEP_COLUMNS = ("index", "D", "tau", "lambda", "status", "reason", "n_roots",
                 "z_bar", "morse_L", "morse_A", "xi_eta2_gt_k", "patterned")


def _sweep_point(task):
    """One sweep point; returns a row dict.  Top level so pools can pickle it."""
    (index, base, overrides, lam, n, lengths, relax) = task
    from .spectra import hessian_eigs, build_A  # local import for worker processes

    vals = dict(base)
    vals.update({k: v for k, v in overrides.items() if k != "lambda"})
    lam = overrides.get("lambda", lam)
    row = {c: "" for c in SWEEP_COLUMNS}
    row.update({"index": index, "D": vals["D"], "tau": vals["tau"], "lambda": lam})
    try:
        params = derive_params(vals["D"], vals["tau"], vals["alpha1"], vals["alpha2"])
    except ValueError as exc:
        row.update(status="skipped", reason=str(exc).split("(")[0].strip())
        return row
    try:
        grid = Grid(n, lengths)
        roots = homogeneous_roots(params, lam, volume=grid.volume)
        row["n_roots"] = len(roots)
        if not roots:
            row.update(status="failed", reason="no homogeneous root in bracket")
            return row
        z_bar = roots[0]
        row["z_bar"] = z_bar
        z = np.full(grid.n_total, z_bar)
        vals_L, _ = hessian_eigs(z, grid, params)
        zero_tol = 1e-8 * float(np.max(np.abs(vals_L)))
        row["morse_L"] = int(np.sum(vals_L < -zero_tol))
        pencil = build_A(z, grid, params)
        eigs_A = np.linalg.eigvals(pencil.A_restricted)
        row["morse_A"] = int(np.sum((eigs_A.real < 0) & (np.abs(eigs_A) > zero_tol)))
        row["xi_eta2_gt_k"] = bool(params.xi * grid.eta2 > params.k)
        if relax.get("enabled", False):
            from .dynamics import gradient_flow_run

            z_fin, _, _ = gradient_flow_run(
                cosine_seed(grid, z_bar, relax.get("amplitude", 0.05)),
                grid, params, lam, dt=relax.get("dt", 0.1),
                t_end=relax.get("t_end", 400.0), record_every=1000000,
            )
            row["patterned"] = bool(z_fin.max() - z_fin.min() > 1e-3)
        row["status"] = "done"
    except Exception as exc:  # per-point failures recorded, sweep continues
        row.update(status="failed", reason=str(exc))
    return row


def _mode_sweep(cfg, args) -> int:
    grid_cfg = cfg["grid"]
    n = grid_cfg["n"]
    lengths = grid_cfg.get("lengths", [1.0] * len(n))
    sec = cfg["sweep"]
    base = cfg["params"]
    lam = sec["lambda"]
    relax = sec.get("relax", {})
    axes = sec["axes"]
    axis_values = {}
    for name, ax in axes.items():
        axis_values[name] = np.linspace(ax["start"], ax["stop"], ax["count"])
    names = list(axis_values)
    meshes = np.meshgrid(*[axis_values[a] for a in names], indexing="ij")
    points = []
    for index in range(meshes[0].size):
        overrides = {name: float(mesh.ravel()[index]) for name, mesh in zip(names, meshes)}
        points.append((index, base, overrides, lam, n, lengths, relax))

    workers = int(os.environ.get("RDCLI_WORKERS", "1"))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(t) for t in points]
    rows.sort(key=lambda r: r["index"])

    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep_summary.csv", SWEEP_COLUMNS,
              [[r[c] for c in SWEEP_COLUMNS] for r in rows])
    counts = {s: sum(1 for r in rows if r["status"] == s)
              for s in ("done", "skipped", "failed")}
    params_ok = None
    try:
        params_ok = _build_params(cfg)
    except ConfigError:
        pass
    grid = Grid(n, lengths)
    man = {
        "version": __version__, "mode": "sweep", "config": cfg,
        "seed": _seed(cfg, args), "rng": "numpy.random.default_rng (PCG64)",
        "counts": {**counts, "total": len(rows)},
        "eta2_h": grid.eta2,
        "workers": workers,
        "artifacts": ["sweep_summary.csv"],
    }
    if params_ok is not None:
        man["derived_base"] = {"k": params_ok.k, "xi": params_ok.xi, "alpha": params_ok.alpha}
    write_json(out / "manifest.json", man)
    print(f"sweep: {counts['done']} done, {counts['skipped']} skipped, "
          f"{counts['failed']} failed; wrote {out}")
    return EXIT_OK


def _mode_limit_tau1(cfg, args) -> int:
    grid = _build_grid(cfg)
    params = _build_params(cfg)
    sec = cfg["limit_tau1"]
    lam_hat = sec["lambda_hat"]
    base = lam_hat / grid.volume
    z0 = cosine_seed(grid, base, sec.get("amplitude", 1.5),
                     mode=sec.get("mode_number", 1)) if grid.dim == 1 \
        else np.full(grid.n_total, base)
    t1 = limit_tau1_solve(z0, grid, params, lam_hat, tol=sec.get("tol", 1e-12))
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "tau1_profile.csv", ("x", "z"),
              zip(grid.x[0], t1.z_star) if grid.dim == 1
              else zip(range(grid.n_total), t1.z_star))
    man = _manifest(cfg, args, grid, params, lam_hat, extra={
        "solution": {"mu": t1.mu, "residual_norm": t1.residual_norm,
                     "j_hat": t1.j_hat, "iterations": t1.iterations,
                     "z_min": float(t1.z_star.min()), "z_max": float(t1.z_star.max())},
        "artifacts": ["tau1_profile.csv"],
    })
    write_json(out / "manifest.json", man)
    if _plots_enabled(cfg, args) and grid.dim == 1:
        import matplotlib

        matplotlib.use("Agg", force=False)
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(grid.x[0], t1.z_star)
        ax.set_xlabel("x")
        ax.set_ylabel("z")
        ax.set_title("equal-timescale limit profile")
        fig.tight_layout()
        fig.savefig(out / "tau1_profile.svg", format="svg", metadata={"Date": None})
        plt.close(fig)
    print(f"limit-tau1: mu = {t1.mu:.12g}, residual {t1.residual_norm:.3e}; wrote {out}")
    return EXIT_OK


def _mode_verify(cfg, args) -> int:
    from .verify import run_all

    out = _out_dir(cfg, args)
    results = run_all(out_dir=out, seed=_seed(cfg, args), echo=print)
    n_fail = sum(1 for r in results if not r.passed)
    print(f"verify: {len(results) - n_fail}/{len(results)} criteria passed; wrote {out}")
    if n_fail:
        return EXIT_INVARIANT
    return EXIT_OK


_DISPATCH = {
    "simulate": _mode_simulate,
    "stationary": _mode_stationary,
    "spectrum": _mode_spectrum,
    "sweep": _mode_sweep,
    "limit-tau1": _mode_limit_tau1,
    "verify": _mode_verify,
}


def _error_record(kind: str, message: str, args) -> None:
    record = {"error": kind, "message": message}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    if args is not None and args.out is not None:
        try:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_json(Path(args.out) / "error.json", record)
        except OSError:
            pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdcli",
        description="mass-conserved reaction-diffusion laboratory",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--no-plots", action="store_true", help="skip SVG plot emission")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.mode)
    except ConfigError as exc:
        _error_record("config", str(exc), args)
        return EXIT_CONFIG

    try:
        return _DISPATCH[args.mode](cfg, args)
    except ConfigError as exc:
        _error_record("config", str(exc), args)
        return EXIT_CONFIG
    except (SolverError, FloatingPointError) as exc:
        _error_record("solver", str(exc), args)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
