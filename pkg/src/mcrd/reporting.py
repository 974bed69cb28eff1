"""Artifact writers: CSV tables, JSON reports, and SVG plots.

Everything numeric is written with shortest round-trip float formatting so
identical computations produce byte-identical files.  Writes go through a
temp-file-then-rename so concurrent sweep workers never expose partial
files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import Grid
from .model import ModelParams, to_zw

__all__ = [
    "fmt",
    "atomic_write_text",
    "write_csv",
    "write_timeseries_csv",
    "write_profile_csv",
    "write_json",
    "spectrum_report_dict",
    "sha256_file",
    "write_digests",
    "plot_profile",
    "plot_timeseries",
    "plot_spectrum",
    "plot_mu_curves",
]

TIMESERIES_COLUMNS = ("t", "mass", "min_u", "min_v", "L", "J_lambda",
                      "grad_w_inf", "z_t_norm")


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float (or plain str otherwise)."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_timeseries_csv(path: Path, rows) -> None:
    """Monitor rows of a trajectory, one line per output step."""
    write_csv(path, TIMESERIES_COLUMNS,
              [(r.t, r.mass, r.min_u, r.min_v, r.lyap, r.j_lambda,
                r.grad_w_inf, r.z_t_norm) for r in rows])


def write_profile_csv(path: Path, grid: Grid, u, v, params: ModelParams) -> None:
    """Field snapshot with columns x[,y],u,v,z,w."""
    z, w = to_zw(u, v, params)
    if grid.dim == 1:
        header = ("x", "u", "v", "z", "w")
        rows = zip(grid.x[0], u, v, z, w)
    else:
        header = ("x", "y", "u", "v", "z", "w")
        X, Y = np.meshgrid(grid.x[0], grid.x[1], indexing="ij")
        rows = zip(X.ravel(), Y.ravel(), u, v, z, w)
    write_csv(path, header, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.complexfloating):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def spectrum_report_dict(rep) -> dict:
    """Serializable view of a SpectrumReport."""
    out = {
        "eigs_L": rep.eigs_L,
        "eigs_A_restricted": {"re": rep.eigs_A.real, "im": rep.eigs_A.imag},
        "eigs_A_full": {"re": rep.eigs_A_full.real, "im": rep.eigs_A_full.imag},
        "morse_L": rep.morse_L,
        "morse_A": rep.morse_A,
        "zero_L": rep.zero_L,
        "zero_A": rep.zero_A,
        "counts_match": rep.counts_match,
        "realness_violations": rep.realness_violations,
        "hypothesis_xi_eta2_gt_k": rep.hypothesis,
        "eta2_h": rep.eta2,
        "real_threshold_alpha_k_over_2xi": rep.real_threshold,
        "real_threshold_k_over_2xi": rep.real_threshold_strict,
        "zero_tolerance": rep.zero_tol,
        "ambiguous_L": rep.ambiguous_L,
        "ambiguous_A": rep.ambiguous_A,
        "eigvec_condition": rep.eigvec_cond,
        "cond_M": rep.cond_M,
    }
    if rep.mu_samples is not None:
        out["mu_samples"] = {"s": rep.mu_samples.s, "mu": rep.mu_samples.mu,
                             "rayleigh_max_err": rep.mu_samples.rayleigh_max_err}
    return out


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_digests(out_dir: Path) -> dict:
    """Hash every CSV in out_dir into digests.json; returns the mapping."""
    out_dir = Path(out_dir)
    digests = {p.name: sha256_file(p) for p in sorted(out_dir.glob("*.csv"))}
    write_json(out_dir / "digests.json", digests)
    return digests


# -- plots -----------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    matplotlib.rcParams["svg.hashsalt"] = "mcrd"
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    _pyplot().close(fig)


def plot_profile(path: Path, grid: Grid, u, v, params: ModelParams, title="fields") -> None:
    plt = _pyplot()
    z, w = to_zw(u, v, params)
    fig, ax = plt.subplots(figsize=(7, 4))
    if grid.dim == 1:
        x = grid.x[0]
        for name, f in (("u", u), ("v", v), ("z", z), ("w", w)):
            ax.plot(x, f, label=name)
        ax.set_xlabel("x")
    else:
        im = ax.imshow(np.asarray(z).reshape(grid.n).T, origin="lower",
                       extent=(0, grid.lengths[0], 0, grid.lengths[1]), aspect="auto")
        fig.colorbar(im, ax=ax, label="z")
    ax.set_title(title)
    if grid.dim == 1:
        ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, path)


def plot_timeseries(path: Path, rows, title="run monitors") -> None:
    plt = _pyplot()
    t = np.array([r.t for r in rows])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    axes[0, 0].plot(t, [r.lyap for r in rows])
    axes[0, 0].set_ylabel("L")
    axes[0, 1].plot(t, [r.j_lambda for r in rows])
    axes[0, 1].set_ylabel("J_lambda")
    axes[1, 0].semilogy(t[1:], np.maximum([r.grad_w_inf for r in rows[1:]], 1e-300))
    axes[1, 0].set_ylabel("sup |grad w|")
    axes[1, 0].set_xlabel("t")
    axes[1, 1].semilogy(t[1:], np.maximum([r.z_t_norm for r in rows[1:]], 1e-300))
    axes[1, 1].set_ylabel("||z_t||")
    axes[1, 1].set_xlabel("t")
    fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)


def plot_spectrum(path: Path, rep, title="linearization spectra") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.scatter(rep.eigs_A.real, rep.eigs_A.imag, s=14, label="pencil (restricted)")
    ax.scatter(rep.eigs_L, np.zeros_like(rep.eigs_L), s=10, marker="x",
               label="Hessian")
    ax.axvline(rep.real_threshold, color="k", lw=0.8, ls="--",
               label="alpha k / (2 xi)")
    ax.axvline(0.0, color="gray", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, path)


def plot_mu_curves(path: Path, table, alpha: float, title="weighted eigenvalue curves") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for j in range(table.mu.shape[1]):
        ax.plot(table.s, table.mu[:, j], label=f"mu_{j + 1}")
    ax.plot(table.s, -alpha * table.s, "k--", lw=0.8, label="-alpha s")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xlabel("s")
    ax.set_ylabel("mu_j(s)")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
