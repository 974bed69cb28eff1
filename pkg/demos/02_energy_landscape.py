"""The gradient structure behind the dynamics.

In the variables z = u + v, w = D u + v the flow dissipates the functional
L(z, w), and on the mass shell int(xi z + w) = lambda the identity

    L(z, w) = xi J_lambda(z) + lambda^2 k / (2 |Omega|) + nonnegative gap

ties L to the reduced functional J_lambda whose critical points are the
stationary profiles.  This script audits all three facts along one
transient: the dissipation identity (first order in dt), the inequality,
and the gap's closed form.

Run:  python3 demos/02_energy_landscape.py
"""

import pathlib

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import mcrd as m
from mcrd import presets

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

grid = m.Grid.interval(256)
params = presets.reference_params()
lam = presets.reference_lambda()

root = m.homogeneous_roots(params, lam)[0]
w_bar = lam - params.xi * root
u_bar = (w_bar - root) / (params.D - 1.0)
v_bar = (params.D * root - w_bar) / (params.D - 1.0)
mode = np.cos(np.pi * grid.x[0])
state0 = m.State(0.0, u_bar * (1 + 0.3 * mode), v_bar * (1 - 0.2 * mode))

traj = m.run(state0, grid, params, m.StepperConfig(dt=0.05, t_end=3.0, output_every=1),
             store_states=True)
rep = m.dissipation_check(traj, grid, params)
print(f"max |dL/dt + dissipation| / scale = {rep.max_mismatch:.3e} (first order in dt)")
print(f"largest L increase between steps: {rep.max_lyap_increase:.3e}")

fig, ax = plt.subplots(figsize=(7, 4))
tt = traj.column("t")[1:]
ax.plot(tt, rep.lhs, label="-dL/dt (difference quotient)")
ax.plot(tt, rep.rhs, "--", label="dissipation functional")
ax.set_xlabel("t")
ax.set_yscale("log")
ax.set_title("the two sides of the dissipation identity")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "dissipation_identity.svg", metadata={"Date": None})

# semi-unfolding inequality along the run
margins = []
gaps = []
for st in traj.states:
    z, w = m.to_zw(st.u, st.v, params)
    r = m.semi_unfolding_check(z, w, grid, params, traj.lam, mass_tol=1e-8)
    margins.append(r.lyap - r.xi_j_plus_const)
    gaps.append(abs(r.gap - r.expected_gap))
print(f"min inequality margin over the run: {min(margins):.3e} (must be >= -1e-10)")
print(f"max gap-identity error: {max(gaps):.3e}")

fig, ax = plt.subplots(figsize=(7, 4))
ax.semilogy(traj.column("t"), np.maximum(margins, 1e-300))
ax.set_xlabel("t")
ax.set_title("L(z, w) - xi J_lambda(z) - lambda^2 k / (2|Omega|)  >=  0")
fig.tight_layout()
fig.savefig(OUT / "semi_unfolding_margin.svg", metadata={"Date": None})
print(f"wrote {OUT}/dissipation_identity.svg and semi_unfolding_margin.svg")
