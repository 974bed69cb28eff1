"""The tau -> 1 limit of the stationary problem.

As the two time constants merge, the mass parameter rescales to
lambda_hat = lambda / xi = int z and the stationary equation loses its
mean-field term, becoming

    -D Lap z = g(z) - <g(z)>,   int z = lambda_hat,

with the average of g acting as a Lagrange multiplier.  The solver treats
mu as an extra Newton unknown; solvability forces mu = -<g(z)> at
convergence, which this script checks, along with the constrained energy
J_hat = int (D/2)|grad z|^2 - G(z).

Run:  python3 demos/04_equal_timescale_limit.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import mcrd as m
from mcrd import presets
from mcrd.model import g

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

grid = m.Grid.interval(256)
params = presets.turing_params()
lam_hat = 2.0

flat = m.limit_tau1_solve(m.cosine_seed(grid, 2.0, 0.2), grid, params, lam_hat)
bumpy = m.limit_tau1_solve(m.cosine_seed(grid, 2.0, 1.5), grid, params, lam_hat)

for name, sol in (("constant branch", flat), ("patterned branch", bumpy)):
    mult_err = abs(sol.mu + grid.integral(g(sol.z_star, params)) / grid.volume)
    print(f"{name}: residual {sol.residual_norm:.2e}, mu = {sol.mu:.8f}, "
          f"|mu + <g>| = {mult_err:.2e}, J_hat = {sol.j_hat:.6f}, "
          f"range {sol.z_star.max() - sol.z_star.min():.3f}")

print(f"constraint errors: {abs(grid.integral(flat.z_star) - lam_hat):.2e}, "
      f"{abs(grid.integral(bumpy.z_star) - lam_hat):.2e}")
print("the patterned branch has lower constrained energy:",
      bumpy.j_hat < flat.j_hat)

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(grid.x[0], flat.z_star, label=f"constant (J_hat = {flat.j_hat:.4f})")
ax.plot(grid.x[0], bumpy.z_star, label=f"patterned (J_hat = {bumpy.j_hat:.4f})")
ax.set_xlabel("x")
ax.set_ylabel("z")
ax.set_title("equal-timescale stationary branches at int z = 2")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "tau1_branches.svg", metadata={"Date": None})
print(f"wrote {OUT}/tau1_branches.svg")
