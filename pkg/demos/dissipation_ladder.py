"""
Solve d_t theta + u . grad theta = nu laplacian theta down the dissipative
viscosity ladder and watch the energy budget split.

At nu = 0 the alternating shear is exactly reversible: the mirrored second
half of the schedule unwinds the first, the L^2 norm is conserved to
round-off, and theta(2) returns to the initial sin(2 pi x_2).  Along
nu = nu_tilde_q the run is matched to the level-q window (1 - T_q, 1 - T_{q+1}]:
the cascade has wound theta to frequency ~ lam_q there, so 2 nu int ||grad
theta||^2 burns an order-one fraction of the energy inside that window no
matter how small nu has become.  The script prints both behaviours side by
side.

Runs in about half a minute at n = 512 (three viscous solves plus the
inviscid reference); no output files.
"""

import numpy as np

from adlab import cascade, scalarsolver, shearflow

params = cascade.CascadeParams.create(
    alpha=0.3, beta=0.0, epsilon=3e-4, delta=0.25, a0=0.1, Q=4
)
schedule = shearflow.build_schedule(cascade.build_sequences(params), levels=3)
seqs = schedule.sequences
n = 512

# Inviscid reference: conservation and exact return.
ref = scalarsolver.solve(schedule, 0.0, n, snapshot_times=(0.0, 1.0, 2.0))
drift = float(np.max(ref.energy_residuals()))
comeback = scalarsolver.l2_norm(ref.fields[2.0] - ref.fields[0.0])
print(f"nu = 0 reference at n = {n}:")
print(f"  max relative L^2 drift          {drift:.3e}")
print(f"  ||theta(2) - theta(0)||_L2      {comeback:.3e}")
print()

# Dissipative ladder: each level q is solved on the schedule truncated at q,
# and the dissipation is read inside that level's time window.
print(" q   nu_tilde_q     window dissipation   sup norm   energy residual")
for q in (1, 2, 3):
    nu = seqs.nu_tilde_float(q)
    trunc = shearflow.truncate(schedule, q)
    traj = scalarsolver.solve(trunc, nu, n)
    lo = 1.0 - seqs.T[q]
    hi = 1.0 - seqs.T[q + 1]
    mask = (traj.times > lo) & (traj.times <= hi + 1e-12)
    window = float(np.max(traj.cum_diss[mask]))
    print(
        f"{q:2d}   {nu:<13.6e}  {window:<19.6f}  {float(np.max(traj.linf)):<9.4f}"
        f"  {float(np.max(traj.energy_residuals())):.3e}"
    )

print()
print("nu falls by a factor ~ 25 down the ladder while the window")
print("dissipation stays pinned near 0.3 of an initial energy of 0.5:")
print("the residue does not vanish with the viscosity.")
