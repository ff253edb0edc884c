"""
Lift one scalar run to the forced three-dimensional system it solves.

A planar shear u(t, x_2) paired with its advected scalar theta gives
v(t, x) = (u(t, x_2), 0, theta(t, x_1, x_2)): v is divergence-free, carries
sup norm max(||u||_inf, ||theta||_inf), and solves the viscous momentum
equation with the planar force F = (d_t u - nu d_22 u, 0, 0), since the
self-advection of a shear vanishes identically and the pressure is zero.
The script builds the lift at nu = nu_tilde_1, checks its books (divergence,
energy admissibility, momentum residual under h-halving), and prints the
force's L^p_t C^sigma_x size, which stays bounded as nu drops.

Runs in a few seconds at n = 128; no output files.
"""

import numpy as np

from adlab import cascade, norms, nslift, scalarsolver, shearflow

params = cascade.CascadeParams.create(
    alpha=0.3, beta=0.0, epsilon=3e-4, delta=0.25, a0=0.1, Q=4
)
schedule = shearflow.build_schedule(cascade.build_sequences(params), levels=3)
seqs = schedule.sequences
n = 128

nu = seqs.nu_tilde_float(1)
trunc = shearflow.truncate(schedule, 1)
traj = scalarsolver.solve(trunc, nu, n, snapshot_times=(0.0, 0.5, 2.0))
lifted = nslift.lift(trunc, traj, nu)

print(f"lift at nu = {nu:.6e}, n = {n}, schedule truncated at q = 1")
print(f"  sup norm of v                 {lifted.sup_norm():.6f}")
print(f"  divergence sup at t = 0.5     {lifted.divergence_sup(0.5, n):.3e}")
print(f"  admissibility residual        {nslift.admissibility_residual(lifted):.3e}")
print()

diss = nslift.dissipation_3d(lifted, t_hi=2.0)
print("dissipation split, nu int_0^2 ||grad v||^2 = u part + theta part:")
print(f"  u part      {diss.u_part:.6f}")
print(f"  theta part  {diss.theta_part:.6f}")
print(f"  total       {diss.total:.6f}")
print()

# Momentum residual: components 1-2 (the shear's self-advection) must sit at
# the round-off floor; component 3 (the scalar equation with a centered d_t)
# should shrink like h^2 as the finite-difference step halves.
coarse = nslift.ns_residual(trunc, nu, n)
fine = nslift.ns_residual(trunc, nu, n, h=coarse["h"] / 2.0)
ratio = coarse["component_3_sup"] / fine["component_3_sup"]
print(f"momentum residual, components 1-2 sup  {coarse['components_12_sup']:.3e}")
print(f"momentum residual, h-halving ratio     {ratio:.3f} (second order => ~4)")
print()

# The force is measured in L^p in time with C^sigma slices; its size is
# uniform along the whole dissipative ladder even as nu drops by ~ 25x.
print(" q   nu             ||F||_{L^p C^sigma}")
values = []
for q in (1, 2, 3):
    nu_q = seqs.nu_tilde_float(q)
    lp, _ = norms.force_norm(nslift.force(shearflow.truncate(schedule, q), nu_q),
                             seqs.params.sigma)
    values.append(lp)
    print(f"{q:2d}   {nu_q:<13.6e}  {lp:.6f}")
peak, med, spread = norms.uniformity_scan(values)
print(f"uniformity: max {peak:.4f}, median {med:.4f}, ratio {spread:.4f} (<= 3)")
