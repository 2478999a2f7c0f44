"""Shell weights and the windowed integral on a ball.

For a radial field the window integral ``l_r(u)(x)`` reduces to a 1-d integral
against the measure of the sphere of radius ``s`` lying inside ``B(x, r)``. We
print that shell weight for a few configurations, then evaluate ``l_r`` of a
bump and compare it with the Cauchy-Schwarz bound ``|g|_2 |u|_2``.
"""
import numpy as np

from nonlocal_diffusion import Field, KernelSpec, build_radial_mesh, eval_lr, lr_bound_report, shell_weight, sphere_measure

for n in (1, 2, 3):
    full = sphere_measure(n) * 0.5 ** (n - 1)
    print(f"n={n}: |S(0.5)| = {full:.6f}")
    for rho, r in [(0.0, 0.6), (0.3, 0.3), (0.3, 0.9), (0.9, 0.2)]:
        w = float(shell_weight(rho, 0.5, r, n))
        print(f"  rho={rho:.1f} r={r:.1f}: weight {w:.6f} ({w / full:6.1%} of the sphere)")

# a window that covers the whole ball returns the full integral at every node
mesh = build_radial_mesh(3, 2.0, 256)
bump = Field.from_function(mesh, lambda rho: np.cos(np.pi * rho / 2))
kernel = KernelSpec.constant(mesh)
for r in (0.25, 1.0, 2.0):
    lr = eval_lr(bump, kernel, r).values
    print(f"r={r:4.2f}: l_r(bump) at centre {lr[0]:.6f}, at boundary {lr[-1]:.6f}")

rep = lr_bound_report(bump, kernel, 1.0)
print(f"max l_r = {rep.max_lr:.6f} <= |g|_2 |u|_2 = {rep.cauchy_schwarz_bound:.6f}: {rep.holds}")
