"""Recover an MA(1,1) field from its sample autocovariances.

Simulates a 50 x 50 field, computes the five half-lag autocovariances,
projects them onto the autocovariance variety and lists the fiber of the
projected point.

Run with ``python3 demos/ma11_projection.py``.
"""
import numpy as np

np.set_printoptions(suppress=True)

from macov import CoefGrid, LseProblem, NoiseSpec, empirical_acov, fiber_ma11, gamma_map, lse_solve, simulate
from macov.lattice import quartic_value

a_true = CoefGrid((1, 1), [7, -5, 3, 1])
truth = gamma_map(a_true)
print("true coefficients   ", a_true.flat)
print("true autocovariances", np.round(truth.values, 4))

y = simulate(a_true, (50, 50), NoiseSpec(seed=42))
g = empirical_acov(y, a_true.order)
print("sample autocov.     ", np.round(g.values, 4))
print("quartic at sample    %.3g (nonzero: the sample is off the variety)" % quartic_value(g))

rep = lse_solve(LseProblem(a_true.order, g))
print(f"\n{len(rep.points)} complex critical points, {len(rep.real_image_indices)} real images")
for i in rep.real_image_indices:
    print(f"  image {np.round(rep.real_images[rep.real_image_indices.index(i)], 4)}  "
          f"distance^2 {rep.objective[i]:.4f}")
star = rep.selected_image
print("projection          ", np.round(star.values, 4))
print("quartic at projection %.2e" % quartic_value(star))

f = fiber_ma11(star)
print(f"\nfiber of the projection: {len(f)} points")
for p, r in zip(f.points, f.real):
    print("  ", np.round(np.real_if_close(p.flat), 4), "real" if r else "complex")
