"""How many coefficient grids share one autocovariance table?

Shows fibers for MA(q) series (flipping roots of the coefficient
polynomial), a root on the unit circle, a generic MA(1,1) field and a
separable MA(1,1) field.

Run with ``python3 demos/fibers_tour.py``.
"""
import numpy as np

from macov import CoefGrid, fiber_d1, fiber_generic, fiber_ma11, gamma_map, invertible_representative


def show(title, f):
    print(f"{title}: {len(f)} points, boundary={f.boundary}")
    for p, r in zip(f.points, f.real):
        print("   ", np.round(np.real_if_close(p.flat), 4), "" if r else "(complex)")


a = CoefGrid(3, [1.0, -0.6, 0.2, 0.1])
f = fiber_d1(gamma_map(a))
show("MA(3)", f)
print("    invertible representative:", np.round(invertible_representative(f).flat, 4))
show("same table, homotopy solver", fiber_generic(gamma_map(a)))

show("root on the unit circle, a = (1, 3, 2)", fiber_d1(gamma_map(CoefGrid(2, [1, 3, 2]))))
show("generic MA(1,1)", fiber_ma11(gamma_map(CoefGrid((1, 1), [7, -5, 3, 1]))))
show("separable MA(1,1), (1, 2) x (1, 0.5)", fiber_ma11(gamma_map(CoefGrid((1, 1), np.outer([1, 2], [1, 0.5]).ravel()))))
