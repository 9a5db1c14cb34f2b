"""
Nonlinear parallel transport along a curve
==========================================

"""

import numpy as np

from abfinsler.transport import (CurveSpec, christoffel_spray, example_metric, spray_coeffs,
                                 transport, transport_jacobian)

curve = CurveSpec("polynomial", np.array([[0.1, 0.0, 0.2], [0.5, 0.3, -0.2], [0.2, -0.4, 0.1]]))
y0 = np.array([0.4, 0.8, -0.3])

# For a Riemannian metric the spray is half the Christoffel quadratic form
rie = example_metric("riemannian")
x = np.array([0.5, 0.1, -0.2])
print("G          :", spray_coeffs(rie, x, y0))
print("Christoffel:", christoffel_spray(rie.alpha_field, x, y0))

# The transport preserves F; RK4 drift shrinks 16x per step halving
for h in (0.1, 0.05, 0.025, 1e-3):
    res = transport(rie, curve, y0, step=h)
    print(f"step {h:<6} F drift {res.drift:.3e}")

# Transport is linear for a Riemannian metric but only homogeneous otherwise
for name in ("riemannian", "randers-nonparallel"):
    m = example_metric(name)
    J1 = transport_jacobian(m, curve, y0, step=0.01)
    J2 = transport_jacobian(m, curve, np.array([-0.2, 0.5, 0.9]), step=0.01)
    print(f"{name:20s} Jacobian variation over y0: {np.abs(J1 - J2).max():.2e}")

# Locally Minkowski: nothing moves
print("minkowski:", transport(example_metric("minkowski"), curve, y0, step=0.01).y_end)
