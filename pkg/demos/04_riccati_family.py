"""
The q = 1 solution family: psi, phi and its singularities
=========================================================

"""

import numpy as np

from abfinsler.riccati import (RiccatiParams, maximal_interval, phi_by_quadrature, phi_table,
                               psi_closed, riccati_residual, singularities)

# psi solves a Riccati equation; the residual is at roundoff level
p = RiccatiParams(2.0, 1.0)
s = np.linspace(-0.99, 0.99, 200)
print("max Riccati residual:", max(abs(riccati_residual(p, x)) for x in s))
print("psi(0.5) =", psi_closed(p, 0.5))

# phi = c2 exp(int psi), accumulated from s_ref = 0
tab = phi_table(p, np.linspace(-0.9, 0.9, 7))
for row in zip(tab.s + 0.0, tab.phi, tab.cond1, tab.cond2):
    print("s=%+.2f phi=%.6f cond1=%.4f cond2=%.4f" % row)

# For c0 = 1 the interior singularities depend on c1
for c1 in (1.0, 0.5, 0.3, -0.3):
    ss = singularities(RiccatiParams(1.0, c1))
    kinds = [(round(float(x.s), 8), x.order, x.left, x.right) for x in ss.interior]
    print(f"c1={c1:+.1f}: {kinds}")

# Quadrature refuses to cross a singularity
try:
    phi_by_quadrature(RiccatiParams(1.0, 0.5), 0.0, -0.8)
except Exception as exc:
    print(type(exc).__name__, exc)

# Largest interval around 0 that is free of singularities and strongly convex
lo, hi = maximal_interval(RiccatiParams(1.0, 0.5), 0.0, 4)
print("maximal interval, c1=0.5: (%.10f, %.10f)" % (lo, hi))
