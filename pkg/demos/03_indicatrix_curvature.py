"""
Curvature of the indicatrix from the Gauss equation
===================================================

For the q = 1 family the indicatrix has isotropic sectional curvature
k = 1 - ((n-1)/n)^2 |T|^2 with |T| constant; a Randers norm does not.
"""

import numpy as np

from abfinsler.indicatrix import (constancy_sweep, cubic_and_tchebychev, gauss_curvature,
                                  sectional_curvatures, tangent_frame)
from abfinsler.invariants import cubic_norm_closed
from abfinsler.norm import NormSpec
from abfinsler.phi import Randers, RiccatiPhi

ric = NormSpec(4, (1.0, 0, 0, 0), RiccatiPhi(2.0, 1.0, 1.0, 1.0))
y = np.array([0.3, 0.9, -0.2, 0.1])

# A g-orthonormal frame of the tangent space of the indicatrix at y / F(y)
fr = tangent_frame(ric, y)
C, T, t2 = cubic_and_tchebychev(ric, fr)
print("|C|^2 frame sum:", np.sum(C * C), " closed form:", cubic_norm_closed(ric, y))

R = gauss_curvature(C)
print("sectional curvatures:", sectional_curvatures(R))
print("predicted k:", 1 - (9 / 16) * t2)

# Sweep the indicatrix
for name, spec in [("riccati", ric), ("randers", NormSpec(4, (0.5, 0, 0, 0), Randers()))]:
    rep = constancy_sweep(spec, 64, seed=1)
    print(f"{name:8s} |T|^2 spread={rep.tnorm2_spread:.2e} "
          f"sectional spread={rep.spread:.2e} "
          f"max deviation from isotropic={max(rep.isotropic_deviation):.2e}")
