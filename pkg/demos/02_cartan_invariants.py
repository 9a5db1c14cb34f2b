"""
Closed-form Cartan tensor, Cartan form and the characteristic function q
========================================================================

"""

import numpy as np

from abfinsler.invariants import (cartan_form, cartan_tensor, det_closed, invariant_bundle,
                                  uvwq)
from abfinsler.norm import NormSpec, cartan_tensor_oracle, fundamental_tensor_oracle
from abfinsler.phi import QuadraticRoot, Randers, RiccatiPhi

y = np.array([0.8, -0.4, 0.3, 0.2])

# Closed form against brute-force jets of F^2/2
spec = NormSpec(4, (0.5, 0.1, 0.0, 0.0), Randers())
print("max |A - A_oracle| =", np.abs(cartan_tensor(spec, y) - cartan_tensor_oracle(spec, y)).max())
print("det g closed vs numeric:", det_closed(spec, y),
      np.linalg.det(fundamental_tensor_oracle(spec, y)))

# The Cartan form by trace and by u Y agree
print("route deviation:", cartan_form(spec, y).deviation)

# u, v, q across three families
profiles = {
    "randers": Randers(),
    "quadratic-root": QuadraticRoot(1.0, 0.4),
    "riccati c0=2 c1=1": RiccatiPhi(2.0, 1.0, 1.0, 1.0),
}
for name, phi in profiles.items():
    sp = NormSpec(4, (1.0 if "riccati" in name else 0.5, 0, 0, 0), phi)
    u, v, w, q = uvwq(sp, 0.3)
    print(f"{name:20s} u={u: .6f} v={v: .6f} w={w: .6f} q={q}")

# q = 1 is exactly u = n v
b = invariant_bundle(NormSpec(4, (1.0, 0, 0, 0), RiccatiPhi(2.0, 1.0, 1.0, 1.0)), y)
print("riccati: u - 4 v =", b.u - 4 * b.v)
