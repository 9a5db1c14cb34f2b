"""
Evaluating (alpha, beta)-norms and checking strong convexity
============================================================

"""

import numpy as np

from abfinsler.norm import (NormSpec, check_validity, eval_norm, fundamental_tensor_oracle,
                            normalize_beta, s_of)
from abfinsler.phi import Polynomial, QuadraticRoot, Randers

# A Randers norm |y| + b.y on R^3
spec = NormSpec(3, (0.5, 0.0, 0.0), Randers())
y = np.array([1.0, 1.0, 0.0])
print("F(y) =", eval_norm(spec, y), " s =", s_of(spec, y))

# F is positively 1-homogeneous
print("F(3y) / F(y) =", eval_norm(spec, 3 * y) / eval_norm(spec, y))

# The fundamental tensor from exact jets of F^2/2
g = fundamental_tensor_oracle(spec, y)
print("g =\n", g)
print("g(y, y) - F^2 =", y @ g @ y - eval_norm(spec, y) ** 2)

# Strong convexity is decided by two scalar conditions on [-b, b]
for label, sp in [("randers b=0.5", spec),
                  ("phi=1+2s, b=0.9", NormSpec(3, (0.9, 0, 0), Polynomial((1.0, 2.0)))),
                  ("quadratic root", NormSpec(3, (1.0, 0, 0), QuadraticRoot(1.0, -0.5)))]:
    rep = check_validity(sp)
    print(f"{label:18s} pass={rep.passed} cond1_min={rep.condition1_min:.4f} "
          f"cond2_min={rep.condition2_min:.4f} {rep.reason}")

# Rescaling beta to unit length and absorbing b into phi changes nothing
nb = normalize_beta(spec)
print("normalized phi:", nb.phi, " F =", eval_norm(nb, y))
