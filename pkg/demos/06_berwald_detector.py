"""
Detecting Berwald and Landsberg behaviour numerically
=====================================================

A metric is Berwald when its spray is quadratic in y, and then transport
preserves the Cartan tensor.  Both signals are computed independently.
"""

import numpy as np

from abfinsler.transport import (CurveSpec, berwald_detector, example_metric,
                                 preservation_test)

curve = CurveSpec("piecewise-linear",
                  np.array([[0.0, 0.0, 0.0], [1.0, 0.5, 0.0], [0.5, 1.0, 0.5]]))
x = np.array([0.2, -0.1, 0.4])

for name in ("minkowski", "riemannian", "randers-nonparallel"):
    m = example_metric(name)
    rep = berwald_detector(m, x, sample_count=8, seed=0, curve=curve)
    pres = preservation_test(m, curve, "A", sample_count=2, seed=0)
    print(f"{name:20s} max d3G={rep.third_derivative_max:.2e} "
          f"A dev={pres.max_deviation:.2e} g dev={rep.preservation['g']:.2e} "
          f"F drift={pres.f_drift:.1e} berwald={rep.verdict()}")
