"""Adaptive Simpson quadrature with an evaluation budget."""

from __future__ import annotations

import math

from .errors import QuadratureError

__all__ = ["adaptive_simpson"]

_ROUNDOFF = 64 * 2.0 ** -52


def adaptive_simpson(f, a, b, tol=1e-12, max_evals=1_000_000, max_depth=60, noise=None):
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Recursive interval bisection with the usual Richardson correction
    ``(S2 - S1) / 15``.  Raises :class:`QuadratureError` if more than
    ``max_evals`` function evaluations would be needed, which is what
    happens next to a non-integrable singularity.  A cell is also accepted
    once its correction is at roundoff level relative to the cell value,
    since no float64 refinement can go further.  ``noise(x)``, if given,
    estimates the absolute evaluation error of ``f`` at ``x``; a cell whose
    correction is below ``noise * width`` is accepted for the same reason.

    Returns the integral estimate; ``f`` may be any scalar callable.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    evals = 0

    def ev(x):
        nonlocal evals
        evals += 1
        if evals > max_evals:
            raise QuadratureError(
                f"adaptive Simpson exceeded {max_evals} evaluations on [{a}, {b}]")
        return f(x)

    fa, fm, fb = ev(a), ev(0.5 * (a + b)), ev(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    # explicit stack; (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    comp = 0.0  # Kahan compensation
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = ev(lm), ev(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        floor = _ROUNDOFF * abs(left + right)
        if noise is not None:
            floor = max(floor, 16.0 * (hi - lo) * noise(mid))
        if depth >= max_depth or abs(delta) <= max(15.0 * eps, floor):
            piece = left + right + delta / 15.0
            yk = piece - comp
            tk = total + yk
            comp = (tk - total) - yk
            total = tk
            continue
        if not (math.isfinite(left) and math.isfinite(right)):
            raise QuadratureError(f"non-finite integrand near {mid}")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return sign * total
