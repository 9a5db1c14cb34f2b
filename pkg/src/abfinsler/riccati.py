"""The q = 1 solution family: closed-form psi = (log phi)', its poles, and phi.

The non-trivial positive solutions of ``u = n v`` are

    phi(s) = c2 * exp( integral psi ),
    psi(t) = N(t) / D(t),   N = c1 (1 - c0) t + sqrt(1 - t^2),  D = c1 c0 + t N,

written in the normalized variable ``t = s / b``.  For a general ``b`` the
family is obtained by rescaling ``phi_b(s) = phi_1(s / b)``, so that
``psi_b(s) = psi_1(s / b) / b``.  Everything below works in ``t`` and converts
at the boundary.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import (DomainError, IntegrationBlockedError, SingularityError,
                     ValidityError)
from .quadrature import adaptive_simpson

__all__ = [
    "RiccatiParams",
    "Singularity",
    "SingularitySet",
    "PhiTable",
    "denominator",
    "psi_closed",
    "riccati_rhs",
    "riccati_residual",
    "ode_residual",
    "phi_by_quadrature",
    "singularities",
    "maximal_interval",
    "phi_table",
    "ode_u_equals_nv_residual",
    "POLE", "VANISHING", "ENDPOINT",
]

POLE = "pole-like"
VANISHING = "vanishing"
ENDPOINT = "bounded-derivative-blowup"

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class RiccatiParams:
    c0: float
    c1: float
    c2: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if self.c1 == 0:
            raise ValueError("c1 must be nonzero")
        if not self.c2 > 0:
            raise ValueError(f"c2 must be positive, got {self.c2}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")

    @property
    def d_eps(self):
        # guard band around D = 0, in the normalized variable
        return 1e-9 * (abs(self.c0 * self.c1) + 1.0)

    def normalized(self) -> "RiccatiParams":
        return RiccatiParams(self.c0, self.c1, self.c2, 1.0)


# -- closed forms in the normalized variable t = s / b ------------------------

def _numer(p, t):
    return p.c1 * (1.0 - p.c0) * t + jets.sqrt(1.0 - t * t)


def _denom(p, t):
    return p.c1 * p.c0 + t * _numer(p, t)


def _value(x):
    return x.value if isinstance(x, jets.Jet) else x


def denominator(p: RiccatiParams, s):
    """``D`` at ``t = s / b``; its zeros are exactly the poles of psi."""
    return _denom(p, s / p.b)


def _check_t(p, t):
    tv = np.asarray(_value(t), dtype=float)
    bad = np.abs(tv) >= 1.0
    if np.any(bad):
        s_bad = float(np.atleast_1d(tv)[np.argmax(np.atleast_1d(bad))] * p.b)
        raise DomainError(f"s={s_bad!r} outside the open interval (-b, b)", s=s_bad)


def psi_closed(p: RiccatiParams, s):
    """psi(s) = (log phi)'(s).  Accepts floats, arrays or jets.

    Raises :class:`SingularityError` within the ``d_eps`` band around a
    zero of ``D``.
    """
    t = s / p.b
    _check_t(p, t)
    num = _numer(p, t)
    den = p.c1 * p.c0 + t * num
    dv = np.atleast_1d(np.asarray(_value(den), dtype=float))
    near = np.abs(dv) < p.d_eps
    if np.any(near):
        s_bad = float(np.atleast_1d(np.asarray(_value(s)))[np.argmax(near)])
        raise SingularityError(f"psi is singular at s={s_bad!r} (D={dv[np.argmax(near)]:.3g})",
                               s=s_bad)
    return num / (den * p.b)


def riccati_rhs(c0, t, psi):
    """Right side of the Riccati equation (b = 1)."""
    ic = 1.0 / c0
    return (((1.0 + ic) * t * t - 1.0) * psi * psi
            + (1.0 - 2.0 * ic) * t * psi + (ic - 1.0)) / (1.0 - t * t)


def riccati_residual(p: RiccatiParams, s):
    """``psi' - rhs`` of the Riccati equation at ``s``.

    Works on the b = 1 normalization ``t = s / b``; psi' comes from
    dual-number differentiation of :func:`psi_closed`.
    """
    q = p.normalized()
    t = float(s) / p.b
    (tj,) = jets.JetSpace.get(1, 1).variables([t])
    psi = psi_closed(q, tj)
    dpsi = float(psi.c[1])
    return dpsi - float(riccati_rhs(q.c0, t, float(psi.value)))


def ode_residual(s, derivs, c0, b=1.0):
    """Residual of ``(phi - s phi')^2 - c0 phi [(phi - s phi') + (b^2 - s^2) phi'']``.

    ``derivs`` is ``(phi, phi', phi'')`` at ``s``.
    """
    f, d1, d2 = derivs[0], derivs[1], derivs[2]
    P = f - s * d1
    return P * P - c0 * f * (P + (b * b - s * s) * d2)


# -- singularities ------------------------------------------------------------

@dataclass(frozen=True)
class Singularity:
    s: float
    order: int
    left: str
    right: str

    def to_dict(self):
        return {"s": self.s, "order": self.order, "left": self.left,
                "right": self.right}


@dataclass(frozen=True)
class SingularitySet:
    """Poles of psi inside (-b, b) plus the always-singular endpoints."""

    b: float
    interior: tuple = ()
    endpoints: tuple = ()

    @property
    def values(self):
        return [x.s for x in self.interior]

    def to_dict(self):
        return {
            "b": self.b,
            "interior_singularities": [x.to_dict() for x in self.interior],
            "endpoint_singular": [{"s": s, "kind": k} for s, k in self.endpoints],
        }


def _bisect(f, lo, hi, flo, xtol):
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _dprime(p, t):
    (tj,) = jets.JetSpace.get(1, 1).variables(np.atleast_1d(t)[None, :])
    return _denom(p, tj).c[1]


def _side_kind(p, t, side, delta):
    # sign of psi next to the pole decides whether log(phi) -> +inf or -inf
    tt = t + side * delta
    psi = float(_numer(p, tt) / _denom(p, tt))
    if side < 0:
        return POLE if psi > 0 else VANISHING
    return VANISHING if psi > 0 else POLE


@functools.lru_cache(maxsize=256)
def _singularities_t(p: RiccatiParams, subintervals: int, xtol: float):
    q = p.normalized()
    t = np.linspace(-1.0, 1.0, subintervals + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = _denom(q, t)
        dp = _dprime(q, t)
    dp[0], dp[-1] = -np.inf, -np.inf  # D' -> -inf at both ends

    fD = lambda x: float(_denom(q, x))  # noqa: E731
    fDp = lambda x: float(_dprime(q, np.array([x]))[0])  # noqa: E731

    simple = [float(t[k]) for k in np.flatnonzero(d[1:-1] == 0.0) + 1]
    for k in np.flatnonzero(d[:-1] * d[1:] < 0):
        simple.append(_bisect(fD, t[k], t[k + 1], d[k], xtol))

    tangent = []
    with np.errstate(invalid="ignore"):
        flips = np.isfinite(dp[:-1]) & np.isfinite(dp[1:]) & (dp[:-1] * dp[1:] < 0)
        # |D| cannot drop by more than ~ cell * max|D'| inside the cell
        reach = 2.0 * np.diff(t) * np.maximum(np.abs(dp[:-1]), np.abs(dp[1:]))
        near = np.minimum(np.abs(d[:-1]), np.abs(d[1:])) <= reach + q.d_eps
    for k in np.flatnonzero(flips & near):
        tc = _bisect(fDp, t[k], t[k + 1], dp[k], xtol)
        if abs(fD(tc)) <= q.d_eps:
            tangent.append(tc)

    merge_tol = 1e-6
    roots = []
    for tc in tangent:
        simple = [r for r in simple if abs(r - tc) > merge_tol]
        roots.append((tc, 2))
    simple.sort()
    i = 0
    while i < len(simple):
        if i + 1 < len(simple) and simple[i + 1] - simple[i] <= merge_tol:
            roots.append((0.5 * (simple[i] + simple[i + 1]), 2))
            i += 2
        else:
            roots.append((simple[i], 1))
            i += 1
    roots = [r for r in roots if -1.0 < r[0] < 1.0]
    roots.sort()
    return tuple(roots)


def singularities(p: RiccatiParams, subintervals: int = 4096,
                  xtol: float = 1e-12) -> SingularitySet:
    """Locate and classify the singularities of phi on [-b, b].

    Interior poles are the zeros of D, found by sign-change bisection over
    ``subintervals`` cells; tangential (double) zeros are caught through a
    sign change of D' at a point where |D| is within ``d_eps``.  Each side
    of a pole is tagged pole-like (phi -> inf) or vanishing (phi -> 0).
    The endpoints +-b are always singular: psi stays bounded there but
    phi'' blows up like (1 -+ s)^(-1/2).
    """
    roots = _singularities_t(p, subintervals, xtol)
    q = p.normalized()
    out = []
    for t, order in roots:
        delta = 1e-5
        out.append(Singularity(
            s=t * p.b, order=order,
            left=_side_kind(q, t, -1, delta), right=_side_kind(q, t, +1, delta)))
    return SingularitySet(b=p.b, interior=tuple(out),
                          endpoints=((-p.b, ENDPOINT), (p.b, ENDPOINT)))


def component(p: RiccatiParams, s):
    """Open singularity-free interval of (-b, b) containing ``s``."""
    lo, hi = -p.b, p.b
    if not lo < s < hi:
        raise DomainError(f"s={s!r} outside the open interval (-b, b)", s=s)
    for x in singularities(p).values:
        if abs(x - s) <= 1e-12 * max(1.0, p.b):
            raise SingularityError(f"s={s!r} is a singularity", s=s)
        if x < s:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
    return lo, hi


# -- phi ----------------------------------------------------------------------

@functools.lru_cache(maxsize=65536)
def _log_phi_increment(p: RiccatiParams, s_ref: float, s: float, tol: float):
    q = p.normalized()
    b = p.b

    def f(x):
        return float(_numer(q, x) / (_denom(q, x)))

    def noise(x):
        # D = c1 c0 + t N loses digits to cancellation next to its zeros
        n = _numer(q, x)
        d = q.c1 * q.c0 + x * n
        size = abs(q.c1 * q.c0) + abs(x) * (abs(q.c1 * (1.0 - q.c0) * x) + math.sqrt(1.0 - x * x))
        return 8.0 * _EPS * abs(n / d) * (size / abs(d) + 1.0)

    # integral of psi_b over [s_ref, s] = integral of psi_1 over [s_ref/b, s/b]
    return adaptive_simpson(f, s_ref / b, s / b, tol=tol, noise=noise)


def phi_by_quadrature(p: RiccatiParams, s_ref: float, s: float,
                      tol: float = 1e-12) -> float:
    """phi(s) = c2 * exp(integral of psi from s_ref to s).

    Raises :class:`IntegrationBlockedError` if a pole of psi lies between
    ``s_ref`` and ``s``.
    """
    s_ref, s = float(s_ref), float(s)
    for x in (s_ref, s):
        if not -p.b < x < p.b:
            raise DomainError(f"s={x!r} outside the open interval (-b, b)", s=x)
    lo, hi = min(s_ref, s), max(s_ref, s)
    for x in singularities(p).values:
        if lo - 1e-12 <= x <= hi + 1e-12:
            raise IntegrationBlockedError(
                f"integration from {s_ref} to {s} crosses the singularity at {x:.12g}",
                singularity=x)
    return p.c2 * math.exp(_log_phi_increment(p, s_ref, s, tol))


def _conditions_over_phi(p, s):
    """(phi - s phi')/phi and [(phi - s phi') + (b^2 - s^2) phi'']/phi."""
    (sj,) = jets.JetSpace.get(1, 1).variables(np.atleast_1d(np.asarray(s, float))[None, :])
    psi = psi_closed(p, sj)
    ps, dps = psi.value, psi.c[1]
    c1 = 1.0 - s * ps
    c2 = c1 + (p.b ** 2 - s * s) * (dps + ps * ps)
    return c1, c2


def maximal_interval(p: RiccatiParams, s_anchor: float, n: int = 4,
                     grid: int = 4097, xtol: float = 1e-12):
    """Largest open interval around ``s_anchor`` free of singularities on which
    the strong-convexity conditions hold at every grid sample.

    For ``n == 2`` only the second condition is required.
    """
    lo, hi = component(p, s_anchor)
    if abs(float(denominator(p, s_anchor))) < p.d_eps:
        raise SingularityError(f"anchor s={s_anchor!r} is singular", s=s_anchor)

    def ok(s):
        c1, c2 = _conditions_over_phi(p, np.atleast_1d(s))
        good = c2 > 0
        if n >= 3:
            good &= c1 > 0
        return good

    if not ok(s_anchor)[0]:
        raise ValidityError(f"conditions fail at the anchor s={s_anchor!r}")

    def edge(a, b_):
        # walk from a (good) toward b_ on a grid; refine the first failure
        xs = np.linspace(a, b_, grid + 1)[1:-1]
        good = ok(xs)
        bad = np.flatnonzero(~good)
        if bad.size == 0:
            return b_
        k = bad[0]
        g = a if k == 0 else xs[k - 1]
        x_bad = xs[k]
        while abs(x_bad - g) > xtol:
            m = 0.5 * (g + x_bad)
            if ok(m)[0]:
                g = m
            else:
                x_bad = m
        return 0.5 * (g + x_bad)

    return edge(s_anchor, lo), edge(s_anchor, hi)


@dataclass
class PhiTable:
    s: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    cond1: np.ndarray
    cond2: np.ndarray
    valid: np.ndarray = field(default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["s", "psi", "phi", "cond1", "cond2", "valid"])
        for row in zip(self.s, self.psi, self.phi, self.cond1, self.cond2, self.valid):
            w.writerow([repr(float(v)) for v in row[:5]] + [int(row[5])])
        return buf.getvalue()


def phi_table(p: RiccatiParams, s_grid, s_ref: float = 0.0, n: int = 4,
              tol: float = 1e-12) -> PhiTable:
    """Tabulate psi, phi and both convexity conditions on an increasing grid.

    The grid must lie in the singularity-free component of ``s_ref``;
    phi is accumulated segment by segment from ``s_ref``.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    lo, hi = component(p, s_ref)
    if s[0] <= lo or s[-1] >= hi:
        raise IntegrationBlockedError(
            f"grid [{s[0]}, {s[-1]}] leaves the component ({lo}, {hi}) of s_ref")
    psi = np.asarray(psi_closed(p, s), dtype=float)
    logphi = np.empty_like(s)
    k0 = int(np.searchsorted(s, s_ref))
    # accumulate outward from s_ref
    prev, acc = s_ref, 0.0
    for k in range(k0, len(s)):
        acc += _log_phi_increment(p, prev, float(s[k]), tol)
        logphi[k], prev = acc, float(s[k])
    prev, acc = s_ref, 0.0
    for k in range(k0 - 1, -1, -1):
        acc += _log_phi_increment(p, prev, float(s[k]), tol)
        logphi[k], prev = acc, float(s[k])
    phi = p.c2 * np.exp(logphi)
    c1, c2 = _conditions_over_phi(p, s)
    cond1, cond2 = phi * c1, phi * c2
    valid = cond2 > 0
    if n >= 3:
        valid &= cond1 > 0
    return PhiTable(s=s, psi=psi, phi=phi, cond1=cond1, cond2=cond2, valid=valid)


def ode_u_equals_nv_residual(p: RiccatiParams, s: float, n: int,
                             s_ref: float | None = None) -> float:
    """``u - n v`` for the (alpha, beta)-norm built from the family."""
    from .norm import NormSpec
    from .invariants import uvwq
    from .phi import RiccatiPhi

    phi = RiccatiPhi(p.c0, p.c1, p.c2, p.b, s if s_ref is None else s_ref)
    spec = NormSpec(n, (p.b,) + (0.0,) * (n - 1), phi)
    u, v, _, _ = uvwq(spec, s)
    return u - n * v
