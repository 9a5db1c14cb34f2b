"""Chart-level general (alpha, beta)-metrics and nonlinear parallel transport.

A :class:`MetricSpec` prescribes, at each chart point ``x``, an inner product
``a_ij(x)``, a covector ``b_i(x)`` and a profile ``phi`` whose parameters may
depend on ``x``; then ``F(x, y) = alpha_x(y) phi(beta_x(y) / alpha_x(y))``.

Spray coefficients

    G^i = 1/4 g^{ij} ([F^2]_{y^j x^k} y^k - [F^2]_{x^j})

take y-derivatives exactly and x-derivatives by central differences with
step ``cbrt(eps) (1 + |x|)``.  Two evaluation paths exist:

* a batched closed-form path (tensorial (alpha, beta) formulas with a
  general ``a_ij``), used for transport;
* a generic jet path (Taylor arithmetic in y) used for the third
  y-derivatives of G in :func:`berwald_detector`, and as a cross-check.

Transport integrates ``dy/dt = -sigma'^j(t) dG^i/dy^j (sigma(t), y)`` with
fixed-step RK4 by default.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import jets
from .errors import DegeneracyError, DomainError, ValidityError
from .indicatrix import make_rng
from .invariants import _uvw
from .norm import NormSpec, check_validity
from .phi import PhiSpec, phi_from_config

__all__ = [
    "PolyField",
    "MetricSpec",
    "CurveSpec",
    "TransportResult",
    "BerwaldReport",
    "PreservationReport",
    "metric_eval",
    "pointwise_norm",
    "spray_coeffs",
    "spray_jacobian",
    "spray_jet",
    "metric_tensors",
    "transport",
    "transport_batch",
    "transport_jacobian",
    "preservation_test",
    "preservation_deviations",
    "berwald_detector",
    "christoffel_spray",
    "example_metric",
]

_EPS = np.finfo(float).eps


# -- polynomial fields --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolyField:
    """Tensor-valued polynomial in x: sum of ``coef * prod_k x_k**powers[k]``."""

    n: int
    coefs: np.ndarray  # (T, *shape)
    powers: np.ndarray  # (T, n) non-negative ints

    @classmethod
    def constant(cls, value, n):
        v = np.asarray(value, dtype=float)
        return cls(n, v[None, ...], np.zeros((1, n), dtype=int))

    @classmethod
    def from_terms(cls, terms, n, shape=None):
        coefs, powers = [], []
        for t in terms:
            coefs.append(np.asarray(t["coef"], dtype=float))
            p = [int(k) for k in t.get("powers", [0] * n)]
            if len(p) != n or min(p, default=0) < 0:
                raise ValueError(f"powers must be {n} non-negative integers, got {p}")
            powers.append(p)
        if not coefs:
            if shape is None:
                raise ValueError("empty polynomial needs an explicit shape")
            return cls.constant(np.zeros(shape), n)
        shapes = {c.shape for c in coefs}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent coefficient shapes {sorted(shapes)}")
        return cls(n, np.array(coefs), np.array(powers, dtype=int))

    @property
    def shape(self):
        return self.coefs.shape[1:]

    @property
    def is_constant(self):
        keep = np.any(self.coefs.reshape(len(self.coefs), -1) != 0, axis=1)
        return not np.any(self.powers[keep])

    def __call__(self, x):
        """Evaluate at ``x`` of shape (n,) or (P, n)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        mono = np.prod(X[:, None, :] ** self.powers[None, :, :], axis=-1)  # (P, T)
        out = np.tensordot(mono, self.coefs, axes=(1, 0))
        return out[0] if single else out

    def to_config(self):
        return {"terms": [{"coef": c.tolist(), "powers": p.tolist()}
                          for c, p in zip(self.coefs, self.powers)]}

    def _key(self):
        return (self.coefs.tobytes(), self.coefs.shape, self.powers.tobytes())

    def __eq__(self, other):
        return isinstance(other, PolyField) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


# -- metric spec ---------------------------------------------------------------

@dataclass(frozen=True)
class MetricSpec:
    """General (alpha, beta)-metric on a chart box.

    ``phi_params`` maps parameter names to scalar :class:`PolyField` s.  For
    the riccati family the parameter ``b`` is always the alpha-length of
    beta at x and must not be given.
    """

    n: int
    alpha_field: PolyField
    beta_field: PolyField
    phi_family: str
    phi_params: tuple = ()  # ((name, PolyField), ...)
    box: tuple | None = None  # ((lo, hi), ...)

    def __post_init__(self):
        if self.alpha_field.shape != (self.n, self.n):
            raise ValueError(f"alpha_field must be {self.n}x{self.n}")
        if self.beta_field.shape != (self.n,):
            raise ValueError(f"beta_field must have {self.n} components")
        if isinstance(self.phi_params, dict):
            object.__setattr__(self, "phi_params", tuple(sorted(self.phi_params.items())))
        if self.phi_family == "riccati" and "b" in dict(self.phi_params):
            raise ValueError("riccati metrics take b from the alpha-length of beta")
        if self.box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.box)
            if len(box) != self.n or any(hi <= lo for lo, hi in box):
                raise ValueError("box must give n intervals lo < hi")
            object.__setattr__(self, "box", box)

    @property
    def x_independent(self):
        return (self.alpha_field.is_constant and self.beta_field.is_constant
                and all(f.is_constant for _, f in self.phi_params))

    def check_box(self, x):
        if self.box is None:
            return
        x = np.atleast_2d(x)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise DomainError(f"x={x.tolist()} leaves the chart box {self.box}")

    def phi_at(self, x, bnorm=None) -> PhiSpec:
        params = {k: float(f(x)) for k, f in self.phi_params}
        if self.phi_family == "riccati":
            params["b"] = float(bnorm)
        return _phi_cached(self.phi_family, tuple(sorted(params.items())))

    def to_config(self):
        return {
            "n": self.n,
            "alpha": self.alpha_field.to_config(),
            "beta": self.beta_field.to_config(),
            "phi": {"family": self.phi_family,
                    "params": {k: f.to_config() for k, f in self.phi_params}},
            "box": None if self.box is None else [list(b) for b in self.box],
        }


@functools.lru_cache(maxsize=4096)
def _phi_cached(family, params):
    return phi_from_config({"family": family, "params": dict(params)})


def _alpha_beta(m, X):
    a = m.alpha_field(X)
    bv = m.beta_field(X)
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    return a, bv


def pointwise_norm(m: MetricSpec, x) -> NormSpec:
    """The Minkowski norm F(x, .) in an alpha_x-orthonormal basis."""
    x = np.asarray(x, dtype=float)
    a, bv = _alpha_beta(m, x)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValidityError(f"alpha is not positive definite at x={x.tolist()}") from None
    bt = np.linalg.solve(L, bv)
    return NormSpec(m.n, tuple(bt), m.phi_at(x, np.linalg.norm(bt)))


def validate_metric(m: MetricSpec, grid_per_axis=3, sample_count=257):
    """check_validity of the pointwise norm on a grid over the chart box."""
    if m.box is None:
        pts = [np.zeros(m.n)]
    else:
        axes = [np.linspace(lo, hi, grid_per_axis) for lo, hi in m.box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m.n)
    return [(np.asarray(x), check_validity(pointwise_norm(m, x), sample_count)) for x in pts]


# -- closed-form pointwise tensors (batched) ---------------------------------

def _phi_stack(m, X, bnorm, s, order):
    """phi derivatives at s[p, ...] with the profile of point X[p]."""
    out = np.empty((order + 1,) + s.shape)
    names = [k for k, _ in m.phi_params]
    cols = [f(X) for _, f in m.phi_params]
    if m.phi_family == "riccati":
        names.append("b")
        cols.append(bnorm)
    groups = {}
    for p in range(X.shape[0]):
        key = tuple(sorted((k, float(c[p])) for k, c in zip(names, cols)))
        groups.setdefault(_phi_cached(m.phi_family, key), []).append(p)
    for phi, idx in groups.items():
        try:
            out[:, idx] = phi.derivs(s[idx], order)
        except DomainError as exc:
            raise DomainError(f"{exc} (x={X[idx[0]].tolist()})", s=exc.s) from None
    return out


def _pointwise(m, X, Y, third=False):
    """E = F^2/2 and its y-derivatives at (X[p], Y[p, b]).

    Returns F (P,B), grad E (P,B,n), g (P,B,n,n) and, if ``third``,
    dg/dy (P,B,n,n,n) = 2 A / F.
    """
    a, bv = _alpha_beta(m, X)
    ay = np.einsum("pij,pbj->pbi", a, Y)
    al2 = np.einsum("pbi,pbi->pb", ay, Y)
    if np.any(al2 <= 0):
        raise DomainError("alpha(y) vanishes (y = 0 or alpha degenerate)")
    al = np.sqrt(al2)
    ell = ay / al[..., None]
    s = np.einsum("pi,pbi->pb", bv, Y) / al
    bnorm = np.sqrt(np.einsum("pi,pi->p", bv, np.linalg.solve(a, bv[..., None])[..., 0]))
    f, d1, d2, d3 = _phi_stack(m, X, bnorm, s, 3)
    Pi = a[:, None] - ell[..., :, None] * ell[..., None, :]
    Ys = bv[:, None, :] - s[..., None] * ell
    P = f - s * d1
    h = (f * P)[..., None, None] * Pi + (f * d2)[..., None, None] * Ys[..., :, None] * Ys[..., None, :]
    dF = f[..., None] * ell + d1[..., None] * Ys
    g = h + dF[..., :, None] * dF[..., None, :]
    F = al * f
    grad = F[..., None] * dF
    if not third:
        return F, grad, g, None
    if np.any(np.abs(P) < 1e-8):
        raise DomainError("phi - s phi' vanishes; closed-form Cartan tensor unavailable")
    n = m.n
    b = bnorm[:, None]
    _, v, w = _uvw(n, b, s, f, d1, d2, d3)
    sym = (np.einsum("pbij,pbk->pbijk", h, Ys) + np.einsum("pbjk,pbi->pbijk", h, Ys)
           + np.einsum("pbki,pbj->pbijk", h, Ys))
    A = v[..., None, None, None] * sym + w[..., None, None, None] * np.einsum(
        "pbi,pbj,pbk->pbijk", Ys, Ys, Ys)
    dg = 2.0 * A / F[..., None, None, None]
    return F, grad, g, dg


def _stencil(x, h):
    n = x.size
    E = np.eye(n) * h
    return np.concatenate([x[None], x + E, x - E])


def _fd_step(x):
    return np.cbrt(_EPS) * (1.0 + float(np.linalg.norm(x)))


def _as_batch(m, y):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    if Y.shape[-1] != m.n:
        raise ValueError(f"expected vectors of length {m.n}")
    return Y, single


def metric_eval(m: MetricSpec, x, y):
    """F(x, y); ``y`` may be (n,) or (B, n)."""
    x = np.asarray(x, dtype=float)
    m.check_box(x)
    Y, single = _as_batch(m, y)
    F, _, _, _ = _pointwise(m, x[None], Y[None])
    return float(F[0, 0]) if single else F[0]


def metric_tensors(m: MetricSpec, x, y):
    """(F, g, A, eta) at x for a batch of y (closed form)."""
    x = np.asarray(x, dtype=float)
    Y, single = _as_batch(m, y)
    F, _, g, dg = _pointwise(m, x[None], Y[None], third=True)
    F, g, dg = F[0], g[0], dg[0]
    A = 0.5 * F[:, None, None, None] * dg
    eta = np.einsum("bjk,bijk->bi", np.linalg.inv(g), A)
    if single:
        return F[0], g[0], A[0], eta[0]
    return F, g, A, eta


def _spray_and_jacobian(m, x, Y):
    """G (B,n) and N = dG/dy (B,n,n) at one x for a batch Y (B,n)."""
    n = m.n
    h = _fd_step(x)
    X = _stencil(x, h)
    F, grad, g, dg = _pointwise(m, X, np.broadcast_to(Y, (X.shape[0],) + Y.shape), third=True)
    E = 0.5 * F * F
    Ex = ((E[1:n + 1] - E[n + 1:]) / (2 * h)).T  # (B, k)
    Exy = np.moveaxis((grad[1:n + 1] - grad[n + 1:]) / (2 * h), 0, 1)  # (B, k, j)
    Exyy = np.moveaxis((g[1:n + 1] - g[n + 1:]) / (2 * h), 0, 1)  # (B, k, j, m)
    W = np.einsum("bkl,bk->bl", Exy, Y) - Ex
    dW = np.einsum("bklj,bk->blj", Exyy, Y) + np.swapaxes(Exy, 1, 2) - Exy
    g0, dg0 = g[0], dg[0]
    G = 0.5 * np.linalg.solve(g0, W[..., None])[..., 0]
    rhs = 0.5 * dW - np.einsum("blmj,bm->blj", dg0, G)
    N = np.linalg.solve(g0, rhs)
    return G, N


def spray_coeffs(m: MetricSpec, x, y):
    """G^i(x, y); ``y`` may be (n,) or (B, n)."""
    x = np.asarray(x, dtype=float)
    m.check_box(x)
    Y, single = _as_batch(m, y)
    G, _ = _spray_and_jacobian(m, x, Y)
    return G[0] if single else G


def spray_jacobian(m: MetricSpec, x, y):
    """N^i_j = dG^i/dy^j (the nonlinear connection)."""
    x = np.asarray(x, dtype=float)
    Y, single = _as_batch(m, y)
    _, N = _spray_and_jacobian(m, x, Y)
    return N[0] if single else N


# -- generic jet path ----------------------------------------------------------

def spray_jet(m: MetricSpec, x, y, order: int = 3):
    """Jets of G^i in y at (x, y) up to ``order`` (list of n jets, batched over y).

    Builds F^2/2 on jets of order ``order + 2`` at every x-stencil point,
    differentiates the jets exactly in y and by central differences in x.
    """
    x = np.asarray(x, dtype=float)
    Y, _ = _as_batch(m, y)
    n, K = m.n, order + 2
    h = _fd_step(x)
    X = _stencil(x, h)
    P = X.shape[0]
    sp = jets.JetSpace.get(n, K)
    ys = sp.variables(np.broadcast_to(Y.T[:, None, :], (n, P, Y.shape[0])))
    a, bv = _alpha_beta(m, X)
    al2 = sum(ys[i] * ys[j] * a[:, i, j][:, None] for i in range(n) for j in range(n))
    be = sum(ys[i] * bv[:, i][:, None] for i in range(n))
    s = be * jets.reciprocal(jets.sqrt(al2))
    bnorm = np.sqrt(np.einsum("pi,pi->p", bv, np.linalg.solve(a, bv[..., None])[..., 0]))
    ph = jets.compose(s, _phi_stack(m, X, bnorm, s.value, K))
    E = al2 * ph * ph * 0.5

    def at(idx):
        return jets.Jet(sp, E.c[:, idx])

    Ex = [(at(1 + k) - at(1 + n + k)) * (1.0 / (2 * h)) for k in range(n)]
    E0 = at(0)
    y0 = [jets.Jet(sp, v.c[:, 0]) for v in ys]
    W = []
    for l in range(n):
        acc = Ex[l].truncate(K - 1) * -1.0
        for k in range(n):
            acc = acc + Ex[k].diff(l) * y0[k]
        W.append(acc.truncate(K - 2) * 0.5)
    gmat = [[E0.diff(i).diff(l) for l in range(n)] for i in range(n)]
    return jets.solve(gmat, W)


def christoffel_spray(alpha_field: PolyField, x, y, h=1e-5):
    """1/2 Gamma^i_jk y^j y^k of a Riemannian metric (independent oracle).

    Christoffel symbols from central differences of a_ij(x).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    a = alpha_field(x)
    da = np.array([(alpha_field(x + h * e) - alpha_field(x - h * e)) / (2 * h)
                   for e in np.eye(n)])  # da[k, i, j] = d a_ij / d x^k
    # Gamma_{l i j} = (d_i a_lj + d_j a_li - d_l a_ij) / 2
    gam_low = 0.5 * (np.einsum("ilj->lij", da) + np.einsum("jli->lij", da) - da)
    gam = np.linalg.solve(a, gam_low.reshape(n, -1)).reshape(n, n, n)
    return 0.5 * np.einsum("ijk,j,k->i", gam, y, y)


# -- curves --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurveSpec:
    """Polynomial or piecewise-linear path sigma on [0, 1]."""

    kind: str
    data: np.ndarray  # polynomial: (deg+1, n) ascending; piecewise: (K, n) vertices
    knots: np.ndarray | None = None  # piecewise: increasing, from 0 to 1

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.data, dtype=float))
        object.__setattr__(self, "data", d)
        if self.kind == "polynomial":
            pass
        elif self.kind == "piecewise-linear":
            if d.shape[0] < 2:
                raise ValueError("a piecewise-linear curve needs >= 2 vertices")
            k = (np.linspace(0, 1, d.shape[0]) if self.knots is None
                 else np.asarray(self.knots, dtype=float))
            if k.shape != (d.shape[0],) or np.any(np.diff(k) <= 0) or k[0] != 0 or k[-1] != 1:
                raise ValueError("knots must increase from 0 to 1, one per vertex")
            object.__setattr__(self, "knots", k)
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind == "polynomial":
            d = np.polynomial.polynomial.polyder(d, axis=0)
            object.__setattr__(self, "_dcoef", d if d.size else np.zeros((1, d.shape[1])))

    @classmethod
    def line(cls, p0, p1):
        p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
        return cls("polynomial", np.array([p0, p1 - p0]))

    @property
    def n(self):
        return self.data.shape[1]

    def __call__(self, t):
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(t, self.data).T
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.knots, self.data[:, i]) for i in range(self.n)], -1)

    def derivative(self, t):
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(t, self._dcoef).T
        t = np.asarray(t, dtype=float)
        seg = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2)
        return (self.data[seg + 1] - self.data[seg]) / (self.knots[seg + 1] - self.knots[seg])[..., None]

    def pieces(self, t_end=1.0):
        """Breakpoints in [0, t_end] across which sigma' may jump."""
        if self.kind == "polynomial":
            return np.array([0.0, t_end])
        inner = self.knots[(self.knots > 0) & (self.knots < t_end)]
        return np.concatenate([[0.0], inner, [t_end]])

    def length(self, t_end=1.0):
        if self.kind == "piecewise-linear":
            ts = np.concatenate([self.knots[self.knots < t_end], [t_end]])
            return float(np.sum(np.linalg.norm(np.diff(self(ts), axis=0), axis=1)))
        val, _ = quad(lambda t: float(np.linalg.norm(self.derivative(t))), 0.0, t_end,
                      epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def to_config(self):
        out = {"kind": self.kind, "points" if self.kind != "polynomial" else "coefs": self.data.tolist()}
        if self.kind == "piecewise-linear":
            out["knots"] = self.knots.tolist()
        return out


# -- transport -----------------------------------------------------------------

@dataclass
class TransportResult:
    t: np.ndarray  # (K,)
    y: np.ndarray  # (K, n)
    F: np.ndarray  # (K,)
    length: float
    step: float | None
    steps: int
    method: str
    rhs_evals: int

    @property
    def y_end(self):
        return self.y[-1]

    @property
    def drift(self):
        return float(np.max(np.abs(self.F - self.F[0])))

    @property
    def drift_per_length(self):
        return self.drift / self.length if self.length > 0 else self.drift

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        n = self.y.shape[1]
        w.writerow(["t"] + [f"y{i}" for i in range(n)] + ["F_drift"])
        for t, y, F in zip(self.t, self.y, self.F):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in y] + [repr(float(F - self.F[0]))])
        return buf.getvalue()

    def summary(self):
        return {"t_end": float(self.t[-1]), "y_end": self.y[-1].tolist(),
                "F0": float(self.F[0]), "drift": self.drift,
                "drift_per_length": self.drift_per_length, "length": self.length,
                "step": self.step, "steps": self.steps, "method": self.method,
                "rhs_evals": self.rhs_evals}


def _rhs(m, curve, t, Y, t_piece=None):
    x = curve(t)
    m.check_box(x)
    _, N = _spray_and_jacobian(m, x, Y)
    # inside one piece the velocity is taken from that piece, also at its ends
    v = curve.derivative(t if t_piece is None else t_piece)
    return -np.einsum("bij,j->bi", N, v)


def _guard(m, curve, t, Y, F0):
    try:
        F = metric_eval(m, curve(t), Y)
    except DomainError as exc:
        raise DegeneracyError(f"transport left the domain at t={t:.6g}: {exc}", last_t=t) from None
    if np.any(F < 1e-6 * F0):
        raise DegeneracyError(f"transported vector collapsed at t={t:.6g}", last_t=t)
    return F


def transport_batch(m: MetricSpec, curve: CurveSpec, Y0, t_end=1.0, step=1e-3,
                    method="rk4", rtol=1e-12, atol=1e-14):
    """Transport a batch (B, n) of initial vectors; returns (t, Y[K, B, n], F[K, B], evals).

    ``method`` is "rk4" (fixed step, the default) or "adaptive" (DOP853
    via solve_ivp, reported on the same time grid).
    """
    Y0 = np.atleast_2d(np.asarray(Y0, dtype=float))
    if curve.n != m.n or Y0.shape[-1] != m.n:
        raise ValueError("curve, metric and vectors must share the dimension")
    if step <= 0 or t_end <= 0:
        raise ValueError("step and t_end must be positive")
    if np.any(np.linalg.norm(Y0, axis=1) == 0):
        raise DomainError("cannot transport the zero vector")
    brk = curve.pieces(t_end)
    grids = [np.linspace(a, b, max(1, int(round((b - a) / step))) + 1)
             for a, b in zip(brk[:-1], brk[1:])]
    ts = np.concatenate([grids[0]] + [g[1:] for g in grids[1:]])
    nsteps = len(ts) - 1
    mids = np.concatenate([np.full(len(g) - 1, 0.5 * (g[0] + g[-1])) for g in grids])
    h = t_end / nsteps if len(grids) == 1 else float(np.max(np.diff(ts)))
    F0 = _guard(m, curve, 0.0, Y0, np.zeros(len(Y0)))
    Ys = np.empty((nsteps + 1,) + Y0.shape)
    Fs = np.empty((nsteps + 1, len(Y0)))
    Ys[0], Fs[0] = Y0, F0
    evals = 0
    if method == "rk4":
        Y = Y0.copy()
        pl = curve.kind == "piecewise-linear"
        for i in range(nsteps):
            t, hs = ts[i], ts[i + 1] - ts[i]
            tp = mids[i] if pl else None
            try:
                k1 = _rhs(m, curve, t, Y, tp)
                k2 = _rhs(m, curve, t + hs / 2, Y + hs / 2 * k1, tp)
                k3 = _rhs(m, curve, t + hs / 2, Y + hs / 2 * k2, tp)
                k4 = _rhs(m, curve, ts[i + 1], Y + hs * k3, tp)
            except (DomainError, np.linalg.LinAlgError) as exc:
                raise DegeneracyError(f"transport aborted after t={t:.6g}: {exc}", last_t=t) from None
            evals += 4
            Y = Y + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            Ys[i + 1] = Y
            Fs[i + 1] = _guard(m, curve, ts[i + 1], Y, F0)
    elif method == "adaptive":
        shape = Y0.shape
        z, k = Y0.ravel(), 0
        for g in grids:
            tp = 0.5 * (g[0] + g[-1]) if curve.kind == "piecewise-linear" else None

            def fun(t, z, tp=tp):
                return _rhs(m, curve, t, z.reshape(shape), tp).ravel()

            try:
                sol = solve_ivp(fun, (g[0], g[-1]), z, method="DOP853", t_eval=g,
                                rtol=rtol, atol=atol)
            except (DomainError, np.linalg.LinAlgError) as exc:
                raise DegeneracyError(f"transport aborted after t={g[0]:.6g}: {exc}",
                                      last_t=float(g[0])) from None
            if not sol.success:
                raise DegeneracyError(f"adaptive transport failed: {sol.message}",
                                      last_t=float(g[0]))
            evals += sol.nfev
            Ys[k:k + len(g)] = sol.y.T.reshape((len(g),) + shape)
            z, k = sol.y[:, -1], k + len(g) - 1
        for i in range(1, len(ts)):
            Fs[i] = _guard(m, curve, ts[i], Ys[i], F0)
        h = None
    else:
        raise ValueError(f"unknown method {method!r}")
    return ts, Ys, Fs, evals, h


def transport(m: MetricSpec, curve: CurveSpec, y0, t_end=1.0, step=1e-3,
              method="rk4", **kw) -> TransportResult:
    """Parallel transport of ``y0`` along ``curve`` from 0 to ``t_end``.

    Raises
    ------
    DegeneracyError
        If y(t) leaves the domain of phi or F(y(t)) < 1e-6 F(y0); the
        error carries the last valid time.
    """
    ts, Ys, Fs, evals, h = transport_batch(m, curve, np.asarray(y0, float)[None], t_end,
                                           step, method, **kw)
    return TransportResult(ts, Ys[:, 0], Fs[:, 0], curve.length(t_end), h, len(ts) - 1,
                           method, evals)


def _jacobian_batch(y0s, rel=1e-5):
    """Initial vectors for central differences: (S, 2n+1, n)."""
    y0s = np.atleast_2d(y0s)
    S, n = y0s.shape
    d = rel * np.linalg.norm(y0s, axis=1)
    out = np.empty((S, 2 * n + 1, n))
    out[:, 0] = y0s
    E = np.eye(n)
    out[:, 1:n + 1] = y0s[:, None] + d[:, None, None] * E
    out[:, n + 1:] = y0s[:, None] - d[:, None, None] * E
    return out, d


def _jacobian_from(Yend, d):
    n = Yend.shape[-1]
    return np.swapaxes((Yend[:, 1:n + 1] - Yend[:, n + 1:]) / (2 * d[:, None, None]), 1, 2)


def transport_jacobian(m: MetricSpec, curve: CurveSpec, y0, t_end=1.0, step=1e-3, **kw):
    """d y(t_end) / d y0 by central differences of the flow (step 1e-5 |y0|)."""
    Y0, d = _jacobian_batch(np.asarray(y0, float))
    _, Ys, _, _, _ = transport_batch(m, curve, Y0[0], t_end, step, **kw)
    return _jacobian_from(Ys[-1][None], d)[0]


@dataclass
class PreservationReport:
    which: str
    max_deviation: float
    deviations: list
    f_drift: float
    samples: int
    seed: int

    def to_dict(self):
        return {"which": self.which, "max_deviation": self.max_deviation,
                "deviations": self.deviations, "F_drift": self.f_drift,
                "samples": self.samples, "seed": self.seed}


def _sample_directions(n, count, seed):
    rng = make_rng(seed)
    Y = rng.standard_normal((count, n))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def preservation_deviations(m: MetricSpec, curve: CurveSpec, y0s, t_end=1.0, step=1e-3):
    """Per-sample deviations of F, g, A and eta from one batched transport.

    Each tensor at (sigma(t_end), y(t_end)) is pulled back by the transport
    differential J and compared with its value at (sigma(0), y0); the
    deviation is the max-abs entry difference.  Returns (dict, F drift).
    """
    y0s = np.atleast_2d(np.asarray(y0s, dtype=float))
    S, n = y0s.shape
    Y0, d = _jacobian_batch(y0s)
    _, Ys, Fs, _, _ = transport_batch(m, curve, Y0.reshape(-1, n), t_end, step)
    Yend = Ys[-1].reshape(S, 2 * n + 1, n)
    fdrift = float(np.max(np.abs(Fs - Fs[0])))
    J = _jacobian_from(Yend, d)
    F0, g0, A0, e0 = metric_tensors(m, curve(0.0), y0s)
    F1, g1, A1, e1 = metric_tensors(m, curve(t_end), Yend[:, 0])
    dev = {
        "F": np.abs(F1 - F0),
        "g": np.abs(np.einsum("sij,sia,sjb->sab", g1, J, J) - g0).max(axis=(1, 2)),
        "A": np.abs(np.einsum("sijk,sia,sjb,skc->sabc", A1, J, J, J) - A0).max(axis=(1, 2, 3)),
        "eta": np.abs(np.einsum("si,sia->sa", e1, J) - e0).max(axis=1),
    }
    return {k: [float(x) for x in v] for k, v in dev.items()}, fdrift


def preservation_test(m: MetricSpec, curve: CurveSpec, which="A", sample_count=4,
                      seed=0, t_end=1.0, step=1e-3, y0s=None) -> PreservationReport:
    """Preservation of one of "F", "g", "A", "eta" along ``curve``.

    Initial vectors are ``sample_count`` uniform unit directions from the
    seeded generator unless ``y0s`` is given.
    """
    if which not in ("F", "g", "A", "eta"):
        raise ValueError(f"which must be F, g, A or eta, not {which!r}")
    if y0s is None:
        y0s = _sample_directions(m.n, sample_count, seed)
    dev, fdrift = preservation_deviations(m, curve, y0s, t_end, step)
    return PreservationReport(which, max(dev[which]), dev[which], fdrift, len(dev[which]), seed)


@dataclass
class BerwaldReport:
    x: list
    third_derivative_max: float
    samples: int
    seed: int
    preservation: dict = field(default_factory=dict)
    f_drift: float | None = None

    def verdict(self, tol=1e-6):
        """True when both detectors see a Berwald (y-quadratic spray) point."""
        return self.third_derivative_max < tol and all(
            v < tol for k, v in self.preservation.items() if k != "F")

    def to_dict(self):
        return {"x": self.x, "third_derivative_max": self.third_derivative_max,
                "samples": self.samples, "seed": self.seed,
                "preservation": self.preservation, "F_drift": self.f_drift}


def berwald_detector(m: MetricSpec, x, sample_count=8, seed=0, curve=None,
                     t_end=1.0, step=1e-3, preservation_samples=2) -> BerwaldReport:
    """Max over sampled unit y of |d^3 G^i / dy^j dy^k dy^l| at x.

    If ``curve`` is given, g/A/eta preservation deviations along it are
    added to the report.
    """
    x = np.asarray(x, dtype=float)
    m.check_box(x)
    Y = _sample_directions(m.n, sample_count, seed)
    G = spray_jet(m, x, Y, order=3)
    third = max(float(np.abs(Gi.derivative(3)).max()) for Gi in G)
    rep = BerwaldReport(x.tolist(), third, sample_count, seed)
    if curve is not None:
        y0s = _sample_directions(m.n, preservation_samples, seed)
        dev, rep.f_drift = preservation_deviations(m, curve, y0s, t_end, step)
        rep.preservation = {k: max(dev[k]) for k in ("g", "A", "eta")}
    return rep


# -- shipped examples ----------------------------------------------------------

def example_metric(name: str, n: int = 3) -> MetricSpec:
    """Named example metrics on the box [-1, 2]^n.

    * "minkowski": x-independent Randers norm (locally Minkowski).
    * "riemannian": a_ij = (1 + x1^2) delta_ij, phi = 1.
    * "randers-nonparallel": flat alpha, beta = (0.3 + 0.2 x1) dx1, phi = 1 + s.
    """
    box = tuple((-1.0, 2.0) for _ in range(n))
    eye = PolyField.constant(np.eye(n), n)
    zero_p = [0] * n
    x1sq = zero_p.copy()
    x1sq[0] = 2
    x1 = zero_p.copy()
    x1[0] = 1
    if name == "minkowski":
        bv = np.zeros(n)
        bv[0], bv[1 % n] = 0.3, 0.2
        return MetricSpec(n, eye, PolyField.constant(bv, n), "randers",
                          (("eps", PolyField.constant(1.0, n)),), box)
    if name == "riemannian":
        alpha = PolyField.from_terms([{"coef": np.eye(n), "powers": zero_p},
                                      {"coef": np.eye(n), "powers": x1sq}], n)
        return MetricSpec(n, alpha, PolyField.constant(np.zeros(n), n), "constant-one", (), box)
    if name == "randers-nonparallel":
        e = np.zeros(n)
        e[0] = 1.0
        beta = PolyField.from_terms([{"coef": 0.3 * e, "powers": zero_p},
                                     {"coef": 0.2 * e, "powers": x1}], n)
        return MetricSpec(n, eye, beta, "randers", (("eps", PolyField.constant(1.0, n)),), box)
    raise ValueError(f"unknown example metric {name!r}")
