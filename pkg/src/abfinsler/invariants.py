"""Closed-form pointwise tensors of an (alpha, beta)-norm.

With ``a_i = y_i/|y|`` and ``Y_i = b_i - s a_i`` (the beta-direction projected
off ``y``), every quantity is assembled from the derivative stack of phi at
``s``:

* angular metric  h = phi (phi - s phi') (delta - a a) + phi phi'' Y Y
* fundamental tensor  g = h + dF dF,  dF = phi a + phi' Y
* Cartan tensor  A = v (h Y + h Y + h Y) + w Y Y Y
* Cartan form  eta = u Y  (equivalently the g-trace of A)

The log-derivatives ``u``, ``v``, ``w`` are expanded by the quotient rule
rather than differentiated numerically.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .norm import NormSpec, eval_norm

__all__ = [
    "InvariantBundle",
    "CartanForm",
    "y_sharp",
    "angular_metric",
    "fundamental_tensor_closed",
    "uvwq",
    "cartan_tensor",
    "cartan_tensor_reformulated",
    "cartan_form",
    "det_closed",
    "cubic_norm_closed",
    "invariant_bundle",
    "uvq_sweep_csv",
    "sym3",
]

Q_EPS = 1e-10


def _unit(spec, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n,):
        raise ValueError(f"expected a vector of length {spec.n}")
    r = float(np.linalg.norm(y))
    if r == 0:
        raise DomainError("zero vector")
    a = y / r
    s = float(a @ spec.beta)
    return a, s


def _stack(spec, s):
    f, d1, d2, d3 = (float(x) for x in spec.phi.derivs(s, 3))
    return f, d1, d2, d3


def sym3(v):
    """v_i T_jk + v_j T_ki + v_k T_ij for a vector v and symmetric T (returns fn)."""
    def apply(T):
        return (np.einsum("ij,k->ijk", T, v) + np.einsum("jk,i->ijk", T, v)
                + np.einsum("ki,j->ijk", T, v))
    return apply


def y_sharp(spec: NormSpec, y) -> np.ndarray:
    a, s = _unit(spec, y)
    return spec.beta - s * a


def angular_metric(spec: NormSpec, y) -> np.ndarray:
    a, s = _unit(spec, y)
    f, d1, d2, _ = _stack(spec, s)
    Y = spec.beta - s * a
    P = np.eye(spec.n) - np.outer(a, a)
    return f * (f - s * d1) * P + f * d2 * np.outer(Y, Y)


def fundamental_tensor_closed(spec: NormSpec, y) -> np.ndarray:
    a, s = _unit(spec, y)
    f, d1, _, _ = _stack(spec, s)
    Y = spec.beta - s * a
    dF = f * a + d1 * Y
    return angular_metric(spec, y) + np.outer(dF, dF)


def _uvw(n, b, s, f, d1, d2, d3):
    P = f - s * d1
    Q = P + (b * b - s * s) * d2
    dP = -s * d2
    dQ = -3.0 * s * d2 + (b * b - s * s) * d3
    L = d1 / f + dP / P  # [log(phi P)]'
    v = 0.5 * f * L
    u = 0.5 * f * ((n + 1) * d1 / f + (n - 2) * dP / P + dQ / Q)
    w = 0.5 * f * (3.0 * d1 * d2 + f * d3 - 3.0 * f * d2 * L)
    return u, v, w


def _q(n, u, v):
    if abs(v) < Q_EPS * (1.0 + abs(u)):
        return None
    return 1.0 - n + u / v


def uvwq(spec: NormSpec, s: float):
    """(u, v, w, q) at ``s``; ``q`` is None where v is numerically zero."""
    if spec.n < 3:
        raise DimensionError("u, v, w, q are defined for n >= 3")
    u, v, w = _uvw(spec.n, spec.b, float(s), *_stack(spec, float(s)))
    return u, v, w, _q(spec.n, u, v)


def cartan_tensor(spec: NormSpec, y) -> np.ndarray:
    """A_ijk in the (v, w) form; no division by |Y|^2 anywhere."""
    if spec.n < 3:
        raise DimensionError("the closed-form Cartan tensor needs n >= 3")
    a, s = _unit(spec, y)
    _, v, w, _ = uvwq(spec, s)
    Y = spec.beta - s * a
    h = angular_metric(spec, y)
    return v * sym3(Y)(h) + w * np.einsum("i,j,k->ijk", Y, Y, Y)


@dataclass
class CartanForm:
    route1: np.ndarray  # g^{jk} A_ijk
    route2: np.ndarray  # u Y_i
    deviation: float


def cartan_form(spec: NormSpec, y) -> CartanForm:
    if spec.n < 3:
        raise DimensionError("the closed-form Cartan form needs n >= 3")
    a, s = _unit(spec, y)
    u, _, _, _ = uvwq(spec, s)
    ginv = np.linalg.inv(fundamental_tensor_closed(spec, y))
    r1 = np.einsum("jk,ijk->i", ginv, cartan_tensor(spec, y))
    r2 = u * (spec.beta - s * a)
    return CartanForm(r1, r2, float(np.max(np.abs(r1 - r2))))


def cartan_tensor_reformulated(spec: NormSpec, y) -> np.ndarray:
    """A from (q, eta, h): (h eta + h eta + h eta + (q-2)/|eta|^2 eta eta eta)/(n+q-1).

    Only meaningful where v != 0 and eta != 0.
    """
    a, s = _unit(spec, y)
    u, v, _, q = uvwq(spec, s)
    if q is None:
        raise DomainError(f"q is undefined at s={s!r} (v ~ 0)", s=s)
    eta = u * (spec.beta - s * a)
    ginv = np.linalg.inv(fundamental_tensor_closed(spec, y))
    e2 = float(eta @ ginv @ eta)
    h = angular_metric(spec, y)
    n = spec.n
    return (sym3(eta)(h) + (q - 2.0) / e2 * np.einsum("i,j,k->ijk", eta, eta, eta)) / (n + q - 1.0)


def det_closed(spec: NormSpec, y) -> float:
    """phi^(n+1) (phi - s phi')^(n-2) [(phi - s phi') + (b^2 - s^2) phi'']."""
    _, s = _unit(spec, y)
    f, d1, d2, _ = _stack(spec, s)
    n, b = spec.n, spec.b
    P = f - s * d1
    return f ** (n + 1) * P ** (n - 2) * (P + (b * b - s * s) * d2)


def cubic_norm_closed(spec: NormSpec, y) -> float:
    """|C|^2 of the indicatrix at y / F(y): [3(n-2) v^2 + (u - (n-2) v)^2] |Y|_g^2."""
    if spec.n < 3:
        raise DimensionError("needs n >= 3")
    y = np.asarray(y, dtype=float)
    y = y / float(eval_norm(spec, y))
    _, s = _unit(spec, y)
    u, v, _, _ = uvwq(spec, s)
    Y = y_sharp(spec, y)
    ginv = np.linalg.inv(fundamental_tensor_closed(spec, y))
    n = spec.n
    return (3.0 * (n - 2) * v * v + (u + (2 - n) * v) ** 2) * float(Y @ ginv @ Y)


@dataclass
class InvariantBundle:
    y: np.ndarray
    s: float
    g: np.ndarray
    h_angular: np.ndarray
    A: np.ndarray
    eta: np.ndarray
    u: float
    v: float
    w: float
    q: float | None
    det_g: float
    y_sharp: np.ndarray
    y_sharp_norm2: float
    eta_norm2: float

    def to_dict(self) -> dict:
        return {
            "y": self.y.tolist(), "s": self.s,
            "g": self.g.ravel().tolist(),
            "h": self.h_angular.ravel().tolist(),
            "A": self.A.ravel().tolist(),
            "eta": self.eta.tolist(),
            "u": self.u, "v": self.v, "w": self.w, "q": self.q,
            "det_g": self.det_g,
            "y_sharp": self.y_sharp.tolist(),
            "y_sharp_norm2": self.y_sharp_norm2,
            "eta_norm2": self.eta_norm2,
        }


def invariant_bundle(spec: NormSpec, y) -> InvariantBundle:
    y = np.asarray(y, dtype=float)
    a, s = _unit(spec, y)
    u, v, w, q = uvwq(spec, s)
    g = fundamental_tensor_closed(spec, y)
    ginv = np.linalg.inv(g)
    Y = spec.beta - s * a
    eta = u * Y
    return InvariantBundle(
        y=y, s=s, g=g, h_angular=angular_metric(spec, y), A=cartan_tensor(spec, y),
        eta=eta, u=u, v=v, w=w, q=q, det_g=det_closed(spec, y), y_sharp=Y,
        y_sharp_norm2=float(Y @ ginv @ Y), eta_norm2=float(eta @ ginv @ eta))


def uvq_sweep_csv(spec: NormSpec, s_values) -> str:
    """RFC-4180 CSV with columns s, u, v, q (q empty where undefined)."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(["s", "u", "v", "q"])
    for s in s_values:
        u, v, _, q = uvwq(spec, float(s))
        wr.writerow([repr(float(s)), repr(u), repr(v), "" if q is None else repr(q)])
    return buf.getvalue()
