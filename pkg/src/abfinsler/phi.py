"""Profile functions phi(s) for (alpha, beta)-norms F = |y| phi(b.y / |y|).

Every family exposes the same small surface:

* ``phi(s)`` -- values (floats or arrays),
* ``phi.derivs(s, order)`` -- stacked derivatives ``[phi, phi', ...]``,
* ``phi.compose(s_jet)`` -- phi applied to a :class:`~abfinsler.jets.Jet`,
* ``phi.scaled(b)`` -- the profile ``t -> phi(b t)``,
* ``phi.to_config()`` -- the declarative ``{"family", "params"}`` form.

The set of families is closed on purpose; :func:`phi_from_config` is the
only constructor used by the config layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import jets
from . import riccati as _ric
from .errors import ConfigError, DomainError

__all__ = [
    "PhiSpec",
    "ConstantOne",
    "Randers",
    "Polynomial",
    "QuadraticRoot",
    "RiccatiPhi",
    "TablePhi",
    "phi_from_config",
]


class PhiSpec:
    family = "abstract"

    @property
    def domain(self):
        return (-math.inf, math.inf)

    def check_domain(self, s):
        lo, hi = self.domain
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        bad = ~((arr > lo) & (arr < hi))
        if np.any(bad):
            sb = float(arr.flat[np.argmax(bad)])
            raise DomainError(
                f"s={sb!r} is outside the open domain ({lo}, {hi}) of the "
                f"{self.family} profile", s=sb)

    def __call__(self, s):
        return self.derivs(s, 0)[0]

    def derivs(self, s, order=3):
        """Array of shape ``(order + 1, *shape(s))``."""
        self.check_domain(s)
        s = np.asarray(s, dtype=float)
        return np.asarray(self._derivs(s, order), dtype=float)

    def _derivs(self, s, order):
        raise NotImplementedError

    def compose(self, s: "jets.Jet") -> "jets.Jet":
        return jets.compose(s, self.derivs(s.value, s.order))

    def scaled(self, b: float) -> "PhiSpec":
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def _poly_stack(coeffs, s, order):
    c = np.asarray(coeffs, dtype=float)
    out = []
    for _ in range(order + 1):
        out.append(np.polynomial.polynomial.polyval(s, c) * np.ones_like(s))
        c = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1)
    return out


@dataclass(frozen=True)
class ConstantOne(PhiSpec):
    """phi = 1: the Euclidean norm."""

    family = "constant-one"

    def _derivs(self, s, order):
        return [np.ones_like(s)] + [np.zeros_like(s)] * order

    def scaled(self, b):
        return self

    def to_config(self):
        return {"family": self.family, "params": {}}


@dataclass(frozen=True)
class Randers(PhiSpec):
    """phi = 1 + eps * s."""

    eps: float = 1.0
    family = "randers"

    def _derivs(self, s, order):
        return _poly_stack([1.0, self.eps], s, order)

    def scaled(self, b):
        return Randers(self.eps * b)

    def to_config(self):
        return {"family": self.family, "params": {"eps": self.eps}}


@dataclass(frozen=True)
class Polynomial(PhiSpec):
    """phi = sum_k coeffs[k] s^k."""

    coeffs: tuple = (1.0,)
    family = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def _derivs(self, s, order):
        return _poly_stack(self.coeffs, s, order)

    def scaled(self, b):
        return Polynomial(tuple(c * b ** k for k, c in enumerate(self.coeffs)))

    def to_config(self):
        return {"family": self.family, "params": {"coeffs": list(self.coeffs)}}


@dataclass(frozen=True)
class QuadraticRoot(PhiSpec):
    """phi = sqrt(c0 + c1 s^2); Euclidean after a linear change of variables."""

    c0: float = 1.0
    c1: float = 0.0
    family = "quadratic-root"

    @property
    def domain(self):
        if self.c1 >= 0:
            return (-math.inf, math.inf)
        r = math.sqrt(self.c0 / -self.c1)
        return (-r, r)

    def _derivs(self, s, order):
        c0, c1 = self.c0, self.c1
        f = np.sqrt(c0 + c1 * s * s)
        closed = [f, c1 * s / f, c0 * c1 / f ** 3, -3.0 * c0 * c1 * c1 * s / f ** 5]
        if order <= 3:
            return closed[:order + 1]
        (sj,) = jets.JetSpace.get(1, order).variables(np.asarray(s)[None, ...])
        jet = jets.sqrt(c0 + c1 * sj * sj)
        return [jet.c[k] * math.factorial(k) for k in range(order + 1)]

    def scaled(self, b):
        return QuadraticRoot(self.c0, self.c1 * b * b)

    def to_config(self):
        return {"family": self.family, "params": {"c0": self.c0, "c1": self.c1}}


@dataclass(frozen=True)
class RiccatiPhi(PhiSpec):
    """The q = 1 family phi = c2 exp(int_{s_ref}^s psi).

    ``c2`` is the value at ``s_ref``.  The domain is the singularity-free
    component of (-b, b) that contains ``s_ref``.
    """

    c0: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    b: float = 1.0
    s_ref: float = 0.0
    family = "riccati"

    def __post_init__(self):
        self.params  # validates c0, c1, c2, b

    @property
    def params(self):
        return _ric.RiccatiParams(self.c0, self.c1, self.c2, self.b)

    @property
    def domain(self):
        return _ric.component(self.params, self.s_ref)

    def _derivs(self, s, order):
        p = self.params
        flat = np.atleast_1d(s).ravel()
        logphi = np.array([
            math.log(p.c2) + _ric._log_phi_increment(p, self.s_ref, float(x), 1e-12)
            for x in flat])
        if order == 0:
            return [np.exp(logphi).reshape(np.shape(s))]
        # jet of log(phi) = log(phi(s)) + integral of the psi jet
        (sj,) = jets.JetSpace.get(1, order - 1).variables(flat[None, :])
        psi = _ric.psi_closed(p, sj)
        sp = jets.JetSpace.get(1, order)
        c = np.zeros((sp.size, flat.size))
        c[0] = logphi
        for k in range(1, order + 1):
            c[k] = psi.c[k - 1] / k
        phi = jets.exp(jets.Jet(sp, c))
        return [(phi.c[k] * math.factorial(k)).reshape(np.shape(s))
                for k in range(order + 1)]

    def psi(self, s):
        return _ric.psi_closed(self.params, s)

    def scaled(self, b):
        return RiccatiPhi(self.c0, self.c1, self.c2, self.b / b, self.s_ref / b)

    def to_config(self):
        return {"family": self.family,
                "params": {"c0": self.c0, "c1": self.c1, "c2": self.c2,
                           "b": self.b, "s_ref": self.s_ref}}


@dataclass(frozen=True, eq=False)
class TablePhi(PhiSpec):
    """Cubic spline through tabulated (s, phi) knots.

    Derivatives come from evaluating the local spline polynomial on
    univariate jets, not from the spline's own derivative routines.
    """

    knots: tuple = ()
    values: tuple = ()
    family = "table"

    def __post_init__(self):
        k = tuple(float(x) for x in self.knots)
        v = tuple(float(x) for x in self.values)
        if len(k) < 4 or len(k) != len(v) or any(b <= a for a, b in zip(k, k[1:])):
            raise ValueError("table needs >= 4 strictly increasing knots with values")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_spline", CubicSpline(k, v))

    @property
    def domain(self):
        return (self.knots[0], self.knots[-1])

    def _derivs(self, s, order):
        sp = self._spline
        flat = np.atleast_1d(s).ravel()
        piece = np.clip(np.searchsorted(sp.x, flat, side="right") - 1, 0, len(sp.x) - 2)
        (sj,) = jets.JetSpace.get(1, order).variables(flat[None, :])
        dx = sj - sp.x[piece]
        coef = sp.c[:, piece]  # highest power first
        acc = jets.JetSpace.get(1, order).constant(coef[0])
        for row in coef[1:]:
            acc = acc * dx + row
        return [(acc.c[k] * math.factorial(k)).reshape(np.shape(s))
                for k in range(order + 1)]

    def scaled(self, b):
        return TablePhi(tuple(x / b for x in self.knots), self.values)

    def to_config(self):
        return {"family": self.family,
                "params": {"knots": list(self.knots), "values": list(self.values)}}

    def __eq__(self, other):
        return (isinstance(other, TablePhi) and self.knots == other.knots
                and self.values == other.values)

    def __hash__(self):
        return hash((self.knots, self.values))


_FAMILIES = {
    "constant-one": (ConstantOne, ()),
    "randers": (Randers, ("eps",)),
    "polynomial": (Polynomial, ("coeffs",)),
    "quadratic-root": (QuadraticRoot, ("c0", "c1")),
    "riccati": (RiccatiPhi, ("c0", "c1", "c2", "b", "s_ref")),
    "table": (TablePhi, ("knots", "values")),
}


def phi_from_config(cfg: dict) -> PhiSpec:
    """Build a profile from ``{"family": name, "params": {...}}``."""
    try:
        family = cfg["family"]
    except (KeyError, TypeError):
        raise ConfigError("phi: missing 'family'") from None
    if family not in _FAMILIES:
        raise ConfigError(f"phi.family: unknown family {family!r}; "
                          f"expected one of {sorted(_FAMILIES)}")
    cls, allowed = _FAMILIES[family]
    params = dict(cfg.get("params", {}))
    extra = set(params) - set(allowed)
    if extra:
        raise ConfigError(f"phi.params: unexpected keys {sorted(extra)} for {family}")
    for key in ("coeffs", "knots", "values"):
        if key in params:
            params[key] = tuple(params[key])
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"phi.params: {exc}") from None
