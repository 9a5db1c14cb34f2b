"""Minkowski (alpha, beta)-norms in an alpha-orthonormal basis.

A :class:`NormSpec` is ``F(y) = |y| phi(s)`` with ``s = b_i y^i / |y|``.
Besides evaluation this module supplies the *oracle* side of every tensor
check: fundamental and Cartan tensors obtained by differentiating ``F^2/2``
with jets, plus a plain finite-difference Hessian as a noisier second route.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import DegenerateBetaError, DomainError, ValidityError
from .phi import PhiSpec

__all__ = [
    "NormSpec",
    "DerivStack",
    "ValidityReport",
    "eval_norm",
    "s_of",
    "phi_derivs",
    "check_validity",
    "normalize_beta",
    "half_square_jet",
    "fundamental_tensor_oracle",
    "cartan_tensor_oracle",
    "fundamental_tensor_fd",
]


@dataclass(frozen=True)
class NormSpec:
    n: int
    b_vec: tuple
    phi: PhiSpec

    def __post_init__(self):
        b = tuple(float(x) for x in np.ravel(self.b_vec))
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")
        if len(b) != self.n:
            raise ValueError(f"beta has {len(b)} components, expected {self.n}")
        object.__setattr__(self, "b_vec", b)

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.b_vec)

    @property
    def b(self) -> float:
        return float(np.linalg.norm(self.b_vec))

    @classmethod
    def from_config(cls, cfg: dict) -> "NormSpec":
        from .config import parse_norm_spec
        return parse_norm_spec(cfg)

    def to_config(self) -> dict:
        return {"n": self.n, "beta": list(self.b_vec), "phi": self.phi.to_config()}


class DerivStack(tuple):
    """(phi, phi', phi'', phi''') at one s."""

    __slots__ = ()

    def __new__(cls, phi, d1, d2, d3):
        return super().__new__(cls, (phi, d1, d2, d3))

    phi = property(lambda self: self[0])
    d1 = property(lambda self: self[1])
    d2 = property(lambda self: self[2])
    d3 = property(lambda self: self[3])


@dataclass
class ValidityReport:
    n: int
    b: float
    condition1_min: float
    condition2_min: float
    phi_min: float
    passed: bool
    reason: str = ""
    samples: int = 0
    excluded: int = 0
    s_worst: dict = field(default_factory=dict)

    @property
    def pass_(self):
        return self.passed

    def to_dict(self):
        return {
            "n": self.n, "b": self.b,
            "condition1_min": self.condition1_min,
            "condition2_min": self.condition2_min,
            "phi_min": self.phi_min,
            "pass": self.passed, "reason": self.reason,
            "samples": self.samples, "excluded": self.excluded,
            "s_worst": self.s_worst,
        }


def _as_vec(spec, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.n:
        raise ValueError(f"expected vectors of length {spec.n}, got shape {y.shape}")
    r = np.linalg.norm(y, axis=-1)
    if np.any(r == 0):
        raise DomainError("F is not differentiable at the zero vector")
    return y, r


def s_of(spec: NormSpec, y):
    """beta(y) / alpha(y); degree-0 homogeneous, in [-b, b]."""
    y, r = _as_vec(spec, y)
    return (y @ spec.beta) / r


def eval_norm(spec: NormSpec, y):
    """F(y) = |y| phi(s(y)); ``y`` may carry leading batch axes."""
    y, r = _as_vec(spec, y)
    s = (y @ spec.beta) / r
    return r * spec.phi(s)


def phi_derivs(phi: PhiSpec, s) -> DerivStack:
    d = phi.derivs(s, 3)
    if np.ndim(s) == 0:
        return DerivStack(*(float(x) for x in d))
    return DerivStack(*d)


def check_validity(spec: NormSpec, sample_count: int = 1025) -> ValidityReport:
    """Strong convexity test on a uniform grid over [-b, b] (endpoints included).

    For n = 2 only ``(phi - s phi') + (b^2 - s^2) phi'' > 0`` is required, for
    n >= 3 also ``phi - s phi' > 0``.  Positivity of phi is screened first.
    Grid points outside the open domain of phi are excluded and counted.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    b = spec.b
    s = np.linspace(-b, b, sample_count)
    lo, hi = spec.phi.domain
    inside = (s > lo) & (s < hi)
    excluded = int(np.count_nonzero(~inside))
    s = s[inside]
    if s.size == 0:
        return ValidityReport(spec.n, b, np.nan, np.nan, np.nan, False,
                              "no grid sample inside the domain of phi",
                              sample_count, excluded)
    f, d1, d2 = spec.phi.derivs(s, 2)
    c1 = f - s * d1
    c2 = c1 + (b * b - s * s) * d2
    worst = {"phi": float(s[np.argmin(f)]), "condition1": float(s[np.argmin(c1)]),
             "condition2": float(s[np.argmin(c2)])}
    rep = ValidityReport(spec.n, b, float(c1.min()), float(c2.min()), float(f.min()),
                         False, "", int(s.size), excluded, worst)
    if rep.phi_min <= 0:
        rep.reason = f"phi is not positive (phi({worst['phi']:.6g}) = {rep.phi_min:.6g})"
        return rep
    if spec.n == 2:
        rep.passed = rep.condition2_min > 0
    else:
        rep.passed = rep.condition1_min > 0 and rep.condition2_min > 0
    if not rep.passed:
        which = "condition2" if rep.condition2_min <= 0 else "condition1"
        rep.reason = f"{which} fails at s={worst[which]:.6g}"
    return rep


def normalize_beta(spec: NormSpec) -> NormSpec:
    """Rescale to |beta| = 1 with phi~(t) = phi(b t); F is unchanged."""
    b = spec.b
    if b == 0:
        raise DegenerateBetaError("beta vanishes; it cannot be normalized")
    return NormSpec(spec.n, tuple(x / b for x in spec.b_vec), spec.phi.scaled(b))


def half_square_jet(spec: NormSpec, y, order: int) -> "jets.Jet":
    """Jet of F^2 / 2 around ``y`` up to ``order``."""
    y, r = _as_vec(spec, y)
    if y.ndim != 1:
        raise ValueError("half_square_jet expects a single vector")
    sp = jets.JetSpace.get(spec.n, order)
    ys = sp.variables(y)
    r2 = ys[0] * ys[0]
    bl = ys[0] * spec.b_vec[0]
    for i in range(1, spec.n):
        r2 = r2 + ys[i] * ys[i]
        bl = bl + ys[i] * spec.b_vec[i]
    s = bl * jets.reciprocal(jets.sqrt(r2))
    ph = spec.phi.compose(s)
    return r2 * ph * ph * 0.5


def fundamental_tensor_oracle(spec: NormSpec, y) -> np.ndarray:
    """g_ij = (1/2) [F^2]_{y^i y^j} by second-order jets.

    Raises :class:`ValidityError` if the result is not positive definite.
    """
    g = half_square_jet(spec, y, 2).hessian()
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise ValidityError(f"fundamental tensor is not positive definite at y={list(y)}",
                            y=np.asarray(y)) from None
    return g


def cartan_tensor_oracle(spec: NormSpec, y) -> np.ndarray:
    """A_ijk = (F/2) d g_ij / d y^k by third-order jets."""
    jet = half_square_jet(spec, y, 3)
    F = np.sqrt(2.0 * jet.value)
    return 0.5 * F * jet.derivative(3)


def fundamental_tensor_fd(spec: NormSpec, y) -> np.ndarray:
    """Central-difference Hessian of F^2 / 2; accurate to roughly 1e-5."""
    y = np.asarray(y, dtype=float)
    h = np.cbrt(np.finfo(float).eps) * max(1.0, float(np.linalg.norm(y)))
    n = spec.n
    E = np.eye(n) * h

    def f(v):
        return 0.5 * float(eval_norm(spec, v)) ** 2

    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = (f(y + E[i] + E[j]) - f(y + E[i] - E[j])
                       - f(y - E[i] + E[j]) + f(y - E[i] - E[j])) / (4 * h * h)
            g[j, i] = g[i, j]
    return g

