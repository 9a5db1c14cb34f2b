"""Centroaffine data of the indicatrix {F = 1} in a g-orthonormal tangent frame.

On the indicatrix the affine metric is g restricted to ker dF, the cubic form
is ``C = -A`` and the Tchebychev form is ``T = -eta / (n - 1)``, both
restricted to the same frame.  Curvature is taken pointwise from the Gauss
equation

    R_bcmn = -(d_bm d_cn - d_bn d_cm) + sum_a (C_abm C_acn - C_abn C_acm).

Sign convention: the sectional curvature of the plane (e_b, e_c) is
``-R_bcbc``, so that the round sphere (C = 0) has curvature +1.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError, FinslerError
from .invariants import cartan_form, cartan_tensor, fundamental_tensor_closed
from .norm import NormSpec, eval_norm, s_of

__all__ = [
    "IndicatrixFrame",
    "CurvatureReport",
    "tangent_frame",
    "cubic_and_tchebychev",
    "gauss_curvature",
    "sectional_curvatures",
    "isotropic_form",
    "constancy_sweep",
    "make_rng",
]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator used for every random sample."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass
class IndicatrixFrame:
    y: np.ndarray
    frame: np.ndarray  # (n-1, n), rows are tangent vectors
    g: np.ndarray

    @property
    def dim(self):
        return self.frame.shape[0]


def tangent_frame(spec: NormSpec, y, tol: float = 1e-12) -> IndicatrixFrame:
    """g-orthonormal basis of ker dF at y / F(y).

    Gram-Schmidt in the g inner product over the coordinate axes, each
    first projected along y onto ker dF (that projection is g-orthogonal
    because g(y, .) = F dF).  Axes whose projection is too short are
    skipped, lowest index first.
    """
    y = np.asarray(y, dtype=float)
    F = float(eval_norm(spec, y))
    if abs(F - 1.0) > tol:
        y = y / F
    g = fundamental_tensor_closed(spec, y)
    dF = g @ y  # = F dF with F = 1
    basis = []
    for e in np.eye(spec.n):
        w = e - (dF @ e) * y
        for _ in range(2):  # re-orthogonalize once for stability
            for b in basis:
                w = w - (b @ g @ w) * b
        nw = float(np.sqrt(max(w @ g @ w, 0.0)))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == spec.n - 1:
            break
    if len(basis) < spec.n - 1:
        raise DegeneracyError(f"tangent projection lost rank at y={y.tolist()}")
    return IndicatrixFrame(y=y, frame=np.array(basis), g=g)


def cubic_and_tchebychev(spec: NormSpec, frame: IndicatrixFrame):
    """Return (C_abc, T_a, |T|^2) in the given frame."""
    E = frame.frame
    A = cartan_tensor(spec, frame.y)
    eta = cartan_form(spec, frame.y).route2
    C = -np.einsum("ijk,ai,bj,ck->abc", A, E, E, E)
    T = -(E @ eta) / (spec.n - 1)
    return C, T, float(T @ T)


def gauss_curvature(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    m = C.shape[0]
    if C.shape != (m, m, m) or m < 2:
        raise ValueError("C must be an m x m x m array with m >= 2")
    asym = max(np.abs(C - C.transpose(p)).max()
               for p in itertools.permutations(range(3)))
    if asym > 1e-9 * max(1.0, np.abs(C).max()):
        raise ValueError(f"cubic form is not totally symmetric (deviation {asym:.3g})")
    d = np.eye(m)
    base = np.einsum("bm,cn->bcmn", d, d) - np.einsum("bn,cm->bcmn", d, d)
    quad = np.einsum("abm,acn->bcmn", C, C) - np.einsum("abn,acm->bcmn", C, C)
    return -base + quad


def isotropic_form(m: int, k: float) -> np.ndarray:
    """-k (d_bm d_cn - d_bn d_cm): the tensor of constant sectional curvature k."""
    d = np.eye(m)
    return -k * (np.einsum("bm,cn->bcmn", d, d) - np.einsum("bn,cm->bcmn", d, d))


def sectional_curvatures(R) -> np.ndarray:
    """Sectional curvature of every coordinate plane (b < c) of the frame."""
    m = R.shape[0]
    return np.array([-R[b, c, b, c] for b in range(m) for c in range(b + 1, m)])


@dataclass
class CurvatureReport:
    n: int
    s: list = field(default_factory=list)
    tnorm2: list = field(default_factory=list)
    sectional_min: list = field(default_factory=list)
    sectional_max: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    isotropic_deviation: list = field(default_factory=list)
    skipped: int = 0
    warnings: list = field(default_factory=list)

    @property
    def mean(self):
        return float(np.mean(self.sectional_min + self.sectional_max)) if self.s else float("nan")

    @property
    def spread(self):
        if not self.s:
            return float("nan")
        return float(max(self.sectional_max) - min(self.sectional_min))

    @property
    def tnorm2_spread(self):
        return float(np.ptp(self.tnorm2)) if self.s else float("nan")

    def to_dict(self):
        return {
            "n": self.n, "samples": len(self.s), "skipped": self.skipped,
            "sectional_mean": self.mean, "sectional_spread": self.spread,
            "tnorm2_spread": self.tnorm2_spread,
            "max_isotropic_deviation": max(self.isotropic_deviation, default=float("nan")),
            "s": self.s, "tnorm2": self.tnorm2,
            "sectional_min": self.sectional_min, "sectional_max": self.sectional_max,
            "predicted_constant": self.predicted, "warnings": self.warnings,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["sample", "s", "tnorm2", "sectional_min", "sectional_max"])
        for i, row in enumerate(zip(self.s, self.tnorm2, self.sectional_min,
                                    self.sectional_max)):
            w.writerow([i] + [repr(float(x)) for x in row])
        return buf.getvalue()


def constancy_sweep(spec: NormSpec, sample_count: int = 64, seed: int = 0,
                    s_interval=None, max_attempts: int | None = None) -> CurvatureReport:
    """Sample the indicatrix and report |T|^2 and sectional curvatures.

    Directions are uniform on the Euclidean sphere, pushed to the
    indicatrix by y -> y / F(y).  Points with |Y|^2 <= 1e-10, points whose
    ``s`` is outside ``s_interval`` (or outside the domain of phi) and
    points where evaluation fails are skipped and counted.
    """
    n = spec.n
    rep = CurvatureReport(n=n)
    if n < 4:
        msg = "the constancy claim needs n >= 4; results for n = 3 are diagnostic only"
        warnings.warn(msg)
        rep.warnings.append(msg)
    if n < 3:
        raise DomainError("indicatrix curvature needs n >= 3")
    lo, hi = spec.phi.domain
    if s_interval is not None:
        lo, hi = max(lo, s_interval[0]), min(hi, s_interval[1])
    rng = make_rng(seed)
    max_attempts = max_attempts or 200 * sample_count
    attempts = 0
    while len(rep.s) < sample_count and attempts < max_attempts:
        attempts += 1
        y = rng.standard_normal(n)
        y /= np.linalg.norm(y)
        s = float(s_of(spec, y))
        Y = spec.beta - s * y
        if not (lo < s < hi) or float(Y @ Y) <= 1e-10:
            rep.skipped += 1
            continue
        try:
            fr = tangent_frame(spec, y)
            C, T, t2 = cubic_and_tchebychev(spec, fr)
            R = gauss_curvature(C)
        except (FinslerError, np.linalg.LinAlgError, ValueError):
            rep.skipped += 1
            continue
        K = sectional_curvatures(R)
        k = 1.0 - ((n - 1) ** 2 / n ** 2) * t2
        rep.s.append(s)
        rep.tnorm2.append(t2)
        rep.sectional_min.append(float(K.min()))
        rep.sectional_max.append(float(K.max()))
        rep.predicted.append(k)
        rep.isotropic_deviation.append(float(np.abs(R - isotropic_form(n - 1, k)).max()))
    return rep
