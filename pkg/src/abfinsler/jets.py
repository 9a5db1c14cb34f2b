"""Truncated multivariate Taylor arithmetic ("jets") for forward-mode AD.

A :class:`Jet` holds the Taylor coefficients of a function of ``nvars``
variables around a base point, truncated at total degree ``order``.  With
``order=1`` this is ordinary dual-number arithmetic; ``order=2`` and
``order=3`` reproduce hyper-dual numbers.  One evaluation of an expression
on jets therefore yields every partial derivative up to ``order`` at once.

Coefficients are stored with the monomial axis first, so any trailing
shape acts as a batch dimension::

    >>> sp = JetSpace.get(2, 2)
    >>> x, y = sp.variables([1.0, 2.0])
    >>> f = x * x * y
    >>> float(f.value), f.gradient().tolist()
    (2.0, [4.0, 1.0])
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np

__all__ = [
    "Jet",
    "JetSpace",
    "compose",
    "sqrt",
    "exp",
    "log",
    "reciprocal",
    "power",
    "solve",
]


def _monomials(nvars, order):
    out = []
    for deg in range(order + 1):
        block = [m for m in itertools.product(range(deg + 1), repeat=nvars)
                 if sum(m) == deg]
        # descending lexicographic: e_0 comes before e_1 among degree-1 terms
        block.sort(reverse=True)
        out.extend(block)
    return out


class JetSpace:
    """Monomial bookkeeping shared by all jets with the same (nvars, order).

    Monomials are sorted by total degree, so the coefficient vector of a
    lower-order space is a prefix of the higher-order one.
    """

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError(f"invalid jet space ({nvars}, {order})")
        self.nvars = nvars
        self.order = order
        self.monomials = _monomials(nvars, order)
        self.size = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.degree = np.array([sum(m) for m in self.monomials])
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in self.monomials],
            dtype=float)

        ii, jj, kk = [], [], []
        for i, mi in enumerate(self.monomials):
            for j, mj in enumerate(self.monomials):
                if sum(mi) + sum(mj) <= order:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(a + b for a, b in zip(mi, mj))])
        perm = np.argsort(kk, kind="stable")
        self._mul_i = np.asarray(ii)[perm]
        self._mul_j = np.asarray(jj)[perm]
        kk = np.asarray(kk)[perm]
        self._mul_starts = np.searchsorted(kk, np.arange(self.size))

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def get(nvars: int, order: int) -> "JetSpace":
        return JetSpace(nvars, order)

    def constant(self, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((self.size,) + value.shape)
        c[0] = value
        return Jet(self, c)

    def variables(self, point) -> list["Jet"]:
        """Seed jets for the coordinate functions around ``point``.

        ``point`` has shape ``(nvars, *batch)``.
        """
        point = np.asarray(point, dtype=float)
        if point.shape[0] != self.nvars:
            raise ValueError(
                f"expected {self.nvars} coordinates, got {point.shape[0]}")
        out = []
        for i in range(self.nvars):
            c = np.zeros((self.size,) + point.shape[1:])
            c[0] = point[i]
            if self.order >= 1:
                c[1 + i] = 1.0
            out.append(Jet(self, c))
        return out

    @functools.lru_cache(maxsize=None)
    def _diff_table(self, var):
        lower = JetSpace.get(self.nvars, self.order - 1)
        src = np.empty(lower.size, dtype=int)
        mult = np.empty(lower.size)
        for k, m in enumerate(lower.monomials):
            up = list(m)
            up[var] += 1
            src[k] = self.index[tuple(up)]
            mult[k] = up[var]
        return lower, src, mult

    @functools.lru_cache(maxsize=None)
    def _tensor_table(self, k):
        shape = (self.nvars,) * k
        idx = np.empty(shape, dtype=int)
        for tup in itertools.product(range(self.nvars), repeat=k):
            m = [0] * self.nvars
            for t in tup:
                m[t] += 1
            idx[tup] = self.index[tuple(m)]
        return idx

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"


class Jet:
    """Truncated Taylor expansion; supports ``+ - * /`` and ``**`` (int)."""

    __slots__ = ("space", "c")
    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, space: JetSpace, coeffs):
        self.space = space
        self.c = coeffs

    # -- accessors --------------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    @property
    def order(self):
        return self.space.order

    @property
    def batch_shape(self):
        return self.c.shape[1:]

    def gradient(self):
        """First partials, shape ``(nvars, *batch)``."""
        n = self.space.nvars
        return self.c[1:n + 1].copy()

    def derivative(self, k: int):
        """Full symmetric tensor of k-th partials, shape ``(n,)*k + batch``."""
        if k > self.space.order:
            raise ValueError(f"order {k} exceeds jet order {self.space.order}")
        if k == 0:
            return self.c[0].copy()
        idx = self.space._tensor_table(k)
        fac = self.space.factorial[idx]
        vals = self.c[idx]
        return vals * fac.reshape(fac.shape + (1,) * (vals.ndim - fac.ndim))

    def hessian(self):
        return self.derivative(2)

    def diff(self, var: int) -> "Jet":
        """Partial derivative in ``var``; exact, one order lower."""
        lower, src, mult = self.space._diff_table(var)
        c = self.c[src] * mult.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(lower, c)

    def truncate(self, order: int) -> "Jet":
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise ValueError("cannot raise jet order")
        sp = JetSpace.get(self.space.nvars, order)
        return Jet(sp, self.c[:sp.size])

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if not isinstance(other, Jet):
            return self, None
        a, b = self, other
        if a.space is not b.space:
            if a.space.nvars != b.space.nvars:
                raise ValueError("jets over different variable sets")
            k = min(a.space.order, b.space.order)
            a, b = a.truncate(k), b.truncate(k)
        # unbatched jets broadcast against batched ones
        if a.c.ndim < b.c.ndim:
            a = Jet(a.space, a.c.reshape(a.c.shape + (1,) * (b.c.ndim - a.c.ndim)))
        elif b.c.ndim < a.c.ndim:
            b = Jet(b.space, b.c.reshape(b.c.shape + (1,) * (a.c.ndim - b.c.ndim)))
        return a, b

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is None:
            c = a.c.copy()
            c[0] = c[0] + other
            return Jet(a.space, c)
        return Jet(a.space, a.c + b.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            other = np.asarray(other, dtype=float)
            return Jet(a.space, a.c * other)
        sp = a.space
        prod = a.c[sp._mul_i] * b.c[sp._mul_j]
        return Jet(sp, np.add.reduceat(prod, sp._mul_starts, axis=0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.space, self.c / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)) and k >= 0:
            out = self.space.constant(np.ones(self.batch_shape))
            base = self
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return power(self, float(k))

    def __repr__(self):
        return (f"Jet(nvars={self.space.nvars}, order={self.space.order}, "
                f"value={self.c[0]!r})")


def compose(x: Jet, stack) -> Jet:
    """Apply a univariate function given its derivatives at ``x.value``.

    ``stack[k]`` is the k-th derivative at the base point (shape = batch);
    entries beyond ``x.order`` are ignored.
    """
    K = x.space.order
    stack = [np.asarray(d, dtype=float) for d in stack]
    if len(stack) < K + 1:
        raise ValueError(f"need {K + 1} derivatives, got {len(stack)}")
    delta = Jet(x.space, x.c.copy())
    delta.c[0] = 0.0
    out = x.space.constant(stack[K] / math.factorial(K) * np.ones(x.batch_shape))
    for k in range(K - 1, -1, -1):
        out = out * delta + stack[k] / math.factorial(k)
    return out


def _power_stack(x0, p, K):
    out = []
    coef = 1.0
    for k in range(K + 1):
        out.append(coef * x0 ** (p - k))
        coef *= (p - k)
    return out


def power(x, p: float):
    if not isinstance(x, Jet):
        return np.asarray(x, dtype=float) ** p
    return compose(x, _power_stack(x.value, p, x.order))


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return compose(x, _power_stack(x.value, 0.5, x.order))


def reciprocal(x):
    if not isinstance(x, Jet):
        return 1.0 / np.asarray(x, dtype=float)
    x0 = x.value
    return compose(x, [(-1) ** k * math.factorial(k) * x0 ** (-k - 1)
                       for k in range(x.order + 1)])


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return compose(x, [e] * (x.order + 1))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    x0 = x.value
    stack = [np.log(x0)] + [(-1) ** (k - 1) * math.factorial(k - 1) * x0 ** (-k)
                            for k in range(1, x.order + 1)]
    return compose(x, stack)


def solve(a, rhs):
    """Solve ``a @ z = rhs`` where entries may be jets.

    ``a`` is a nested list (n x n), ``rhs`` a list of length n.  Plain
    Gaussian elimination without pivoting; intended for the small symmetric
    positive-definite systems that arise from fundamental tensors.
    """
    n = len(rhs)
    a = [list(row) for row in a]
    r = list(rhs)
    for k in range(n):
        inv = reciprocal(a[k][k])
        for i in range(k + 1, n):
            f = a[i][k] * inv
            for j in range(k + 1, n):
                a[i][j] = a[i][j] - f * a[k][j]
            r[i] = r[i] - f * r[k]
        a[k] = [None] * k + [a[k][k]] + [a[k][j] * inv for j in range(k + 1, n)]
        r[k] = r[k] * inv
    z = [None] * n
    for k in range(n - 1, -1, -1):
        acc = r[k]
        for j in range(k + 1, n):
            acc = acc - a[k][j] * z[j]
        z[k] = acc
    return z
