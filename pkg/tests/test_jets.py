import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abfinsler import jets

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_univariate_derivatives_match_calculus():
    (x,) = jets.JetSpace.get(1, 4).variables([0.7])
    f = jets.exp(x) * jets.sqrt(x)
    x0 = 0.7
    # d^k/dx^k of e^x sqrt(x), by Leibniz with (sqrt)^(j) = c_j x^(1/2-j)
    coef = [1.0, 0.5, -0.25, 0.375, -0.9375]
    for k in range(5):
        ref = sum(math.comb(k, j) * math.exp(x0) * coef[j] * x0 ** (0.5 - j) for j in range(k + 1))
        assert f.derivative(k).reshape(()) == pytest.approx(ref, rel=1e-13)


def test_gradient_and_hessian_of_polynomial():
    x, y = jets.JetSpace.get(2, 2).variables([1.5, -0.5])
    f = x * x * y + 3.0 * y * y
    assert f.gradient().tolist() == pytest.approx([2 * 1.5 * -0.5, 1.5 ** 2 + 6 * -0.5])
    np.testing.assert_allclose(f.hessian(), [[-1.0, 3.0], [3.0, 6.0]], rtol=1e-14)


def test_third_derivative_tensor_is_symmetric():
    v = jets.JetSpace.get(3, 3).variables([0.3, -1.2, 0.8])
    f = jets.exp(v[0] * v[1]) * jets.log(v[2] * v[2] + 1.0)
    T = f.derivative(3)
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(T, T.transpose(perm), atol=1e-14)


def test_diff_lowers_order_and_is_exact():
    x, y = jets.JetSpace.get(2, 3).variables([0.4, 1.1])
    f = x * x * x * y
    fx = f.diff(0)
    assert fx.order == 2
    assert float(fx.value) == pytest.approx(3 * 0.4 ** 2 * 1.1)
    np.testing.assert_allclose(fx.hessian(), [[6 * 1.1, 6 * 0.4], [6 * 0.4, 0.0]], rtol=1e-14)


def test_batched_jets_broadcast_against_unbatched():
    sp = jets.JetSpace.get(1, 2)
    (xb,) = sp.variables(np.array([[0.5, 1.0, 2.0]]))
    c = sp.constant(3.0)
    out = xb * c + xb * xb
    assert out.value.tolist() == pytest.approx([1.75, 4.0, 10.0])
    assert out.gradient()[0].tolist() == pytest.approx([4.0, 5.0, 7.0])


def test_solve_linear_system_of_jets():
    a, b = jets.JetSpace.get(2, 1).variables([2.0, 1.0])
    m = [[a, b * 0.5], [b * 0.5, a + 1.0]]
    z = jets.solve(m, [a * 1.0 + 0.0, b * 1.0 + 0.0])
    # value check against numpy
    M = np.array([[2.0, 0.5], [0.5, 3.0]])
    ref = np.linalg.solve(M, [2.0, 1.0])
    assert [float(zi.value) for zi in z] == pytest.approx(ref.tolist())
    # derivative check by finite differences in a
    h = 1e-6
    Mp = np.array([[2.0 + h, 0.5], [0.5, 3.0 + h]])
    Mm = np.array([[2.0 - h, 0.5], [0.5, 3.0 - h]])
    fd = (np.linalg.solve(Mp, [2.0 + h, 1.0]) - np.linalg.solve(Mm, [2.0 - h, 1.0])) / (2 * h)
    assert [float(zi.gradient()[0]) for zi in z] == pytest.approx(fd.tolist(), rel=1e-7)


@given(finite, finite, finite)
def test_product_rule(x0, a, b):
    (x,) = jets.JetSpace.get(1, 3).variables([x0])
    f = (x * a + 1.0) * (x * x * b - 2.0)
    g = np.polynomial.Polynomial([1.0, a]) * np.polynomial.Polynomial([-2.0, 0.0, b])
    for k in range(4):
        assert f.derivative(k).item() == pytest.approx(g.deriv(k)(x0), abs=1e-12, rel=1e-12)


@given(st.floats(0.1, 5.0))
def test_reciprocal_and_power_agree(x0):
    (x,) = jets.JetSpace.get(1, 3).variables([x0])
    r1 = jets.reciprocal(x)
    r2 = jets.power(x, -1.0)
    assert np.allclose(r1.c, r2.c, rtol=1e-12, atol=1e-14)
    one = r1 * x
    assert np.allclose(one.c.ravel(), [1.0, 0.0, 0.0, 0.0], atol=1e-13)


def test_mixed_orders_truncate_to_common_order():
    (x3,) = jets.JetSpace.get(1, 3).variables([1.0])
    (x1,) = jets.JetSpace.get(1, 1).variables([1.0])
    out = x3 * x1
    assert out.order == 1


def test_derivative_beyond_order_raises():
    (x,) = jets.JetSpace.get(1, 2).variables([1.0])
    with pytest.raises(ValueError):
        x.derivative(3)
