import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abfinsler.errors import ConfigError, DegeneracyError, DomainError
from abfinsler.norm import eval_norm
from abfinsler.transport import (CurveSpec, MetricSpec, PolyField, berwald_detector,
                                 christoffel_spray, example_metric, metric_eval,
                                 metric_tensors, pointwise_norm, preservation_test,
                                 spray_coeffs, spray_jacobian, spray_jet, transport,
                                 transport_batch, transport_jacobian)
from abfinsler.invariants import cartan_tensor, fundamental_tensor_closed

X0 = np.array([0.2, -0.1, 0.4])
ARC = CurveSpec("polynomial", np.array([[0.1, 0.0, 0.2], [0.5, 0.3, -0.2], [0.2, -0.4, 0.1]]))


def _riccati_metric(n=3):
    # riccati profile with x-dependent c1; b is taken pointwise from beta
    e = np.zeros(n)
    e[0] = 1.0
    x1 = [1] + [0] * (n - 1)
    c1 = PolyField.from_terms([{"coef": 1.0, "powers": [0] * n},
                               {"coef": 0.1, "powers": x1}], n, ())
    return MetricSpec(n, PolyField.constant(np.eye(n), n),
                      PolyField.constant(0.6 * e, n), "riccati",
                      (("c0", PolyField.constant(2.0, n)), ("c1", c1),
                       ("c2", PolyField.constant(1.0, n))),
                      tuple((-1.0, 2.0) for _ in range(n)))


def test_metric_eval_examples(rng):
    n = 3
    flat = MetricSpec(n, PolyField.constant(np.eye(n), n), PolyField.constant(np.zeros(n), n),
                      "constant-one", ())
    y = rng.standard_normal(n)
    assert metric_eval(flat, X0, y) == pytest.approx(np.linalg.norm(y), rel=1e-15)
    m = example_metric("minkowski")
    spec = pointwise_norm(m, X0)
    for _ in range(5):
        y = rng.standard_normal(n)
        assert metric_eval(m, X0, y) == pytest.approx(eval_norm(spec, y), rel=1e-13)
        assert metric_eval(m, X0, 2.5 * y) == pytest.approx(2.5 * metric_eval(m, X0, y), rel=1e-13)


def test_pointwise_norm_orthonormalizes(rng):
    m = example_metric("riemannian")
    x = np.array([1.2, 0.0, 0.0])
    spec = pointwise_norm(m, x)
    L = np.linalg.cholesky(m.alpha_field(x))
    y = rng.standard_normal(3)
    assert metric_eval(m, x, y) == pytest.approx(eval_norm(spec, L.T @ y), rel=1e-13)


def test_metric_tensors_match_pointwise_closed_forms(rng):
    m = example_metric("minkowski")
    spec = pointwise_norm(m, X0)
    y = rng.standard_normal(3)
    F, g, A, eta = metric_tensors(m, X0, y)
    np.testing.assert_allclose(g, fundamental_tensor_closed(spec, y), atol=1e-12)
    np.testing.assert_allclose(A, cartan_tensor(spec, y), atol=1e-12)
    assert abs(eta @ y) < 1e-12


def test_box_and_domain_errors():
    m = example_metric("minkowski")
    with pytest.raises(DomainError):
        metric_eval(m, [5.0, 0, 0], [1.0, 0, 0])
    with pytest.raises(ValueError):
        MetricSpec(3, PolyField.constant(np.eye(3), 3), PolyField.constant(np.zeros(3), 3),
                   "riccati", (("c0", PolyField.constant(2.0, 3)),
                               ("c1", PolyField.constant(1.0, 3)),
                               ("b", PolyField.constant(1.0, 3))))


def test_spray_vanishes_for_x_independent_metric(rng):
    m = example_metric("minkowski")
    Y = rng.standard_normal((5, 3))
    assert np.abs(spray_coeffs(m, X0, Y)).max() < 1e-12
    assert np.abs(spray_jacobian(m, X0, Y)).max() < 1e-12


def test_riemannian_spray_matches_christoffel(rng):
    m = example_metric("riemannian")
    for _ in range(5):
        x = rng.uniform(-0.9, 1.9, 3)
        y = rng.standard_normal(3)
        np.testing.assert_allclose(spray_coeffs(m, x, y), christoffel_spray(m.alpha_field, x, y),
                                   atol=1e-6)


@pytest.mark.parametrize("name", ["riemannian", "randers-nonparallel"])
def test_spray_homogeneity_and_jacobian(name, rng):
    m = example_metric(name)
    y = rng.standard_normal(3)
    G = spray_coeffs(m, X0, y)
    np.testing.assert_allclose(spray_coeffs(m, X0, 2.0 * y), 4.0 * G, rtol=1e-8, atol=1e-14)
    N = spray_jacobian(m, X0, y)
    # Euler: N y = 2 G
    np.testing.assert_allclose(N @ y, 2.0 * G, atol=1e-9)
    h = 1e-3  # G carries x-stencil noise; a small y-step would amplify it
    fd = np.array([(spray_coeffs(m, X0, y + h * e) - spray_coeffs(m, X0, y - h * e)) / (2 * h)
                   for e in np.eye(3)]).T
    np.testing.assert_allclose(N, fd, atol=1e-5)


@pytest.mark.parametrize("name", ["riemannian", "randers-nonparallel"])
def test_jet_spray_agrees_with_fast_path(name, rng):
    m = example_metric(name)
    Y = rng.standard_normal((3, 3))
    G = spray_jet(m, X0, Y, order=1)
    fast = spray_coeffs(m, X0, Y)
    N = spray_jacobian(m, X0, Y)
    for i in range(3):
        np.testing.assert_allclose(np.asarray(G[i].value).ravel(), fast[:, i], atol=1e-9)
        np.testing.assert_allclose(G[i].gradient().T, N[:, i, :], atol=1e-8)


def test_curve_spec():
    c = CurveSpec.line([0.0, 0, 0], [1.0, 1, 0])
    np.testing.assert_allclose(c(0.5), [0.5, 0.5, 0])
    assert c.length() == pytest.approx(np.sqrt(2))
    pw = CurveSpec("piecewise-linear", np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0]]))
    assert pw.length() == pytest.approx(2.0)
    np.testing.assert_allclose(pw.derivative(0.25), [2, 0, 0])
    np.testing.assert_allclose(pw.pieces(), [0.0, 0.5, 1.0])
    assert ARC.length() > 0
    with pytest.raises(ValueError):
        CurveSpec("piecewise-linear", np.array([[0.0, 0, 0]]))
    with pytest.raises(ValueError):
        CurveSpec("spline", np.zeros((2, 3)))


def test_identity_transport_for_x_independent_metric():
    m = example_metric("minkowski")
    y0 = np.array([0.3, -1.0, 0.5])
    res = transport(m, ARC, y0, step=1e-2)
    assert np.abs(res.y - y0).max() < 1e-9
    np.testing.assert_allclose(transport_jacobian(m, ARC, y0, step=1e-2), np.eye(3), atol=1e-9)


@pytest.mark.parametrize("name", ["riemannian", "randers-nonparallel"])
def test_norm_preservation_and_radial_linearity(name):
    m = example_metric(name)
    y0 = np.array([0.4, 0.8, -0.3])
    res = transport(m, ARC, y0, step=1e-3)
    assert res.drift_per_length < 1e-8
    _, Ys, _, _, _ = transport_batch(m, ARC, 2.0 * y0, step=1e-3)
    assert np.abs(Ys[-1, 0] - 2.0 * res.y_end).max() < 1e-8
    assert res.steps == 1000 and res.method == "rk4"


def test_step_halving_is_fourth_order():
    m = example_metric("riemannian")
    y0 = np.array([0.4, 0.8, -0.3])
    d = [transport(m, ARC, y0, step=h).drift for h in (0.1, 0.05, 0.025)]
    for a, b in zip(d, d[1:]):
        assert 16 * 0.7 < a / b < 16 * 1.3


def test_adaptive_matches_rk4():
    m = example_metric("randers-nonparallel")
    y0 = np.array([0.4, 0.8, -0.3])
    a = transport(m, ARC, y0, step=1e-2)
    b = transport(m, ARC, y0, method="adaptive", rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(b.y_end, a.y_end, atol=1e-8)
    assert b.drift < 1e-9


def test_piecewise_curve_keeps_norm():
    m = example_metric("randers-nonparallel")
    pw = CurveSpec("piecewise-linear", np.array([[0.0, 0, 0], [1.0, 0.5, 0], [0.5, 1.0, 0.5]]))
    res = transport(m, pw, [1.0, 0.2, 0.0], step=1e-3)
    assert res.drift_per_length < 1e-8


def test_riemannian_transport_is_linear(rng):
    m = example_metric("riemannian")
    J = [transport_jacobian(m, ARC, rng.standard_normal(3), step=0.02) for _ in range(4)]
    for Jk in J[1:]:
        np.testing.assert_allclose(Jk, J[0], atol=1e-6)
    y0 = rng.standard_normal(3)
    res = transport(m, ARC, y0, step=0.02)
    np.testing.assert_allclose(transport_jacobian(m, ARC, y0, step=0.02) @ y0, res.y_end,
                               atol=1e-6)


def test_preservation_examples():
    rie = example_metric("riemannian")
    for which in ("g", "A", "eta"):
        assert preservation_test(rie, ARC, which, 2, step=0.01).max_deviation < 1e-6
    rnp = example_metric("randers-nonparallel")
    rep = preservation_test(rnp, ARC, "A", 2, step=1e-3)
    assert rep.max_deviation > 1e-3
    assert rep.f_drift < 1e-8
    assert rep.to_dict()["samples"] == 2
    with pytest.raises(ValueError):
        preservation_test(rie, ARC, "R")


def test_berwald_detector_examples():
    mk = berwald_detector(example_metric("minkowski"), X0, 4)
    assert mk.third_derivative_max < 1e-9 and mk.verdict()
    rie = berwald_detector(example_metric("riemannian"), X0, 4)
    assert rie.third_derivative_max < 1e-6 and rie.verdict()
    rnp = berwald_detector(example_metric("randers-nonparallel"), X0, 4)
    assert rnp.third_derivative_max > 10 * max(rie.third_derivative_max, 1e-9)
    assert not rnp.verdict()


def test_riccati_metric_transport():
    m = _riccati_metric()
    res = transport(m, ARC, [0.3, 1.0, 0.2], step=1e-2)
    assert res.drift_per_length < 1e-8
    assert pointwise_norm(m, X0).phi.b == pytest.approx(0.6)


def test_degenerate_start_aborts():
    m = example_metric("randers-nonparallel")
    with pytest.raises((DegeneracyError, DomainError)):
        transport(m, ARC, np.zeros(3), step=0.1)


@given(st.floats(0.1, 5.0))
def test_poly_field_evaluation(scale):
    f = PolyField.from_terms([{"coef": scale, "powers": [2, 0]},
                              {"coef": 1.0, "powers": [0, 1]}], 2, ())
    assert f(np.array([2.0, 3.0])) == pytest.approx(4 * scale + 3)
    assert not f.is_constant
    assert PolyField.constant(1.0, 2).is_constant


def test_metric_config_roundtrip():
    from abfinsler.config import parse_metric_spec
    m = example_metric("randers-nonparallel")
    m2 = parse_metric_spec(m.to_config())
    assert m2 == m
    with pytest.raises(ConfigError):
        parse_metric_spec({"n": 3, "beta": [0, 0, 0], "phi": {"family": "nope"}})
