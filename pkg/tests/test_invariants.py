import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abfinsler.errors import DimensionError
from abfinsler.invariants import (angular_metric, cartan_form, cartan_tensor,
                                  cartan_tensor_reformulated, cubic_norm_closed, det_closed,
                                  fundamental_tensor_closed, invariant_bundle, uvq_sweep_csv,
                                  uvwq, y_sharp)
from abfinsler.indicatrix import cubic_and_tchebychev, tangent_frame
from abfinsler.norm import (NormSpec, cartan_tensor_oracle, eval_norm,
                            fundamental_tensor_oracle, normalize_beta)
from abfinsler.phi import ConstantOne, QuadraticRoot, Randers, RiccatiPhi

from families import FAMILIES, random_norm, random_y

seeds = st.integers(0, 2 ** 32 - 1)


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def _with_s(n, b, s):
    """Unit y whose s equals the requested value for beta = b e_1."""
    y = np.zeros(n)
    y[0], y[1] = s / b, np.sqrt(1 - (s / b) ** 2)
    return y


def test_angular_metric_examples(rng):
    spec = NormSpec(3, (0, 0, 0), ConstantOne())
    np.testing.assert_allclose(angular_metric(spec, [1.0, 0, 0]), np.diag([0.0, 1, 1]), atol=1e-15)
    spec = NormSpec(3, (0.5, 0, 0), Randers())
    for _ in range(5):
        y = rng.standard_normal(3)
        g = fundamental_tensor_oracle(spec, y)
        dF = g @ y / eval_norm(spec, y)
        np.testing.assert_allclose(angular_metric(spec, y), g - np.outer(dF, dF), atol=1e-11)
        assert np.abs(angular_metric(spec, y) @ y).max() < 1e-13 * np.linalg.norm(y) + 1e-15


def test_det_examples(rng):
    spec = NormSpec(3, (0.5, 0, 0), Randers())
    assert det_closed(spec, _with_s(3, 0.5, 0.2)) == pytest.approx(2.0736, rel=1e-12)
    spec = NormSpec(3, (1.0, 0, 0), QuadraticRoot(1.0, 0.25))
    assert det_closed(spec, _with_s(3, 1.0, 0.0)) == pytest.approx(1.25, rel=1e-12)
    assert det_closed(NormSpec(4, (0.3, 0, 0, 0), ConstantOne()), rng.standard_normal(4)) == 1.0


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("family", FAMILIES)
def test_det_matches_numerical_determinant(family, n, rng):
    spec = random_norm(family, n, rng)
    for _ in range(10):
        y = random_y(spec, rng)
        ref = np.linalg.det(fundamental_tensor_oracle(spec, y))
        assert det_closed(spec, y) == pytest.approx(ref, rel=1e-9)


def test_uvwq_examples():
    spec = NormSpec(4, (0.5, 0, 0, 0), Randers())
    for s in (-0.4, 0.0, 0.3):
        u, v, w, q = uvwq(spec, s)
        assert (u, v, w, q) == pytest.approx((2.5, 0.5, 0.0, 2.0), abs=1e-12)
    u, v, w, q = uvwq(NormSpec(3, (0.8, 0, 0), QuadraticRoot(1.3, 0.4)), 0.3)
    assert max(abs(u), abs(v), abs(w)) < 1e-12 and q is None
    _, v, _, _ = uvwq(NormSpec(4, (1.0, 0, 0, 0), RiccatiPhi(2.0, 1.0, 1.0, 1.0)), 0.0)
    assert abs(v) > 0.1
    with pytest.raises(DimensionError):
        uvwq(NormSpec(2, (0.5, 0), Randers()), 0.1)


def test_cartan_zero_for_euclidean_and_quadratic_root(rng):
    for spec in (NormSpec(3, (0.2, 0.1, 0), ConstantOne()),
                 NormSpec(4, (0.3, -0.2, 0.1, 0.5), QuadraticRoot(0.9, 0.5))):
        for _ in range(5):
            y = rng.standard_normal(spec.n)
            assert np.abs(cartan_tensor(spec, y)).max() < 1e-12
            assert cubic_norm_closed(spec, y) < 1e-12
            cf = cartan_form(spec, y)
            assert np.abs(cf.route1).max() < 1e-12 and np.abs(cf.route2).max() < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_closed_forms_match_oracle(family, rng):
    for _ in range(15):
        spec = random_norm(family, int(rng.integers(3, 6)), rng)
        y = random_y(spec, rng)
        g = fundamental_tensor_oracle(spec, y)
        scale = np.abs(g).max()
        assert np.abs(fundamental_tensor_closed(spec, y) - g).max() < 1e-10 * scale
        A = cartan_tensor_oracle(spec, y)
        assert np.abs(cartan_tensor(spec, y) - A).max() < 1e-10 * scale


@given(seeds)
def test_symmetry_and_euler_annulment(seed):
    rng = _rng(seed)
    spec = random_norm(FAMILIES[seed % 3], 3 + seed % 3, rng)
    y = random_y(spec, rng)
    A = cartan_tensor(spec, y)
    for p in itertools.permutations(range(3)):
        assert np.abs(A - A.transpose(p)).max() < 1e-12
    r = np.linalg.norm(y)
    tol = 1e-12 * max(1.0, r) * max(1.0, np.abs(A).max())
    assert np.abs(A @ y).max() < tol
    assert np.abs(angular_metric(spec, y) @ y).max() < 1e-12 * max(1.0, r)
    assert abs(cartan_form(spec, y).route2 @ y) < 1e-12 * max(1.0, r)
    assert abs(y_sharp(spec, y) @ y) < 1e-13 * max(1.0, r)
    assert det_closed(spec, y) > 0


@pytest.mark.parametrize("family", FAMILIES)
def test_cartan_form_routes_agree(family, rng):
    for _ in range(50):
        spec = random_norm(family, int(rng.integers(3, 6)), rng)
        y = random_y(spec, rng)
        assert cartan_form(spec, y).deviation < 1e-10


@given(seeds)
def test_reformulation_identity(seed):
    rng = _rng(seed)
    spec = random_norm(("randers", "riccati")[seed % 2], 3 + seed % 3, rng)
    y = random_y(spec, rng, margin=0.05)
    _, s = y / np.linalg.norm(y), float(y @ spec.beta) / np.linalg.norm(y)
    u, v, _, q = uvwq(spec, s)
    if abs(v) <= 1e-8 or abs(u) < 1e-8:
        return
    A = cartan_tensor(spec, y)
    np.testing.assert_allclose(cartan_tensor_reformulated(spec, y), A,
                               atol=1e-9 * max(1.0, np.abs(A).max()))


@pytest.mark.parametrize("family", FAMILIES)
def test_normalization_invariance(family, rng):
    spec = random_norm(family, 4, rng)
    nb = normalize_beta(spec)
    for _ in range(10):
        y = random_y(spec, rng)
        b1, b2 = invariant_bundle(spec, y), invariant_bundle(nb, y)
        for key in ("g", "A", "eta", "h_angular"):
            np.testing.assert_allclose(getattr(b2, key), getattr(b1, key), atol=1e-11)
        assert b2.det_g == pytest.approx(b1.det_g, rel=1e-11)
        # u, v, w scale with b since Y does; q and u Y do not
        assert b2.u * b2.y_sharp == pytest.approx(b1.u * b1.y_sharp, abs=1e-11)
        if b1.q is not None:
            assert b2.q == pytest.approx(b1.q, rel=1e-10, abs=1e-11)


@given(seeds, st.floats(0.01, 100.0))
def test_scale_invariance(seed, lam):
    rng = _rng(seed)
    spec = random_norm(FAMILIES[seed % 3], 4, rng)
    y = random_y(spec, rng)
    b1, b2 = invariant_bundle(spec, y), invariant_bundle(spec, lam * y)
    np.testing.assert_allclose(b2.g, b1.g, atol=1e-12 * np.abs(b1.g).max())
    if b1.q is None:
        assert b2.q is None
    else:
        assert b2.q == pytest.approx(b1.q, rel=1e-12, abs=1e-12)


def test_randers_characteristic_values():
    for n in (3, 4, 5):
        spec = NormSpec(n, (0.6,) + (0.0,) * (n - 1), Randers())
        for s in np.linspace(-0.59, 0.59, 7):
            u, v, _, q = uvwq(spec, s)
            assert (u, v, q) == pytest.approx(((n + 1) / 2, 0.5, 2.0), abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_cubic_norm_matches_frame_sum(n, rng):
    spec = random_norm("riccati", n, rng)
    for _ in range(5):
        y = random_y(spec, rng, margin=0.05)
        C, _, _ = cubic_and_tchebychev(spec, tangent_frame(spec, y))
        assert cubic_norm_closed(spec, y) == pytest.approx(float(np.sum(C * C)), rel=1e-8, abs=1e-12)


def test_cubic_norm_randers_example():
    spec = NormSpec(4, (0.5, 0, 0, 0), Randers())
    y = _with_s(4, 0.5, 0.2)
    y = y / eval_norm(spec, y)
    C, _, _ = cubic_and_tchebychev(spec, tangent_frame(spec, y))
    closed = cubic_norm_closed(spec, y)
    assert closed == pytest.approx(float(np.sum(C * C)), rel=1e-10)
    # the same bracket scaled by (n-1)^2 does not match the frame sum
    assert closed * 9 != pytest.approx(float(np.sum(C * C)), rel=1e-3)


def test_bundle_serialization_and_sweep():
    spec = NormSpec(4, (0.5, 0, 0, 0), Randers())
    d = invariant_bundle(spec, [1.0, 0.5, 0, 0]).to_dict()
    assert len(d["g"]) == 16 and len(d["A"]) == 64
    assert set(d) >= {"g", "h", "A", "eta", "u", "v", "w", "q", "det_g"}
    text = uvq_sweep_csv(NormSpec(3, (0.5, 0, 0), QuadraticRoot(1.0, 0.5)), [0.0, 0.25])
    lines = text.split("\r\n")
    assert lines[0] == "s,u,v,q"
    assert lines[1].endswith(",")  # q undefined
