"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances."""

import time

import numpy as np
import pytest

from abfinsler import jets
from abfinsler.indicatrix import constancy_sweep, cubic_and_tchebychev, make_rng, tangent_frame
from abfinsler.invariants import (cartan_form, cartan_tensor, cubic_norm_closed, det_closed,
                                  fundamental_tensor_closed, uvwq)
from abfinsler.norm import (NormSpec, cartan_tensor_oracle, fundamental_tensor_oracle)
from abfinsler.phi import QuadraticRoot, Randers, RiccatiPhi
from abfinsler.riccati import (RiccatiParams, component, denominator, ode_residual,
                               ode_u_equals_nv_residual, phi_by_quadrature, psi_closed,
                               riccati_residual, singularities)
from abfinsler.transport import (CurveSpec, berwald_detector, example_metric,
                                 preservation_test, transport, transport_batch,
                                 transport_jacobian)

from families import FAMILIES, random_norm, random_y

SEED = 20240611
ARC = CurveSpec("polynomial", np.array([[0.1, 0.0, 0.2], [0.5, 0.3, -0.2], [0.2, -0.4, 0.1]]))


@pytest.fixture
def report(capsys):
    def emit(number, title, checks):
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name}={value}" for name, _, value in checks)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        failed = [name for name, good, _ in checks if not good]
        assert not failed, f"criterion {number} failed: {failed}"
    return emit


def test_criterion_01_oracle_equivalence(report):
    rng = make_rng(SEED)
    t0 = time.perf_counter()
    worst = {}
    for family in FAMILIES:
        err = 0.0
        for _ in range(100):
            spec = random_norm(family, int(rng.integers(3, 6)), rng)
            y = random_y(spec, rng)
            err = max(err, np.abs(fundamental_tensor_closed(spec, y)
                                  - fundamental_tensor_oracle(spec, y)).max(),
                      np.abs(cartan_tensor(spec, y) - cartan_tensor_oracle(spec, y)).max())
        worst[family] = err
    elapsed = time.perf_counter() - t0
    report(1, "closed-form g, A vs dual-number oracle",
           [(f"{f} max err", e < 1e-10, f"{e:.2e}") for f, e in worst.items()]
           + [("runtime", elapsed < 10.0, f"{elapsed:.2f}s")])


def test_criterion_02_determinant(report):
    rng = make_rng(SEED + 2)
    checks = []
    for n in (2, 3, 4, 5):
        err = 0.0
        for k in range(50):
            spec = random_norm(FAMILIES[k % 3], n, rng)
            y = random_y(spec, rng)
            ref = np.linalg.det(fundamental_tensor_oracle(spec, y))
            err = max(err, abs(det_closed(spec, y) - ref) / abs(ref))
        checks.append((f"n={n} rel err", err < 1e-9, f"{err:.2e}"))
    report(2, "determinant closed form", checks)


def test_criterion_03_cartan_form_routes(report):
    rng = make_rng(SEED + 3)
    checks = []
    for family in FAMILIES:
        dev = max(cartan_form(spec, random_y(spec, rng)).deviation
                  for spec in (random_norm(family, int(rng.integers(3, 6)), rng)
                               for _ in range(50)))
        checks.append((f"{family} max dev", dev < 1e-10, f"{dev:.2e}"))
    report(3, "Cartan form trace route vs u Y route", checks)


def test_criterion_04_randers_characteristic(report):
    err = 0.0
    for n in (3, 4, 5):
        spec = NormSpec(n, (0.5,) + (0.0,) * (n - 1), Randers())
        for s in np.linspace(-0.495, 0.495, 100):
            u, v, _, q = uvwq(spec, s)
            err = max(err, abs(v - 0.5), abs(u - (n + 1) / 2), abs(q - 2.0))
    report(4, "Randers u, v, q", [("max err", err < 1e-10, f"{err:.2e}")])


def test_criterion_05_quadratic_root(report):
    rng = make_rng(SEED + 5)
    uv, amax = 0.0, 0.0
    for _ in range(50):
        spec = random_norm("quadratic-root", int(rng.integers(3, 6)), rng)
        y = random_y(spec, rng)
        s = float(y @ spec.beta) / np.linalg.norm(y)
        u, v, _, _ = uvwq(spec, s)
        uv = max(uv, abs(u), abs(v))
        amax = max(amax, np.abs(cartan_tensor(spec, y)).max())
    report(5, "quadratic-root family is Riemannian",
           [("max |u|,|v|", uv < 1e-12, f"{uv:.2e}"), ("max |A|", amax < 1e-12, f"{amax:.2e}")])


def _riccati_draws(count=20):
    rng = make_rng(SEED + 6)
    out = []
    while len(out) < count:
        c0 = float(rng.uniform(0.2, 3.0))
        c1 = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0))
        out.append(RiccatiParams(c0, c1))
    return out


def test_criterion_06_riccati_appendix(report):
    grid = np.linspace(-0.995, 0.995, 200)
    res_max, worst, rel = 0.0, None, 0.0
    chain = 0.0
    for p in _riccati_draws():
        for s in grid:
            if abs(float(denominator(p, s))) < p.d_eps:
                continue
            r = abs(riccati_residual(p, s))
            if r > res_max:
                res_max, worst = r, (round(p.c0, 4), round(p.c1, 4), float(s))
            # size of the terms being cancelled, for the float64 floor
            (x,) = jets.JetSpace.get(1, 1).variables([s])
            psi = psi_closed(p, x)
            size = abs(psi.c[1].item()) + (1.0 + psi.value.item() ** 2) / (1.0 - s * s)
            rel = max(rel, r / size)
        # quadrature-built phi on the component of 0; the ODE is homogeneous of
        # degree 2 in phi, so the residual is measured relative to phi^2
        lo, hi = component(p, 0.0)
        for s in np.linspace(max(lo, -0.95) + 0.02, min(hi, 0.95) - 0.02, 15):
            f = phi_by_quadrature(p, 0.0, s)
            (x,) = jets.JetSpace.get(1, 1).variables([s])
            psi = psi_closed(p, x)
            ps, dps = psi.value.item(), psi.c[1].item()
            derivs = (f, f * ps, f * (dps + ps * ps))
            chain = max(chain, abs(ode_residual(s, derivs, p.c0)) / (f * f))
    unv = max(abs(ode_u_equals_nv_residual(RiccatiParams(2.0, 1.0), s, n))
              for n in (3, 4, 5) for s in np.linspace(-0.95, 0.95, 100))
    report(6, "Riccati family", [
        ("Riccati residual max", res_max < 1e-10,
         f"{res_max:.2e} at (c0, c1, s)={worst}; relative to term size {rel:.1e}"),
        ("ODE residual of quadrature phi", chain < 1e-8, f"{chain:.2e}"),
        ("max |u - n v|", unv < 1e-9, f"{unv:.2e}")])


def test_criterion_07_singularity_sets(report):
    half = singularities(RiccatiParams(1.0, 0.5)).values
    ok_half = len(half) == 1 and abs(half[0] + np.sqrt(0.5)) < 1e-8
    got = singularities(RiccatiParams(1.0, 0.3)).values
    stated = [np.sqrt(0.1), np.sqrt(0.9)]
    ok_03 = len(got) == 2 and all(abs(a - b) < 1e-8 for a, b in zip(got, stated))
    empties = [singularities(RiccatiParams(1.0, c1)).values for c1 in (0.51, -0.6, 1.0, -2.0, 5.0)]
    report(7, "singularity sets", [
        ("c1=0.5", ok_half, f"{[round(float(v), 10) for v in half]}"),
        ("c1=0.3 vs stated {0.3162278, 0.9486833}", ok_03, f"{[round(float(v), 10) for v in got]}"),
        ("|c1|>1/2 empty", all(e == [] for e in empties), f"{empties}")])


def test_criterion_08_isotropic_curvature(report):
    ric = constancy_sweep(NormSpec(4, (1.0, 0, 0, 0), RiccatiPhi(2.0, 1.0, 1.0, 1.0)), 50,
                          seed=SEED)
    ran = constancy_sweep(NormSpec(4, (0.5, 0, 0, 0), Randers()), 50, seed=SEED)
    iso = max(ric.isotropic_deviation)
    report(8, "q = 1 gives isotropic indicatrix curvature", [
        ("samples", len(ric.s) >= 50, len(ric.s)),
        ("riccati |T|^2 spread", ric.tnorm2_spread < 1e-6, f"{ric.tnorm2_spread:.2e}"),
        ("riccati isotropic deviation", iso < 1e-6, f"{iso:.2e}"),
        ("randers |T|^2 spread", ran.tnorm2_spread > 1e-2, f"{ran.tnorm2_spread:.2e}"),
        ("randers sectional spread", ran.spread > 1e-2, f"{ran.spread:.2e}")])


def test_criterion_09_cubic_norm_two_routes(report):
    rng = make_rng(SEED + 9)
    checks = []
    for n in (3, 4, 5):
        err = 0.0
        for k in range(50):
            spec = random_norm(FAMILIES[k % 3], n, rng)
            y = random_y(spec, rng, margin=0.05)
            C, _, _ = cubic_and_tchebychev(spec, tangent_frame(spec, y))
            frame = float(np.sum(C * C))
            err = max(err, abs(frame - cubic_norm_closed(spec, y)) / max(1.0, frame))
        checks.append((f"n={n} max err", err < 1e-8, f"{err:.2e}"))
    report(9, "|C|^2 frame sum vs closed form", checks)


def test_criterion_10_transport(report):
    y0 = np.array([0.4, 0.8, -0.3])
    drift = {}
    for name in ("riemannian", "randers-nonparallel"):
        drift[name] = transport(example_metric(name), ARC, y0, step=1e-3).drift_per_length
    rie = example_metric("riemannian")
    d = [transport(rie, ARC, y0, step=h).drift for h in (0.1, 0.05, 0.025)]
    ratios = [a / b for a, b in zip(d, d[1:])]
    rnp = example_metric("randers-nonparallel")
    res = transport(rnp, ARC, y0, step=1e-3)
    _, Ys, _, _, _ = transport_batch(rnp, ARC, 2.0 * y0, step=1e-3)
    radial = float(np.abs(Ys[-1, 0] - 2.0 * res.y_end).max())
    mk = example_metric("minkowski")
    ident = max(float(np.abs(transport(mk, ARC, y0, step=1e-3).y - y0).max()),
                float(np.abs(transport_jacobian(mk, ARC, y0, step=1e-2) - np.eye(3)).max()))
    report(10, "parallel transport", [
        *[(f"{k} drift/length", v < 1e-8, f"{v:.2e}") for k, v in drift.items()],
        ("halving ratios (steps 0.1, 0.05, 0.025)",
         all(16 * 0.7 <= r <= 16 * 1.3 for r in ratios), [round(r, 2) for r in ratios]),
        ("radial linearity", radial < 1e-8, f"{radial:.2e}"),
        ("x-independent identity", ident < 1e-9, f"{ident:.2e}")])


def test_criterion_11_detectors(report):
    x = np.array([0.2, -0.1, 0.4])
    out = {}
    for name in ("minkowski", "riemannian", "randers-nonparallel"):
        m = example_metric(name)
        third = berwald_detector(m, x, 8, SEED).third_derivative_max
        pres = preservation_test(m, ARC, "A", 2, SEED, step=1e-3)
        out[name] = (third, pres.max_deviation, pres.f_drift)
    floor_third = max(out["riemannian"][0], out["minkowski"][0], 1e-12)
    floor_a = max(out["riemannian"][1], out["minkowski"][1], 1e-12)
    rnp = out["randers-nonparallel"]
    agree = all((t < 1e-6) == (a < 1e-6) for t, a, _ in out.values())
    report(11, "Berwald / Landsberg detectors", [
        *[(f"{k} third, A-dev", v[0] < 1e-6 and v[1] < 1e-6, f"{v[0]:.1e}, {v[1]:.1e}")
          for k, v in out.items() if k != "randers-nonparallel"],
        ("non-parallel third > 10x floor", rnp[0] > 10 * floor_third, f"{rnp[0]:.2e}"),
        ("non-parallel A-dev > 10x floor", rnp[1] > 10 * floor_a, f"{rnp[1]:.2e}"),
        ("non-parallel F drift", rnp[2] < 1e-8, f"{rnp[2]:.2e}"),
        ("detectors agree", agree, agree)])
