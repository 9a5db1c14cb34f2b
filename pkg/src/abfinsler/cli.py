"""Command-line front end.

Usage::

    abfinsler <task> --config run.json [--seed N] [--out-dir DIR]
              [--tolerance-profile {strict,default}]

Tasks: validate, invariants, indicatrix, riccati, transport,
detect-berwald.  Each writes ``<task>.json`` (and CSV tables where the task
produces them) into ``--out-dir``.  Every JSON report carries the config
hash, the seed and the tolerance set.

Exit status: 0 success, 1 malformed config or input, 2 validity failure,
3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import (TASKS, TOLERANCE_PROFILES, RunConfig, canonical_json, load_json,
                     parse_curve, parse_run_config)
from .errors import (ConfigError, DegeneracyError, DimensionError, DomainError,
                     IntegrationBlockedError, QuadratureError, ValidityError)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDITY, EXIT_DEGENERATE = 0, 1, 2, 3


class _Outcome:
    def __init__(self, result, tables=None, status=EXIT_OK):
        self.result = result
        self.tables = tables or {}
        self.status = status


def _directions(n, count, seed):
    from .indicatrix import make_rng
    Y = make_rng(seed).standard_normal((count, n))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _run_validate(rc: RunConfig):
    from .norm import check_validity
    count = int(rc.params.get("sample_count", rc.tolerances["validity_samples"]))
    rep = check_validity(rc.norm, count)
    return _Outcome(rep.to_dict(), status=EXIT_OK if rep.passed else EXIT_VALIDITY)


def _run_invariants(rc: RunConfig):
    from .invariants import (det_closed, fundamental_tensor_closed, invariant_bundle,
                             uvq_sweep_csv)
    from .norm import cartan_tensor_oracle, check_validity, fundamental_tensor_oracle
    spec = rc.norm
    rep = check_validity(spec, rc.tolerances["validity_samples"])
    if not rep.passed:
        return _Outcome({"validity": rep.to_dict()}, status=EXIT_VALIDITY)
    if "points" in rc.params:
        pts = np.asarray(rc.params["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != spec.n:
            raise ConfigError(f"params.points: expected a list of {spec.n}-vectors")
    else:
        pts = _directions(spec.n, int(rc.params.get("sample_count", 8)), rc.seed)
    bundles = []
    for y in pts:
        g_or = fundamental_tensor_oracle(spec, y)
        A_or = cartan_tensor_oracle(spec, y)
        if spec.n >= 3:
            d = invariant_bundle(spec, y).to_dict()
            d["oracle_deviation"] = {
                "g": float(np.abs(np.asarray(d["g"]).reshape(g_or.shape) - g_or).max()),
                "A": float(np.abs(np.asarray(d["A"]).reshape(A_or.shape) - A_or).max())}
        else:
            g = fundamental_tensor_closed(spec, y)
            d = {"y": y.tolist(), "g": g.ravel().tolist(), "A": A_or.ravel().tolist(),
                 "det_g": det_closed(spec, y),
                 "oracle_deviation": {"g": float(np.abs(g - g_or).max())}}
        bundles.append(d)
    tables = {}
    if "s_values" in rc.params:
        if spec.n < 3:
            raise ConfigError("params.s_values: the u, v, q sweep needs n >= 3")
        tables["invariants_uvq.csv"] = uvq_sweep_csv(spec, rc.params["s_values"])
    return _Outcome({"validity": rep.to_dict(), "points": bundles}, tables)


def _riccati_params(spec):
    from .riccati import RiccatiParams
    phi = spec.phi
    if phi.family != "riccati":
        raise ConfigError("norm.phi.family: the riccati task needs the riccati family")
    return RiccatiParams(phi.c0, phi.c1, phi.c2, phi.b)


def _run_indicatrix(rc: RunConfig):
    from .indicatrix import constancy_sweep
    from .riccati import maximal_interval
    spec = rc.norm
    interval = rc.params.get("s_interval")
    if interval == "maximal":
        p = _riccati_params(spec)
        interval = maximal_interval(p, spec.phi.s_ref, spec.n)
    elif interval is not None:
        interval = tuple(float(v) for v in interval)
        if len(interval) != 2 or interval[0] >= interval[1]:
            raise ConfigError("params.s_interval: expected [lo, hi] with lo < hi or 'maximal'")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = constancy_sweep(spec, int(rc.params.get("sample_count", 64)), rc.seed, interval)
    if not rep.s:
        raise DegeneracyError("no usable indicatrix sample")
    out = rep.to_dict()
    out["s_interval"] = None if interval is None else list(interval)
    return _Outcome(out, {"indicatrix.csv": rep.to_csv()})


def _run_riccati(rc: RunConfig):
    from .riccati import (maximal_interval, phi_table, riccati_residual,
                          singularities, component)
    spec = rc.norm
    p = _riccati_params(spec)
    s_ref = spec.phi.s_ref
    sing = singularities(p)
    lo, hi = component(p, s_ref)
    grid = rc.params.get("s_grid")
    if grid is None:
        # next to a double zero D ~ (s - x)^2, so stay well clear of the guard band
        pad = 1e-3 * (hi - lo)
        s = np.linspace(lo + pad, hi - pad, 201)
    else:
        try:
            s = np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("params.s_grid: expected {start, stop, num}") from None
    table = phi_table(p, s, s_ref, spec.n, rc.tolerances["quadrature_tol"])
    try:
        mi = list(maximal_interval(p, s_ref, spec.n))
    except DomainError as exc:
        mi = None
        note = str(exc)
    else:
        note = ""
    res = max(abs(float(riccati_residual(p, float(x)))) for x in s)
    out = {"params": {"c0": p.c0, "c1": p.c1, "c2": p.c2, "b": p.b, "s_ref": s_ref},
           "singularities": sing.to_dict(), "component": [lo, hi],
           "maximal_interval": mi, "maximal_interval_note": note,
           "riccati_residual_max": res}
    return _Outcome(out, {"riccati_phi.csv": table.to_csv()})


def _run_transport(rc: RunConfig):
    from .transport import transport, transport_batch
    m = rc.metric
    if "curve" not in rc.raw:
        raise ConfigError("curve: missing (the transport task needs a curve)")
    curve = parse_curve(rc.raw["curve"], m.n)
    y0 = np.asarray(rc.params.get("y0", np.eye(m.n)[0]), dtype=float)
    if y0.shape != (m.n,):
        raise ConfigError(f"params.y0: expected a {m.n}-vector")
    step = float(rc.params.get("step", rc.tolerances["transport_step"]))
    t_end = float(rc.params.get("t_end", 1.0))
    method = rc.params.get("method", "rk4")
    if method not in ("rk4", "adaptive"):
        raise ConfigError("params.method: expected 'rk4' or 'adaptive'")
    res = transport(m, curve, y0, t_end, step, method)
    out = res.summary()
    out["y0"] = y0.tolist()
    _, Ys, _, _, _ = transport_batch(m, curve, 2.0 * y0, t_end, step, method)
    out["radial_linearity_deviation"] = float(np.abs(Ys[-1, 0] - 2.0 * res.y_end).max())
    return _Outcome(out, {"transport.csv": res.to_csv()})


def _run_berwald(rc: RunConfig):
    from .transport import berwald_detector
    m = rc.metric
    x = np.asarray(rc.params.get("x", np.zeros(m.n)), dtype=float)
    if x.shape != (m.n,):
        raise ConfigError(f"params.x: expected a {m.n}-vector")
    curve = parse_curve(rc.raw["curve"], m.n) if "curve" in rc.raw else None
    rep = berwald_detector(m, x, int(rc.params.get("sample_count", 8)), rc.seed, curve,
                           float(rc.params.get("t_end", 1.0)),
                           float(rc.params.get("step", rc.tolerances["transport_step"])))
    out = rep.to_dict()
    tol = rc.tolerances["berwald_tol"]
    out["berwald"] = rep.verdict(tol)
    out["threshold"] = tol
    return _Outcome(out)


_RUNNERS = {
    "validate": _run_validate,
    "invariants": _run_invariants,
    "indicatrix": _run_indicatrix,
    "riccati": _run_riccati,
    "transport": _run_transport,
    "detect-berwald": _run_berwald,
}

_REPORT_NAME = {"detect-berwald": "berwald"}


def run(rc: RunConfig, out_dir: str) -> int:
    """Execute one task and write its reports; returns the exit status."""
    header = {"tool": "abfinsler", "version": __version__, "task": rc.task,
              "config_hash": rc.hash, "seed": rc.seed,
              "tolerance_profile": rc.tolerance_profile, "tolerances": rc.tolerances}
    try:
        outcome = _RUNNERS[rc.task](rc)
    except ConfigError:
        raise
    except (DomainError, DimensionError) as exc:
        outcome = _Outcome({"error": str(exc)}, status=EXIT_CONFIG)
    except ValidityError as exc:
        outcome = _Outcome({"error": str(exc)}, status=EXIT_VALIDITY)
    except (DegeneracyError, IntegrationBlockedError, QuadratureError) as exc:
        info = {"error": str(exc)}
        if getattr(exc, "last_t", None) is not None:
            info["last_valid_t"] = exc.last_t
        outcome = _Outcome(info, status=EXIT_DEGENERATE)
    os.makedirs(out_dir, exist_ok=True)
    report = dict(header, status=outcome.status, result=outcome.result)
    name = _REPORT_NAME.get(rc.task, rc.task)
    with open(os.path.join(out_dir, f"{name}.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(report, indent=2) + "\n")
    for fname, text in sorted(outcome.tables.items()):
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return outcome.status


def build_parser():
    ap = argparse.ArgumentParser(prog="abfinsler",
                                 description="(alpha, beta)-norm and metric toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="task", required=True)
    for task in TASKS:
        sp = sub.add_parser(task)
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--seed", type=int, default=None, help="u64 seed (overrides config)")
        sp.add_argument("--out-dir", default=".", help="directory for reports")
        sp.add_argument("--tolerance-profile", choices=sorted(TOLERANCE_PROFILES),
                        default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_json(args.config)
        rc = parse_run_config(raw, args.task, args.seed, args.tolerance_profile)
        status = run(rc, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if status != EXIT_OK:
        print(f"{args.task}: exit {status}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
