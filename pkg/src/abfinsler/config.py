"""Declarative JSON configs: norm specs, metric specs, curves and run configs.

Norm spec::

    {"n": 3, "beta": [0.5, 0, 0], "phi": {"family": "randers", "params": {"eps": 1}}}

Metric spec (polynomial fields are either constant nested arrays or
``{"terms": [{"coef": <array>, "powers": [k1, ..., kn]}, ...]}``)::

    {"n": 3, "alpha": [[1,0,0],[0,1,0],[0,0,1]],
     "beta": {"terms": [{"coef": [0.3,0,0], "powers": [0,0,0]},
                        {"coef": [0.2,0,0], "powers": [1,0,0]}]},
     "phi": {"family": "randers", "params": {"eps": 1}},
     "box": [[-1, 2], [-1, 2], [-1, 2]]}

``alpha`` is the Gram matrix of the inner product; a norm spec always uses
the standard one, so vectors in a skewed basis must be pre-transformed by
the Cholesky factor of their Gram matrix.

Curve::

    {"kind": "polynomial", "coefs": [[x0...], [x1...], ...]}   # ascending powers of t
    {"kind": "piecewise-linear", "points": [[...], ...], "knots": [0, ..., 1]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .norm import NormSpec
from .phi import phi_from_config

__all__ = [
    "TASKS",
    "TOLERANCE_PROFILES",
    "RunConfig",
    "parse_norm_spec",
    "parse_metric_spec",
    "parse_curve",
    "parse_poly_field",
    "parse_run_config",
    "load_json",
    "canonical_json",
    "config_hash",
]

TASKS = ("validate", "invariants", "indicatrix", "riccati", "transport", "detect-berwald")

TOLERANCE_PROFILES = {
    "default": {"validity_samples": 1025, "quadrature_tol": 1e-12, "transport_step": 1e-3,
                "berwald_tol": 1e-6, "q_eps": 1e-10},
    "strict": {"validity_samples": 4097, "quadrature_tol": 1e-13, "transport_step": 5e-4,
               "berwald_tol": 1e-8, "q_eps": 1e-10},
}

_METRIC_TASKS = ("transport", "detect-berwald")


def _need(cfg, key, path):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: missing")
    return cfg[key]


def _int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {v}")
    return v


def _num(v, path, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"{path}: expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be positive, got {v!r}")
    return float(v)


def _array(v, path, shape=None):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a numeric array") from None
    if shape is not None and a.shape != tuple(shape):
        raise ConfigError(f"{path}: expected shape {tuple(shape)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{path}: entries must be finite")
    return a


def parse_norm_spec(cfg) -> NormSpec:
    n = _int(_need(cfg, "n", "norm"), "norm.n", lo=2)
    beta = _array(_need(cfg, "beta", "norm"), "norm.beta", (n,))
    phi_cfg = _need(cfg, "phi", "norm")
    try:
        phi = phi_from_config(phi_cfg)
    except ConfigError as exc:
        raise ConfigError(f"norm.{exc}") from None
    b = float(np.linalg.norm(beta))
    if phi.family == "riccati" and abs(b - phi.b) > 1e-12 * max(1.0, b):
        raise ConfigError(f"norm.phi.params.b: must equal |beta| = {b!r}, got {phi.b!r}")
    return NormSpec(n, tuple(beta), phi)


def parse_poly_field(v, n, shape, path):
    from .transport import PolyField
    if isinstance(v, dict):
        terms = _need(v, "terms", path)
        if not isinstance(terms, list):
            raise ConfigError(f"{path}.terms: expected a list")
        parsed = []
        for i, t in enumerate(terms):
            coef = _array(_need(t, "coef", f"{path}.terms[{i}]"), f"{path}.terms[{i}].coef", shape)
            powers = t.get("powers", [0] * n)
            if (not isinstance(powers, list) or len(powers) != n
                    or any(isinstance(p, bool) or not isinstance(p, int) or p < 0 for p in powers)):
                raise ConfigError(f"{path}.terms[{i}].powers: expected {n} non-negative integers")
            parsed.append({"coef": coef, "powers": powers})
        return PolyField.from_terms(parsed, n, shape)
    return PolyField.constant(_array(v, path, shape), n)


def parse_metric_spec(cfg):
    from .transport import MetricSpec
    n = _int(_need(cfg, "n", "metric"), "metric.n", lo=2)
    alpha = parse_poly_field(cfg.get("alpha", np.eye(n).tolist()), n, (n, n), "metric.alpha")
    beta = parse_poly_field(_need(cfg, "beta", "metric"), n, (n,), "metric.beta")
    phi = _need(cfg, "phi", "metric")
    family = _need(phi, "family", "metric.phi")
    raw = phi.get("params", {})
    if not isinstance(raw, dict):
        raise ConfigError("metric.phi.params: expected an object")
    params = {k: parse_poly_field(v, n, (), f"metric.phi.params.{k}") for k, v in raw.items()}
    box = cfg.get("box")
    if box is not None:
        box = _array(box, "metric.box", (n, 2))
    try:
        # validate the family and the parameter names at the origin of the box
        x0 = np.zeros(n) if box is None else box[:, 0]
        probe = {k: float(f(x0)) for k, f in params.items()}
        if family == "riccati":
            probe["b"] = 1.0
        phi_from_config({"family": family, "params": probe})
        return MetricSpec(n, alpha, beta, family, params, None if box is None else box.tolist())
    except ConfigError as exc:
        raise ConfigError(f"metric.{exc}") from None
    except ValueError as exc:
        raise ConfigError(f"metric: {exc}") from None


def parse_curve(cfg, n):
    from .transport import CurveSpec
    kind = _need(cfg, "kind", "curve")
    try:
        if kind == "polynomial":
            coefs = _array(_need(cfg, "coefs", "curve"), "curve.coefs")
            if coefs.ndim != 2 or coefs.shape[1] != n:
                raise ConfigError(f"curve.coefs: expected shape (degree+1, {n})")
            return CurveSpec("polynomial", coefs)
        if kind == "piecewise-linear":
            pts = _array(_need(cfg, "points", "curve"), "curve.points")
            if pts.ndim != 2 or pts.shape[1] != n:
                raise ConfigError(f"curve.points: expected shape (K, {n})")
            knots = cfg.get("knots")
            return CurveSpec("piecewise-linear", pts,
                             None if knots is None else _array(knots, "curve.knots"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"curve: {exc}") from None
    raise ConfigError(f"curve.kind: expected 'polynomial' or 'piecewise-linear', got {kind!r}")


@dataclass
class RunConfig:
    task: str
    raw: dict
    norm: NormSpec | None = None
    metric: object = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    tolerance_profile: str = "default"

    @property
    def tolerances(self):
        return dict(TOLERANCE_PROFILES[self.tolerance_profile])

    @property
    def hash(self):
        return config_hash(self.raw)


def parse_run_config(raw, task=None, seed=None, tolerance_profile=None) -> RunConfig:
    """Validate a decoded config; command-line values override config values."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    cfg_task = raw.get("task")
    if task is not None and cfg_task is not None and cfg_task != task:
        raise ConfigError(f"task: config says {cfg_task!r} but the command is {task!r}")
    task = task or cfg_task
    if task not in TASKS:
        raise ConfigError(f"task: expected one of {list(TASKS)}, got {task!r}")
    has_norm, has_metric = "norm" in raw, "metric" in raw
    if has_norm == has_metric:
        raise ConfigError("config: exactly one of 'norm' or 'metric' is required")
    if task in _METRIC_TASKS and not has_metric:
        raise ConfigError(f"metric: task {task!r} needs a metric spec")
    if task not in _METRIC_TASKS and not has_norm:
        raise ConfigError(f"norm: task {task!r} needs a norm spec")
    if seed is None:
        seed = raw.get("seed", 0)
    seed = _int(seed, "seed", lo=0)
    if seed >= 2 ** 64:
        raise ConfigError("seed: must fit in 64 bits")
    prof = tolerance_profile or raw.get("tolerance_profile", "default")
    if prof not in TOLERANCE_PROFILES:
        raise ConfigError(f"tolerance_profile: expected one of {sorted(TOLERANCE_PROFILES)}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected an object")
    for key in ("tol", "tolerance", "step", "t_end"):
        if key in params:
            _num(params[key], f"params.{key}", positive=True)
    for key in ("sample_count",):
        if key in params:
            _int(params[key], f"params.{key}", lo=1)
    rc = RunConfig(task, raw, params=params, seed=seed, tolerance_profile=prof)
    if has_norm:
        rc.norm = parse_norm_spec(raw["norm"])
    else:
        rc.metric = parse_metric_spec(raw["metric"])
    return rc


def load_json(path):
    """Read a JSON file; decoding problems become ConfigError with line/column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj, indent=None) -> str:
    """Sorted keys, no NaN (non-finite floats become null)."""
    sep = (",", ":") if indent is None else (",", ": ")
    return json.dumps(_clean(obj), sort_keys=True, indent=indent, separators=sep,
                      ensure_ascii=False, allow_nan=False)


def config_hash(raw) -> str:
    return hashlib.sha256(canonical_json(raw).encode("utf-8")).hexdigest()
