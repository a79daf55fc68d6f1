"""
RUN CONFIGURATION
Purpose: Turn a JSON/YAML document into a validated RunConfig before any numerics start
Document layout:
    algebroid   catalog name, "lift(<name>)", or {n, k, rho, c, domain, label}
    lagrangian  "default", an expression string, or {kind: kinetic|mechanical|expression, ...}
    run         {t0, t1, h | steps, x0, y0, method}
    task        options keyed by subcommand, e.g. {"jacobi": {"xi0": [...], "xidot0": [...]}}
    out         output directory (overridden by --out)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.algebroid.checks import DEFAULT_SAMPLES_PER_AXIS, DEFAULT_TOL
from src.algebroid.skew_algebroid import SkewAlgebroid
from src.dynamics.integrator import METHODS
from src.dynamics.lagrangian import CONDITION_LIMIT, Lagrangian
from src.jacobi.conjugate import DEFAULT_TOL_DET, DEFAULT_TOL_SV, MAX_BISECTION
from src.jacobi.jacobi_fields import HOST_RESIDUAL_LIMIT
from src.systems.catalog import get_entry, kinetic_lagrangian, mechanical_lagrangian
from src.utils.config_loader import load_document, resolve_config_path
from src.utils.errors import ConfigError, DimensionError
from src.variation.second_variation import DEFAULT_NULL_TOL
from src.variation.variations import ROUTE_TOL

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("validate", "integrate", "jacobi", "conjugate", "secondvar", "crosscheck")
TOP_LEVEL_KEYS = {"algebroid", "lagrangian", "run", "task", "out", "description"}
RUN_KEYS = {"t0", "t1", "h", "steps", "x0", "y0", "method"}
DEFAULT_INTERVAL = (0.0, 1.0)
DEFAULT_STEPS = 1000
DEFAULT_DS = 1e-5

# Scalar options per subcommand with their defaults; vector options are listed separately.
TASK_DEFAULTS = {
    "validate": {"tol": DEFAULT_TOL, "samples_per_axis": DEFAULT_SAMPLES_PER_AXIS},
    "integrate": {"condition_limit": CONDITION_LIMIT},
    "jacobi": {"host_limit": HOST_RESIDUAL_LIMIT, "condition_limit": CONDITION_LIMIT},
    "conjugate": {
        "tol_det": DEFAULT_TOL_DET,
        "tol_sv": DEFAULT_TOL_SV,
        "max_bisection": MAX_BISECTION,
        "host_limit": HOST_RESIDUAL_LIMIT,
        "condition_limit": CONDITION_LIMIT,
    },
    "secondvar": {
        "null_tol": DEFAULT_NULL_TOL,
        "host_limit": HOST_RESIDUAL_LIMIT,
        "condition_limit": CONDITION_LIMIT,
        "pairing": False,
    },
    "crosscheck": {
        "ds": DEFAULT_DS,
        "tol": ROUTE_TOL,
        "host_limit": HOST_RESIDUAL_LIMIT,
        "condition_limit": CONDITION_LIMIT,
    },
}
VECTOR_OPTIONS = {"jacobi": ("xi0", "xidot0"), "crosscheck": ("xi0", "xidot0")}
INTEGER_OPTIONS = {"samples_per_axis", "max_bisection"}
BOOLEAN_OPTIONS = {"pairing"}


@dataclass(eq=False)
class RunSpec:
    t0: float
    t1: float
    h: float = None
    steps: int = None
    x0: np.ndarray = None
    y0: np.ndarray = None
    method: str = "rk4"

    def grid_kwargs(self):
        return {"h": self.h} if self.h is not None else {"steps": self.steps}


@dataclass(eq=False)
class RunConfig:
    algebroid: SkewAlgebroid
    lagrangian: Lagrangian
    run: RunSpec
    task: dict = field(default_factory=dict)
    metric: list = None
    catalog_name: str = None
    lie: bool = None
    out_dir: Path = None
    document: dict = field(default_factory=dict)
    source: Path = None

    def options(self, subcommand):
        """Task options for one subcommand, defaults filled in."""
        merged = dict(TASK_DEFAULTS[subcommand])
        merged.update(self.task.get(subcommand, {}))
        return merged


# ============================================================================
# FIELD HELPERS
# ============================================================================

def _prefixed(prefix, error):
    """Re-anchor a ConfigError raised by a library constructor at a document path."""
    if error.field == prefix or str(error.field).startswith(prefix + "."):
        return error
    error.field = f"{prefix}.{error.field}" if error.field else prefix
    error.args = (f"{error.field}: {error.message}",)
    return error


def _number(value, field_path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field_path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(field_path, "must be finite")
    if positive and value <= 0.0:
        raise ConfigError(field_path, "must be positive")
    return value


def _vector(value, size, field_path):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(field_path, f"expected a list of {size} numbers")
    if len(value) != size:
        raise DimensionError(field_path, f"{size} entries", len(value))
    return np.array([_number(v, f"{field_path}[{i}]") for i, v in enumerate(value)])


def _mapping(value, field_path):
    if not isinstance(value, dict):
        raise ConfigError(field_path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(section, allowed, field_path):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{field_path}.{unknown[0]}" if field_path else unknown[0],
                          f"unknown key (allowed: {', '.join(sorted(allowed))})")


# ============================================================================
# SECTIONS
# ============================================================================

def _read_algebroid(spec):
    """(algebroid, catalog entry or None)"""
    if isinstance(spec, str):
        try:
            entry = get_entry(spec)
        except ConfigError as e:
            raise _prefixed("algebroid", e) from None
        return entry.algebroid, entry
    spec = _mapping(spec, "algebroid")
    _reject_unknown(spec, {"n", "k", "rho", "c", "domain", "label"}, "algebroid")
    for key in ("n", "k", "c"):
        if key not in spec:
            raise ConfigError(f"algebroid.{key}", "required for an inline algebroid")
    try:
        A = SkewAlgebroid(spec["n"], spec["k"], spec.get("rho", []), spec["c"],
                          label=spec.get("label", ""), domain=spec.get("domain"))
    except ConfigError as e:
        raise _prefixed("algebroid", e) from None
    except (TypeError, ValueError) as e:
        raise ConfigError("algebroid", f"malformed structure data ({e})") from None
    return A, None


def _read_lagrangian(spec, A, entry):
    """(lagrangian, metric)"""
    default_metric = entry.metric if entry is not None else None
    if spec is None or spec == "default":
        if entry is None:
            raise ConfigError("lagrangian", "an inline algebroid needs an explicit lagrangian")
        return entry.lagrangian, default_metric
    try:
        if isinstance(spec, str):
            return Lagrangian(spec, A.n, A.k), default_metric
        spec = _mapping(spec, "lagrangian")
        kind = spec.get("kind", "expression")
        if kind == "expression":
            _reject_unknown(spec, {"kind", "expression", "label"}, "")
            if "expression" not in spec:
                raise ConfigError("expression", "required")
            return Lagrangian(spec["expression"], A.n, A.k, label=spec.get("label", "")), default_metric
        if kind not in ("kinetic", "mechanical"):
            raise ConfigError("kind", f"unknown kind {kind!r} (kinetic, mechanical, expression)")
        allowed = {"kind", "metric", "label"} | ({"potential"} if kind == "mechanical" else set())
        _reject_unknown(spec, allowed, "")
        metric = spec.get("metric", default_metric)
        if metric is None:
            raise ConfigError("metric", f"required for a {kind} lagrangian on {A.label}")
        if kind == "kinetic":
            return kinetic_lagrangian(A, metric, spec.get("label", "")), metric
        if "potential" not in spec:
            raise ConfigError("potential", "required for a mechanical lagrangian")
        return mechanical_lagrangian(A, metric, spec["potential"], spec.get("label", "")), metric
    except ConfigError as e:
        raise _prefixed("lagrangian", e) from None
    except (TypeError, ValueError) as e:
        raise ConfigError("lagrangian", f"malformed lagrangian data ({e})") from None


def _read_run(spec, A, entry):
    spec = _mapping({} if spec is None else spec, "run")
    _reject_unknown(spec, RUN_KEYS, "run")
    t0 = _number(spec.get("t0", DEFAULT_INTERVAL[0]), "run.t0")
    t1 = _number(spec.get("t1", DEFAULT_INTERVAL[1]), "run.t1")
    if not t1 > t0:
        raise ConfigError("run.t1", f"must exceed t0 = {t0}")
    if "h" in spec and "steps" in spec:
        raise ConfigError("run.h", "give either h or steps, not both")
    h = steps = None
    if "h" in spec:
        h = _number(spec["h"], "run.h", positive=True)
        if h > t1 - t0:
            raise ConfigError("run.h", "step is longer than the interval")
    else:
        raw = spec.get("steps", DEFAULT_STEPS)
        if isinstance(raw, bool) or not isinstance(raw, int) or raw < 1:
            raise ConfigError("run.steps", f"expected an integer >= 1, got {raw!r}")
        steps = raw
    method = spec.get("method", "rk4")
    if method not in METHODS:
        raise ConfigError("run.method", f"unknown method {method!r} (available: {', '.join(METHODS)})")

    if "x0" in spec:
        x0 = _vector(spec["x0"], A.n, "run.x0")
    elif entry is not None:
        x0 = np.asarray(entry.x0, dtype=float)
    else:
        x0 = np.array([0.5 * (lo + hi) for lo, hi in A.domain])
    if "y0" in spec:
        y0 = _vector(spec["y0"], A.k, "run.y0")
    elif entry is not None:
        y0 = np.asarray(entry.y0, dtype=float)
    else:
        raise ConfigError("run.y0", "required for an inline algebroid")
    return RunSpec(t0, t1, h, steps, x0, y0, method)


def _read_task(spec, A):
    spec = _mapping({} if spec is None else spec, "task")
    _reject_unknown(spec, SUBCOMMANDS, "task")
    task = {}
    for subcommand, options in spec.items():
        path = f"task.{subcommand}"
        options = _mapping(options, path)
        vectors = VECTOR_OPTIONS.get(subcommand, ())
        _reject_unknown(options, set(TASK_DEFAULTS[subcommand]) | set(vectors), path)
        checked = {}
        for key, value in options.items():
            field_path = f"{path}.{key}"
            if key in vectors:
                checked[key] = _vector(value, A.k, field_path)
            elif key in BOOLEAN_OPTIONS:
                if not isinstance(value, bool):
                    raise ConfigError(field_path, "expected true or false")
                checked[key] = value
            elif key in INTEGER_OPTIONS:
                if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                    raise ConfigError(field_path, f"expected an integer >= 1, got {value!r}")
                checked[key] = value
            else:
                checked[key] = _number(value, field_path, positive=True)
        task[subcommand] = checked
    return task


# ============================================================================
# ENTRY
# ============================================================================

def build_config(document, source=None):
    """Validate an already-loaded document."""
    document = _mapping(document, "document")
    _reject_unknown(document, TOP_LEVEL_KEYS, "")
    if "algebroid" not in document:
        raise ConfigError("algebroid", "required")
    A, entry = _read_algebroid(document["algebroid"])
    L, metric = _read_lagrangian(document.get("lagrangian"), A, entry)
    run = _read_run(document.get("run"), A, entry)
    task = _read_task(document.get("task"), A)
    out = document.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", "expected a path string")
    config = RunConfig(
        algebroid=A,
        lagrangian=L,
        run=run,
        task=task,
        metric=metric,
        catalog_name=entry.name if entry is not None else None,
        lie=entry.lie if entry is not None else None,
        out_dir=Path(out) if out else None,
        document=document,
        source=source,
    )
    logger.info("configuration loaded: %s with %s (n=%d, k=%d)", A.label, L.label, A.n, A.k)
    return config


def load_config(path):
    """Load and validate a run configuration file."""
    source = resolve_config_path(path)
    return build_config(load_document(source), source=source)
