"""JSON function, grid and periodic specs, and 17-digit serialisation."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import funcalg as fa
from .errors import SpecError

_FUNCTION_KEYS = {
    "linear": ({"slope"}, {"domain"}),
    "piecewise_linear_slopes": ({"slope_neg", "slope_pos"}, set()),
    "rational_neg": (set(), {"c"}),
    "interpolant": ({"nodes", "values"}, {"direction", "extension"}),
    "piecewise": ({"neg", "pos"}, {"at_zero"}),
    "composite": ({"op", "args"}, set()),
}

_COMPOSITE_ARITY = {"compose": 2, "conjugate_neg": 1, "displacement": 1}


def _check_keys(spec: dict, required: set, optional: set, what: str):
    keys = set(spec) - {"kind"}
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise SpecError(f"{what}: missing keys {sorted(missing)}")
    if unknown:
        raise SpecError(f"{what}: unknown keys {sorted(unknown)}")


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(f"{what} must be finite")
    return value


def _interval(value) -> fa.Interval:
    if not (isinstance(value, list) and len(value) == 2):
        raise SpecError("domain must be a [lo, hi] pair (null for infinite)")
    lo = -math.inf if value[0] is None else _number(value[0], "domain lo")
    hi = math.inf if value[1] is None else _number(value[1], "domain hi")
    return fa.Interval(lo, hi)


def function_from_spec(spec) -> fa.RealFunction:
    """Build a :class:`~qgaf.funcalg.RealFunction` from its JSON object."""
    if not isinstance(spec, dict):
        raise SpecError(f"function spec must be an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind not in _FUNCTION_KEYS:
        raise SpecError(f"unknown function kind {kind!r}")
    required, optional = _FUNCTION_KEYS[kind]
    _check_keys(spec, required, optional, f"function kind {kind!r}")
    try:
        if kind == "linear":
            domain = _interval(spec["domain"]) if "domain" in spec else fa.REALS
            return fa.Linear(_number(spec["slope"], "slope"), domain)
        if kind == "piecewise_linear_slopes":
            return fa.TwoSlope(_number(spec["slope_neg"], "slope_neg"),
                               _number(spec["slope_pos"], "slope_pos"))
        if kind == "rational_neg":
            return fa.RationalNeg(_number(spec.get("c", 2.0), "c"))
        if kind == "interpolant":
            return fa.MonotoneInterpolant(spec["nodes"], spec["values"],
                                          spec.get("direction"),
                                          spec.get("extension", "error"))
        if kind == "piecewise":
            return fa.Piecewise(function_from_spec(spec["neg"]),
                                function_from_spec(spec["pos"]),
                                _number(spec.get("at_zero", 0.0), "at_zero"))
        op = spec["op"]
        args = spec["args"]
        if op not in _COMPOSITE_ARITY:
            raise SpecError(f"unknown composite op {op!r}")
        if not isinstance(args, list) or len(args) != _COMPOSITE_ARITY[op]:
            raise SpecError(f"composite {op!r} takes {_COMPOSITE_ARITY[op]} args")
        parts = [function_from_spec(a) for a in args]
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(f"invalid {kind!r} spec: {exc}") from exc
    if op == "compose":
        return fa.Compose(*parts)
    if op == "conjugate_neg":
        return fa.ConjNeg(parts[0])
    return fa.Displacement(parts[0])


def grid_from_spec(spec) -> fa.Grid:
    if not isinstance(spec, dict):
        raise SpecError("grid spec must be an object")
    _check_keys(spec, {"min", "max", "points"}, {"spacing", "symmetric"}, "grid")
    lo = _number(spec["min"], "grid min")
    hi = _number(spec["max"], "grid max")
    n = spec["points"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SpecError("grid points must be a positive integer")
    spacing = spec.get("spacing", "log")
    try:
        if spacing == "log":
            grid = fa.log_grid(lo, hi, n)
        elif spacing == "linear":
            grid = fa.linear_grid(lo, hi, n)
        else:
            raise SpecError(f"unknown grid spacing {spacing!r}")
        if spec.get("symmetric", False):
            grid = fa.symmetric_grid(grid)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    return grid


def grid_to_spec(lo: float, hi: float, points: int, spacing: str = "log",
                 symmetric: bool = False) -> dict:
    spec = {"min": lo, "max": hi, "points": points, "spacing": spacing}
    if symmetric:
        spec["symmetric"] = True
    return spec


def load_json_arg(value: str):
    """Parse an inline JSON argument or read it from a file path."""
    text = value.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed inline JSON: {exc}") from exc
    path = Path(value)
    if not path.is_file():
        raise SpecError(f"no such file: {value}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON in {value}: {exc}") from exc


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    """17 significant digits, which round-trips every double."""
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def trace_csv(report) -> str:
    """The ``x,residual`` trace of a residual report."""
    return csv_text(["x", "residual"], zip(report.xs.tolist(), report.values.tolist()))
