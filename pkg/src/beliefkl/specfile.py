"""JSON distribution spec files and deterministic number formatting."""

import json
import math

import numpy as np

from .densities import Categorical, Gaussian1D, GridDensity, Mixture1D


class SpecError(ValueError):
    """A distribution spec is malformed; the message names the field."""


def _field(obj, name, where):
    if name not in obj:
        raise SpecError(f"{where}: missing field {name!r}")
    return obj[name]


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _vector(value, name):
    if not isinstance(value, list) or not value:
        raise SpecError(f"{name}: expected a non-empty list of numbers")
    return [_number(v, f"{name}[{i}]") for i, v in enumerate(value)]


def from_dict(obj, where="spec"):
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected a JSON object")
    kind = _field(obj, "type", where)
    try:
        if kind == "gaussian":
            return Gaussian1D(_number(_field(obj, "mean", where), "mean"),
                              _number(_field(obj, "variance", where), "variance"))
        if kind == "mixture":
            weights = _vector(_field(obj, "weights", where), "weights")
            comps = _field(obj, "components", where)
            if not isinstance(comps, list):
                raise SpecError("components: expected a list")
            parsed = []
            for i, c in enumerate(comps):
                g = from_dict(c, f"components[{i}]")
                if not isinstance(g, Gaussian1D):
                    raise SpecError(f"components[{i}]: mixture components must be gaussian")
                parsed.append(g)
            return Mixture1D(weights, tuple(parsed))
        if kind == "categorical":
            labels = obj.get("labels")
            return Categorical(_vector(_field(obj, "weights", where), "weights"),
                               tuple(labels) if labels is not None else None)
        if kind == "grid":
            lo = _number(_field(obj, "lo", where), "lo")
            hi = _number(_field(obj, "hi", where), "hi")
            n = _field(obj, "n", where)
            if isinstance(n, bool) or not isinstance(n, int):
                raise SpecError(f"n: expected an integer, got {n!r}")
            values = _vector(_field(obj, "values", where), "values")
            if len(values) != n:
                raise SpecError(f"values: has {len(values)} entries, n is {n}")
            if not lo < hi:
                raise SpecError("lo: must be below hi")
            return GridDensity.uniform(lo, hi, n, values, obj.get("rule", "simpson"))
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(f"{where}: {exc}") from exc
    raise SpecError(f"type: unknown distribution type {kind!r}")


def to_dict(d):
    if isinstance(d, Gaussian1D):
        return {"type": "gaussian", "mean": d.mean, "variance": d.variance}
    if isinstance(d, Mixture1D):
        return {"type": "mixture", "weights": [float(w) for w in d.component_weights],
                "components": [to_dict(c) for c in d.components]}
    if isinstance(d, Categorical):
        out = {"type": "categorical", "weights": [float(w) for w in d.weights]}
        if d.labels is not None:
            out["labels"] = list(d.labels)
        return out
    if isinstance(d, GridDensity):
        return {"type": "grid", "lo": d.lo, "hi": d.hi, "n": int(d.n),
                "values": [float(v) for v in d.values], "rule": d.rule}
    raise TypeError(f"to_dict: unsupported density {type(d).__name__}")


def load(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise SpecError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc.msg})") from exc
    return from_dict(obj)


def format_float(x):
    """17 significant digits; non-finite values as JSON-style tokens."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump(d, path):
    with open(path, "w") as fh:
        fh.write(dumps(to_dict(d)) + "\n")
