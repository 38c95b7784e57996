"""JSON configuration for Cauchy data and pipeline settings.

Schema (one-dimensional)::

    {
      "polytope": {"interval": [-1, 1]},
      "u0": {"kind": "guillemin"},
      "udot0": {"kind": "polynomial", "coefficients": [0, 0, -1]}
    }

``polytope`` may instead list facets as
``{"facets": [{"normal": [1], "offset": -1}, {"normal": [-1], "offset": -1}]}``,
meaning ``l_k(y) = <y, normal> - offset``. ``u0.kind`` is ``"guillemin"`` or
``"guillemin_plus_smooth"`` (with ``"smooth": [coefficients]``); an optional
``"scale"`` multiplies the Guillemin part. ``udot0.kind`` is ``"polynomial"``
or ``"fubini_study_quadratic"``. Coefficients run lowest degree first.

For a rectangle, give ``{"rectangle": [[lo1, hi1], [lo2, hi2]]}`` and an
``"axes"`` list with one ``{"u0": ..., "udot0": ...}`` object per coordinate.

Optional pipeline keys: ``grid``, ``x_nodes``, ``s_mesh``, ``raster`` (all
integers >= 64) and ``T`` (> 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

from .toric import AxisSpec, Polytope, ToricCauchyData, fubini_study, p1xp1

__all__ = ["ConfigError", "RunSettings", "load_config", "parse_config", "builtin"]

BUILTINS = {"fubini-study": fubini_study, "p1xp1": p1xp1}


class ConfigError(ValueError):
    """Malformed configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class RunSettings:
    grid: int = 4097
    x_nodes: int = 1201
    s_mesh: int = 200
    raster: int = 1024
    T: Optional[float] = None


def builtin(name: str) -> ToricCauchyData:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ConfigError("builtin", f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None


def _number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(field, "must be finite")
    return float(value)


def _coeffs(value: Any, field: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(field, "expected a non-empty list of coefficients")
    return tuple(_number(c, f"{field}[{i}]") for i, c in enumerate(value))


def _object(value: Any, field: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(field, "expected an object")
    return value


def _polytope(raw: Any) -> Polytope:
    raw = _object(raw, "polytope")
    try:
        if "interval" in raw:
            iv = raw["interval"]
            if not isinstance(iv, list) or len(iv) != 2:
                raise ConfigError("polytope.interval", "expected [lo, hi]")
            return Polytope.interval(_number(iv[0], "polytope.interval[0]"),
                                     _number(iv[1], "polytope.interval[1]"))
        if "rectangle" in raw:
            rect = raw["rectangle"]
            if not isinstance(rect, list) or len(rect) != 2 or any(
                    not isinstance(r, list) or len(r) != 2 for r in rect):
                raise ConfigError("polytope.rectangle", "expected [[lo1, hi1], [lo2, hi2]]")
            return Polytope.rectangle([[_number(c, f"polytope.rectangle[{i}]") for c in r]
                                       for i, r in enumerate(rect)])
        if "facets" in raw:
            facets = raw["facets"]
            if not isinstance(facets, list):
                raise ConfigError("polytope.facets", "expected a list")
            parsed = []
            for i, fct in enumerate(facets):
                fct = _object(fct, f"polytope.facets[{i}]")
                normal = fct.get("normal")
                if not isinstance(normal, list) or not normal:
                    raise ConfigError(f"polytope.facets[{i}].normal", "expected a list")
                parsed.append((
                    tuple(_number(c, f"polytope.facets[{i}].normal") for c in normal),
                    _number(fct.get("offset"), f"polytope.facets[{i}].offset"),
                ))
            return Polytope(tuple(parsed))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("polytope", str(exc)) from None
    raise ConfigError("polytope", "expected one of 'interval', 'rectangle', 'facets'")


def _axis(raw: dict, facets, prefix: str) -> AxisSpec:
    u0 = _object(raw.get("u0", {"kind": "guillemin"}), f"{prefix}u0")
    kind = u0.get("kind")
    smooth: tuple[float, ...] = (0.0,)
    if kind == "guillemin_plus_smooth":
        smooth = _coeffs(u0.get("smooth"), f"{prefix}u0.smooth")
    elif kind != "guillemin":
        raise ConfigError(f"{prefix}u0.kind", f"unknown kind {kind!r}")
    scale = _number(u0.get("scale", 1.0), f"{prefix}u0.scale")
    if scale <= 0:
        raise ConfigError(f"{prefix}u0.scale", "must be positive")

    if "udot0" not in raw:
        raise ConfigError(f"{prefix}udot0", "missing")
    ud = raw["udot0"]
    if isinstance(ud, list):
        velocity = _coeffs(ud, f"{prefix}udot0")
    else:
        ud = _object(ud, f"{prefix}udot0")
        vkind = ud.get("kind")
        if vkind == "polynomial":
            velocity = _coeffs(ud.get("coefficients"), f"{prefix}udot0.coefficients")
        elif vkind == "fubini_study_quadratic":
            velocity = (0.0, 0.0, -1.0)
        else:
            raise ConfigError(f"{prefix}udot0.kind", f"unknown kind {vkind!r}")
    return AxisSpec(facets, velocity, smooth, scale)


def _positive_int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 64:
        raise ConfigError(field, "expected an integer >= 64")
    return value


def parse_config(obj: Any) -> tuple[ToricCauchyData, RunSettings]:
    """Validate a decoded JSON object."""
    obj = _object(obj, "config")
    if "builtin" in obj:
        data = builtin(obj["builtin"])
    else:
        if "polytope" not in obj:
            raise ConfigError("polytope", "missing")
        poly = _polytope(obj["polytope"])
        if poly.dimension == 1:
            axes = (_axis(obj, poly.axis_facets(0), ""),)
        else:
            raw = obj.get("axes")
            if not isinstance(raw, list) or len(raw) != 2:
                raise ConfigError("axes", "a rectangle needs a list of two axis specs")
            axes = tuple(_axis(_object(a, f"axes[{j}]"), poly.axis_facets(j), f"axes[{j}].")
                         for j, a in enumerate(raw))
        data = ToricCauchyData(poly, axes, name=str(obj.get("name", "custom")))
    kw = {}
    for key in ("grid", "x_nodes", "s_mesh", "raster"):
        if key in obj:
            kw[key] = _positive_int(obj[key], key)
    if "T" in obj:
        T = _number(obj["T"], "T")
        if T <= 0:
            raise ConfigError("T", "must be positive")
        kw["T"] = T
    return data, RunSettings(**kw)


def load_config(path: Union[str, Path]) -> tuple[ToricCauchyData, RunSettings]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(obj)
