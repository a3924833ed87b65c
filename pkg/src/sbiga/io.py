"""JSON documents for boundary curves and geometry maps.

See ``docs/geometry_format.md`` for the schema. Numbers are written with
Python's shortest round-trip ``repr`` (at most 17 significant digits), so a
write/read cycle is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SbigaError, SchemaError
from .geometry import GeometryMap, _rays_are_linear
from .splines import CurveGeometry, KnotVector

ORIENTATIONS = ("center-to-boundary", "boundary-to-center")


def _fail(path: str, msg: str):
    raise SchemaError(f"{path}: {msg}")


def _require(doc: dict, key: str, path: str = "$") -> Any:
    if key not in doc:
        _fail(f"{path}.{key}", "missing required field")
    return doc[key]


def _number_array(value, path: str, ndim: int, last: int | None = None) -> np.ndarray:
    def walk(v, p, depth):
        if depth == ndim:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(p, f"expected a number, got {type(v).__name__}")
            return
        if not isinstance(v, list):
            _fail(p, f"expected a list, got {type(v).__name__}")
        for k, item in enumerate(v):
            walk(item, f"{p}[{k}]", depth + 1)

    walk(value, path, 0)
    try:
        arr = np.array(value, dtype=float)
    except ValueError:
        _fail(path, "ragged array")
    if arr.ndim != ndim:
        _fail(path, f"expected a {ndim}-dimensional array")
    if last is not None and arr.shape[-1] != last:
        _fail(path, f"innermost entries must have length {last}")
    if not np.all(np.isfinite(arr)):
        _fail(path, "non-finite number")
    return arr


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "expected an integer")
    return value


def _knots(value, degree: int, path: str) -> KnotVector:
    arr = _number_array(value, path, 1)
    try:
        return KnotVector(arr, degree)
    except (SbigaError, ValueError) as exc:
        _fail(path, str(exc))


def parse(text: str, source: str = "<string>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        _fail("$", "top level must be an object")
    return doc


def curve_from_document(doc: dict) -> CurveGeometry:
    if _require(doc, "type") != "curve":
        _fail("$.type", "expected 'curve'")
    degree = _int(_require(doc, "degree"), "$.degree")
    kv = _knots(_require(doc, "knots"), degree, "$.knots")
    pts = _number_array(_require(doc, "control_points"), "$.control_points", 2, 2)
    if pts.shape[0] != kv.n:
        _fail("$.control_points", f"{pts.shape[0]} points, knot vector needs {kv.n}")
    w = None
    if doc.get("weights") is not None:
        w = _number_array(doc["weights"], "$.weights", 1)
        if w.shape[0] != kv.n:
            _fail("$.weights", f"{w.shape[0]} weights, expected {kv.n}")
        if np.any(w <= 0):
            _fail("$.weights", "weights must be positive")
    return CurveGeometry(kv, pts, w)


def geometry_from_document(doc: dict) -> GeometryMap:
    if _require(doc, "type") != "geometry":
        _fail("$.type", "expected 'geometry'")
    degrees = _require(doc, "degrees")
    if not isinstance(degrees, list) or len(degrees) != 2:
        _fail("$.degrees", "expected [radial_degree, circumferential_degree]")
    p = _int(degrees[0], "$.degrees[0]")
    q = _int(degrees[1], "$.degrees[1]")
    orientation = doc.get("radial_orientation", "center-to-boundary")
    if orientation not in ORIENTATIONS:
        _fail("$.radial_orientation", f"expected one of {', '.join(ORIENTATIONS)}")
    rk = _number_array(_require(doc, "radial_knots"), "$.radial_knots", 1)
    if orientation == "boundary-to-center":
        rk = 1.0 - rk[::-1]
    rkv = _knots(rk.tolist(), p, "$.radial_knots")
    ckv = _knots(_require(doc, "circ_knots"), q, "$.circ_knots")
    net = _number_array(_require(doc, "control_points"), "$.control_points", 3, 2)
    if net.shape[:2] != (rkv.n, ckv.n):
        _fail("$.control_points", f"grid is {net.shape[0]}x{net.shape[1]}, knot vectors need {rkv.n}x{ckv.n}")
    w = None
    if doc.get("weights") is not None:
        w = _number_array(doc["weights"], "$.weights", 2)
        if w.shape != (rkv.n, ckv.n):
            _fail("$.weights", f"shape {w.shape}, expected ({rkv.n}, {ckv.n})")
    if orientation == "boundary-to-center":
        net = net[::-1].copy()
        w = None if w is None else w[::-1].copy()
    center = None
    if doc.get("scaling_center") is not None:
        center = _number_array(doc["scaling_center"], "$.scaling_center", 1)
        if center.shape != (2,):
            _fail("$.scaling_center", "expected [x, y]")
    sb = doc.get("scaled_boundary", center is not None)
    if not isinstance(sb, bool):
        _fail("$.scaled_boundary", "expected true or false")
    if sb and center is None:
        _fail("$.scaling_center", "required for a scaled-boundary map")
    straight = doc.get("straight_rays")
    if straight is None:
        straight = bool(sb) and _rays_are_linear(rkv, net, w, center)
    elif not isinstance(straight, bool):
        _fail("$.straight_rays", "expected true or false")
    try:
        return GeometryMap(rkv, ckv, net, w, is_scaled_boundary=sb, has_straight_rays=straight, scaling_center=center)
    except SbigaError as exc:
        _fail("$.control_points", str(exc))


def load(path: str | Path) -> tuple[str, GeometryMap | CurveGeometry, dict]:
    """Read a document; returns ``(type, object, raw document)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from None
    doc = parse(text, str(path))
    kind = doc.get("type")
    if kind == "curve":
        return kind, curve_from_document(doc), doc
    if kind == "geometry":
        return kind, geometry_from_document(doc), doc
    _fail("$.type", "expected 'curve' or 'geometry'")


def read_geometry(path: str | Path) -> GeometryMap:
    kind, obj, _ = load(path)
    if kind != "geometry":
        _fail("$.type", "expected a geometry document")
    return obj


def read_curve(path: str | Path) -> CurveGeometry:
    kind, obj, _ = load(path)
    if kind != "curve":
        _fail("$.type", "expected a curve document")
    return obj


def _lst(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def curve_document(curve: CurveGeometry) -> dict:
    doc = {
        "type": "curve",
        "degree": curve.knot_vector.degree,
        "knots": _lst(curve.knot_vector.knots),
        "control_points": _lst(curve.control_points),
    }
    if curve.weights is not None:
        doc["weights"] = _lst(curve.weights)
    return doc


def geometry_document(gmap: GeometryMap, kind: str = "user", orientation: str = "center-to-boundary") -> dict:
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    net = gmap.control_net
    w = gmap.weights
    rk = gmap.radial_kv.knots
    if orientation == "boundary-to-center":
        net = net[::-1]
        w = None if w is None else w[::-1]
        rk = 1.0 - rk[::-1]
    doc = {
        "type": "geometry",
        "kind": kind,
        "degrees": list(gmap.degrees),
        "radial_orientation": orientation,
        "radial_knots": _lst(rk),
        "circ_knots": _lst(gmap.circ_kv.knots),
        "control_points": _lst(net),
    }
    if w is not None:
        doc["weights"] = _lst(w)
    if gmap.scaling_center is not None:
        doc["scaling_center"] = _lst(gmap.scaling_center)
    doc["scaled_boundary"] = gmap.is_scaled_boundary
    doc["straight_rays"] = gmap.has_straight_rays
    return doc


def dumps(doc: dict) -> str:
    """Compact rows: one control-point row per line."""
    lines = ["{"]
    items = list(doc.items())
    for k, (key, value) in enumerate(items):
        comma = "," if k < len(items) - 1 else ""
        if key in ("control_points", "weights") and isinstance(value, list) and value and isinstance(value[0], list):
            rows = [json.dumps(row) for row in value]
            body = ",\n    ".join(rows)
            lines.append(f'  "{key}": [\n    {body}\n  ]{comma}')
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value)}{comma}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_geometry(gmap: GeometryMap, path: str | Path, kind: str = "user", orientation: str = "center-to-boundary") -> None:
    Path(path).write_text(dumps(geometry_document(gmap, kind, orientation)))


def write_curve(curve: CurveGeometry, path: str | Path) -> None:
    Path(path).write_text(dumps(curve_document(curve)))
