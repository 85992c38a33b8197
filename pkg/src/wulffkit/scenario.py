"""Declarative scenario files: schema, construction and execution.

A scenario is a JSON document naming a gauge, a surface, a container and
the checks to run.  Unknown fields are rejected; every angle is in radians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .domain import Cone, ConvexContainer, HalfSpace, WholeSpace, container_from_spec
from .errors import ParseError, PreconditionFailure
from .gauge import AnisotropyGauge, gauge_from_spec
from .hk import ALL_CHECKS, SCHEMA_VERSION, VerificationReport, default_tolerances, verify
from .oracle2d import curve_from_patch, polygon_hk, raster_sweep
from .surface import SphereMapPatch, WulffMap, radial_patch, sample

ORACLE_VERTICES = 512
ORACLE_GRID = 256
ORACLE_AGREEMENT = 1e-2
ORACLE_COVERAGE = 0.999

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}
# row-major flat list or list of rows
_mat = {"anyOf": [
    {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 9},
    {"type": "array", "items": _vec, "minItems": 2, "maxItems": 3},
]}

GAUGE_SCHEMA = {
    "type": "object",
    "required": ["family"],
    "additionalProperties": False,
    "properties": {
        "family": {"enum": ["isotropic", "ellipsoidal", "capillary", "perturbed"]},
        "matrix": _mat,
        "theta": {"type": "number"},
        "axis": _vec,
        "epsilon": {"type": "number"},
        "coefficients": {"type": "array", "items": {"type": "number"}},
        "base": {"$ref": "#/$defs/gauge"},
        "derivative_mode": {"enum": ["analytic", "finite_difference"]},
        "fd_step": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"family": {"const": "ellipsoidal"}}}, "then": {"required": ["matrix"]}},
        {"if": {"properties": {"family": {"const": "capillary"}}}, "then": {"required": ["theta"]}},
        {"if": {"properties": {"family": {"const": "perturbed"}}},
         "then": {"required": ["base", "epsilon", "coefficients"]}},
    ],
}

CONTAINER_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["whole", "half_space", "wedge", "polytope", "cone", "ball"]},
        "normal": _vec,
        "offset": {"type": "number"},
        "normals": {"type": "array", "items": _vec, "minItems": 1},
        "offsets": {"type": "array", "items": {"type": "number"}},
        "vertex": _vec,
        "axis": _vec,
        "half_angle": {"type": "number"},
        "center": _vec,
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"type": {"const": "half_space"}}}, "then": {"required": ["normal"]}},
        {"if": {"properties": {"type": {"enum": ["wedge", "polytope"]}}},
         "then": {"required": ["normals", "offsets"]}},
        {"if": {"properties": {"type": {"const": "cone"}}},
         "then": {"required": ["vertex"], "oneOf": [{"required": ["axis", "half_angle"]},
                                                    {"required": ["normals"]}]}},
        {"if": {"properties": {"type": {"const": "ball"}}}, "then": {"required": ["center", "radius"]}},
    ],
}

SURFACE_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["sphere", "radial", "wulff"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "center": _vec,
        "epsilon": {"type": "number"},
        "coefficients": {"type": "array", "items": {"type": "number"}},
        "axis": _vec,
        "gauge": {"$ref": "#/$defs/gauge"},
        "trim": {"type": "boolean"},
        "cutter": {"$ref": "#/$defs/container"},
        "cap_axis": _vec,
    },
}

_tol_props = {k: {"type": "number", "minimum": 0} for k in default_tolerances()}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "name", "dimension", "gauge", "surface"],
    "additionalProperties": False,
    "$defs": {"gauge": GAUGE_SCHEMA, "container": CONTAINER_SCHEMA},
    "properties": {
        "version": {"const": 1},
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "dimension": {"enum": [2, 3]},
        "gauge": {"$ref": "#/$defs/gauge"},
        "surface": SURFACE_SCHEMA,
        "container": {"$ref": "#/$defs/container"},
        "resolution": {"type": "integer", "minimum": 4},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "n_samples": {"type": "integer", "minimum": 1},
        "checks": {"type": "array", "items": {"enum": list(ALL_CHECKS)}, "uniqueItems": True},
        "expect_equality": {"type": ["boolean", "null"]},
        "tolerances": {"type": "object", "additionalProperties": False, "properties": _tol_props},
        "touch_origin": _vec,
    },
}

_num_or_null = {"type": ["number", "null"]}
_obj_or_null = {"type": ["object", "null"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "name", "dimension", "resolution", "seed", "checks", "passed",
                 "tolerances", "volume", "hk_functional", "hk_ratio", "sweep_volume",
                 "minkowski_residual", "coverage_fraction", "equality"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "dimension": {"enum": [2, 3]},
        "resolution": {"type": "integer"},
        "seed": {"type": "integer"},
        "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "passed": {"type": "boolean"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "volume": _num_or_null,
        "area": _num_or_null,
        "hk_functional": _num_or_null,
        "hk_ratio": _num_or_null,
        "sweep_volume": _num_or_null,
        "minkowski_residual": _obj_or_null,
        "admissibility": _obj_or_null,
        "coverage_fraction": _num_or_null,
        "coverage": _obj_or_null,
        "equality": _obj_or_null,
        "touch": _obj_or_null,
        "oracle": _obj_or_null,
        "wall_time": _num_or_null,
    },
}


@dataclass
class Scenario:
    name: str
    dimension: int
    gauge: AnisotropyGauge
    patch: object
    container: ConvexContainer | None
    resolution: int = 64
    seed: int = 0
    n_samples: int = 1000
    checks: tuple = ALL_CHECKS
    expect_equality: bool | None = None
    tolerances: dict = field(default_factory=dict)
    touch_origin: np.ndarray | None = None
    spec: dict = field(default_factory=dict)


def _check_dim(value, dim, what):
    if value is not None and len(value) != dim:
        raise ParseError(f"{what} has length {len(value)}, expected {dim}")


def _walk_dims(spec, dim, where):
    for key in ("axis", "center", "normal", "vertex", "cap_axis"):
        if key in spec:
            _check_dim(spec[key], dim, f"{where}.{key}")
    for v in spec.get("normals", []):
        _check_dim(v, dim, f"{where}.normals")
    if "matrix" in spec:
        m = spec["matrix"]
        nested = bool(m) and isinstance(m[0], list)
        ok = (len(m) == dim and all(len(r) == dim for r in m)) if nested else len(m) == dim * dim
        if not ok:
            raise ParseError(f"{where}.matrix must be {dim}x{dim} ({dim * dim} entries)")
    for key in ("base", "gauge", "cutter"):
        if key in spec:
            _walk_dims(spec[key], dim, f"{where}.{key}")


def validate_scenario(doc):
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"schema violation at {loc}: {exc.message}") from None
    dim = doc["dimension"]
    for key in ("gauge", "surface", "container"):
        if key in doc:
            _walk_dims(doc[key], dim, key)
    _check_dim(doc.get("touch_origin"), dim, "touch_origin")


def _cutter(surface, K):
    if not surface.get("trim", True):
        return None
    if "cutter" in surface:
        return container_from_spec(surface["cutter"], K.dimension if K else 3)
    if K is None or isinstance(K, WholeSpace):
        return None
    if isinstance(K, (HalfSpace, Cone)):
        return K
    raise ParseError(f"container {K.kind!r} cannot trim the surface; give surface.cutter")


def build_surface(spec, dim, F, K):
    kind = spec["type"]
    cut = _cutter(spec, K)
    cap_axis = spec.get("cap_axis")
    r = spec.get("radius", 1.0)
    c = spec.get("center")
    if kind == "sphere":
        return radial_patch(r, center=c, dimension=dim, cutter=cut, cap_axis=cap_axis)
    if kind == "radial":
        return radial_patch(r, spec.get("epsilon", 0.0), spec.get("coefficients", [0.0]),
                            spec.get("axis"), c, dim, cut, cap_axis)
    G = gauge_from_spec(spec["gauge"], dim) if "gauge" in spec else F
    return SphereMapPatch(WulffMap(G, c, r), cutter=cut, cap_axis=cap_axis)


def parse_scenario(doc) -> Scenario:
    """Validate and build a scenario; construction errors from bad parameters become ParseError."""
    validate_scenario(doc)
    try:
        return _build(doc)
    except PreconditionFailure:
        raise
    except ValueError as exc:
        raise ParseError(f"invalid scenario parameters: {exc}") from None


def _build(doc) -> Scenario:
    dim = doc["dimension"]
    F = gauge_from_spec(doc["gauge"], dim)
    if F.dimension != dim:
        raise ParseError(f"gauge dimension {F.dimension} differs from scenario dimension {dim}")
    K = container_from_spec(doc["container"], dim) if "container" in doc else None
    if isinstance(K, WholeSpace):
        K = None
    patch = build_surface(doc["surface"], dim, F, K)
    origin = doc.get("touch_origin")
    return Scenario(
        name=doc["name"], dimension=dim, gauge=F, patch=patch, container=K,
        resolution=doc.get("resolution", 64), seed=doc.get("seed", 0),
        n_samples=doc.get("n_samples", 1000), checks=tuple(doc.get("checks", ALL_CHECKS)),
        expect_equality=doc.get("expect_equality"), tolerances=doc.get("tolerances", {}),
        touch_origin=None if origin is None else np.asarray(origin, float), spec=doc,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ParseError(f"no such scenario file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(doc)


def planar_oracle(sc: Scenario):
    """Oracle values for a planar scenario: polyline ratio and raster coverage."""
    K = sc.container
    closure = K.vertex[None] if isinstance(K, Cone) else None
    curve = curve_from_patch(sc.patch, ORACLE_VERTICES, closure)
    return {"polygon_hk": polygon_hk(sc.gauge, curve, K),
            "raster_coverage": raster_sweep(sc.gauge, curve, ORACLE_GRID),
            "vertices": ORACLE_VERTICES, "grid": ORACLE_GRID}


def run(sc: Scenario, checks=None, resolution=None, seed=None) -> VerificationReport:
    """Sample the scenario surface and run its checks."""
    checks = tuple(checks) if checks else sc.checks
    res = resolution or sc.resolution
    surf = sample(sc.patch, res)
    rep = verify(sc.gauge, surf, sc.container, checks, sc.name,
                 sc.seed if seed is None else seed, sc.n_samples, sc.expect_equality,
                 sc.touch_origin, sc.tolerances)
    if sc.dimension == 2 and "hk" in checks:
        orc = planar_oracle(sc)
        orc["relative_difference"] = abs(orc["polygon_hk"] - rep.hk_ratio) / rep.hk_ratio
        rep.oracle = orc
        rep.checks["oracle"] = bool(orc["relative_difference"] <= ORACLE_AGREEMENT
                                    and orc["raster_coverage"] >= ORACLE_COVERAGE)
    return rep


def validate_report(doc):
    """Re-parse a report under the schema version it declares."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported report schema_version {doc.get('schema_version')!r}")
    try:
        jsonschema.validate(doc, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"report schema violation: {exc.message}") from None
