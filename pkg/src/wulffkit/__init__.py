"""Numerical verification of anisotropic Heintze-Karcher inequalities.

Gauges and their duals live in :mod:`wulffkit.gauge`, sampled surfaces in
:mod:`wulffkit.surface`, containers in :mod:`wulffkit.domain`, Wulff shapes
and touching radii in :mod:`wulffkit.wulff`, the functionals and the report
in :mod:`wulffkit.hk`, planar brute-force checks in :mod:`wulffkit.oracle2d`.
"""

from .domain import Ball, Cone, HalfSpace, Polytope, Wedge, WholeSpace, container_from_spec
from .errors import ParseError, PreconditionFailure, WulffkitError
from .gauge import (
    AnisotropyGauge,
    CapillaryGauge,
    EllipsoidalGauge,
    IsotropicGauge,
    PerturbedGauge,
    gauge_from_spec,
)
from .hk import VerificationReport, hk_ratio, verify
from .surface import radial_patch, sample, sphere_patch
from .wulff import inner_touch, outer_touch, wulff_cap, wulff_patch

__version__ = "0.1.0"

__all__ = [
    "AnisotropyGauge", "IsotropicGauge", "EllipsoidalGauge", "CapillaryGauge", "PerturbedGauge",
    "gauge_from_spec", "WholeSpace", "HalfSpace", "Polytope", "Wedge", "Cone", "Ball",
    "container_from_spec", "sphere_patch", "radial_patch", "sample", "wulff_patch", "wulff_cap",
    "inner_touch", "outer_touch", "hk_ratio", "verify", "VerificationReport",
    "WulffkitError", "ParseError", "PreconditionFailure",
]
