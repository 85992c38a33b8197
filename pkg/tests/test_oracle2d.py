import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffkit.domain import Cone
from wulffkit.errors import NotMeanConvex, SelfIntersecting
from wulffkit.gauge import EllipsoidalGauge, IsotropicGauge
from wulffkit.hk import hk_ratio
from wulffkit.oracle2d import (
    PlanarCurve,
    arc_curve,
    circle_curve,
    curve_from_patch,
    ellipse_curve,
    find_self_intersection,
    polygon_hk,
    raster_sweep,
    shoelace_area,
)
from wulffkit.scenario import load_scenario, planar_oracle, run
from wulffkit.surface import radial_patch, sample

from conftest import SCENARIOS

ISO2 = IsotropicGauge(2)
ELL2 = EllipsoidalGauge(np.diag([4.0, 1.0]))


def _densify(poly, m=64):
    # split each edge so that PlanarCurve accepts the polygon
    poly = np.asarray(poly, float)
    nxt = np.roll(poly, -1, axis=0)
    k = -(-m // len(poly))
    s = np.arange(k)[:, None, None] / k
    return ((1 - s) * poly[None] + s * nxt[None]).transpose(1, 0, 2).reshape(-1, 2)


# --- area -----------------------------------------------------------------------------

def test_shoelace_examples():
    assert shoelace_area([[0, 0], [1, 0], [1, 1], [0, 1]]) == 1.0
    assert shoelace_area([[0, 0], [1, 0], [0, 1]]) == 0.5
    assert shoelace_area(circle_curve(512)) == pytest.approx(np.pi, abs=1e-4)


def test_shoelace_orientation_independent():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert shoelace_area(sq[::-1]) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-5, 5), st.floats(-5, 5))
def test_shoelace_scales_quadratically(r, cx, cy):
    a = shoelace_area(circle_curve(256, r, (cx, cy)))
    assert a == pytest.approx(shoelace_area(circle_curve(256)) * r * r, rel=1e-12)


def test_self_intersection_detected():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float)
    assert find_self_intersection(bowtie) is not None
    with pytest.raises(SelfIntersecting):
        shoelace_area(bowtie)
    with pytest.raises(SelfIntersecting):
        PlanarCurve(_densify(bowtie))


def test_annulus_rejected():
    # outer circle, bridge in, inner circle backwards, bridge out: edges overlap on the bridge
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    outer = np.stack([np.cos(t), np.sin(t)], 1)
    inner = 0.5 * outer[::-1]
    ring = np.vstack([outer, [outer[0]], inner, [inner[-1]]])
    with pytest.raises(SelfIntersecting):
        PlanarCurve(ring)


def test_curve_needs_enough_vertices():
    with pytest.raises(ValueError):
        PlanarCurve(np.zeros((10, 2)))


def test_clockwise_input_is_reoriented():
    c = circle_curve(128)
    cw = PlanarCurve(c.vertices[::-1])
    np.testing.assert_allclose(cw.curvature(), 1.0, atol=1e-3)
    # outward normals on the unit circle coincide with the position
    np.testing.assert_allclose(cw.normals(), cw.vertices, atol=1e-12)


# --- polygon HK ---------------------------------------------------------------------------

def test_polygon_hk_circle():
    assert polygon_hk(ISO2, circle_curve(512)) == pytest.approx(1.0, abs=1e-4)


def test_polygon_hk_quarter_circle():
    K = Cone([0, 0], [1, 1], np.pi / 4)
    assert polygon_hk(ISO2, arc_curve(512), K) == pytest.approx(1.0, abs=1e-4)


def test_polygon_hk_ellipse_strict():
    assert polygon_hk(ISO2, ellipse_curve(512)) > 1.5


def test_polygon_hk_wulff_ellipse():
    # the 2:1 ellipse is the Wulff shape of diag(4, 1)
    assert polygon_hk(ELL2, ellipse_curve(1024)) == pytest.approx(1.0, abs=1e-4)


def test_polygon_hk_rejects_concave():
    t = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    r = 1 + 0.3 * np.cos(5 * t)
    with pytest.raises(NotMeanConvex):
        polygon_hk(ISO2, PlanarCurve(np.stack([r * np.cos(t), r * np.sin(t)], 1)))


@pytest.mark.parametrize("F", [ISO2, ELL2], ids=["isotropic", "ellipsoidal"])
def test_polygon_agrees_with_generic(F):
    patch = radial_patch(epsilon=0.1, coefficients=[0, 0, 1], dimension=2)
    generic = hk_ratio(F, sample(patch, 64))
    oracle = polygon_hk(F, curve_from_patch(patch, 512))
    assert abs(oracle - generic) / generic <= 1e-2


# --- raster sweep ---------------------------------------------------------------------------

@pytest.mark.parametrize("grid", [64, 128, 256])
def test_raster_covers_circle(grid):
    assert raster_sweep(ISO2, circle_curve(512), grid) >= 0.999


def test_raster_covers_quarter_and_ellipse():
    assert raster_sweep(ISO2, arc_curve(512), 128) >= 0.999
    assert raster_sweep(ISO2, ellipse_curve(512), 128) >= 0.999
    assert raster_sweep(ELL2, ellipse_curve(512), 128) >= 0.999


# --- scenarios ------------------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["circle_2d", "quarter_circle_2d"])
def test_planar_scenarios_agree(name):
    sc = load_scenario(SCENARIOS / f"{name}.json")
    orc = planar_oracle(sc)
    assert orc["polygon_hk"] == pytest.approx(1.0, abs=1e-3)
    assert orc["raster_coverage"] >= 0.999
    rep = run(sc, checks=["hk"])
    assert rep.checks["oracle"]
    assert rep.oracle["relative_difference"] <= 1e-2
