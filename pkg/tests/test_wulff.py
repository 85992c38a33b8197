import numpy as np
import pytest

from wulffkit.domain import Cone, HalfSpace
from wulffkit.errors import EmptyCap, NoTrim, NotInside
from wulffkit.gauge import CapillaryGauge, IsotropicGauge
from wulffkit.hk import sample_omega
from wulffkit.surface import enclosed_volume, radial_patch, sample
from wulffkit.wulff import (
    BOUNDARY_REGULAR,
    INTERIOR_OF_SIGMA,
    inner_touch,
    outer_touch,
    touch_many,
    wulff_cap,
    wulff_patch,
)

from conftest import RES


# --- construction ----------------------------------------------------------------

def test_isotropic_wulff_is_sphere(iso):
    s = sample(wulff_patch(iso), 16)
    np.testing.assert_allclose(np.linalg.norm(s.x, axis=1), 1.0, atol=1e-14)


def test_ellipsoidal_wulff_is_ellipsoid(ell, ell_wulff):
    x = ell_wulff.x
    np.testing.assert_allclose(x[:, 0] ** 2 / 4 + x[:, 1] ** 2 + x[:, 2] ** 2, 1.0, atol=1e-12)
    V, _, _, _ = wulff_patch(ell).mesh(32)
    assert np.max(np.abs(ell.dual_gauge(V) - 1.0)) <= 1e-6


def test_capillary_wulff_is_shifted_sphere():
    e = np.array([0.0, 0.0, 1.0])
    s = sample(wulff_patch(CapillaryGauge(np.pi / 3, axis=e)), 16)
    np.testing.assert_allclose(np.linalg.norm(s.x + 0.5 * e, axis=1), 1.0, atol=1e-14)


def test_wulff_cap_through_center_is_hemisphere(iso, upper):
    s = sample(wulff_cap(iso, None, 1.0, upper), 32)
    assert s.area == pytest.approx(2 * np.pi, abs=1e-12)
    assert enclosed_volume(s, upper) == pytest.approx(2 * np.pi / 3, abs=1e-12)


def test_wulff_cap_errors(ell):
    with pytest.raises(EmptyCap):
        wulff_cap(ell, None, 1.0, HalfSpace([0, 0, -1.0], -3.0))
    with pytest.raises(NoTrim):
        wulff_cap(ell, None, 1.0, HalfSpace([0, 0, -1.0], 3.0))


def test_radial_cap_in_cone_is_free_boundary(iso, cone):
    from wulffkit.surface import boundary_trace

    tr = boundary_trace(wulff_cap(iso, None, 1.0, cone), iso, RES)
    normals = cone.normal_at(tr.x)
    assert np.max(np.abs(np.einsum("ij,ij->i", tr.nu_F, normals))) <= 1e-12


# --- inner touch -------------------------------------------------------------------

def test_inner_touch_sphere(iso, sphere_surf):
    t = inner_touch(iso, sphere_surf, [0.5, 0.0, 0.0])
    assert t.radius == pytest.approx(0.5, abs=1e-10)
    np.testing.assert_allclose(t.point, [1, 0, 0], atol=1e-6)
    assert t.stratum == INTERIOR_OF_SIGMA
    assert t.reconstruction_error <= 1e-8


def test_inner_touch_wulff_center_ties(ell, ell_wulff):
    t = inner_touch(ell, ell_wulff, [0.0, 0.0, 0.0])
    assert t.radius == pytest.approx(1.0, abs=1e-10)
    assert t.ties == ell_wulff.size
    assert t.sample_index == 0


def test_inner_touch_hemisphere_interior(iso, hemi_surf, upper):
    t = inner_touch(iso, hemi_surf, [0.0, 0.0, 0.3], upper)
    assert t.stratum == INTERIOR_OF_SIGMA
    assert t.radius == pytest.approx(0.7, abs=1e-8)


def test_inner_touch_near_rim_hits_boundary(iso):
    # large cap z >= -0.5: the radial projection of y leaves the cap, so the rim is nearest
    K = HalfSpace([0, 0, -1.0], 0.5)
    surf = sample(radial_patch(cutter=K), 32)
    t = inner_touch(iso, surf, [0.6, 0.0, -0.49], K)
    assert t.stratum == BOUNDARY_REGULAR
    assert t.radius == pytest.approx(np.hypot(np.sqrt(0.75) - 0.6, 0.01), rel=1e-6)


def test_inner_touch_outside(iso, sphere_surf, hemi_surf, upper):
    with pytest.raises(NotInside):
        inner_touch(iso, sphere_surf, [2.0, 0.0, 0.0])
    with pytest.raises(NotInside):
        inner_touch(iso, hemi_surf, [0.0, 0.0, -0.3], upper)


def test_inner_touch_monotone_along_segment(ell, ell_cap, upper):
    Y, _ = sample_omega(ell_cap, upper, 100, seed=5)
    first = touch_many(ell, ell_cap, Y, upper)
    X = np.array([t.point for t in first])
    r = np.array([t.radius for t in first])
    s = np.random.default_rng(6).uniform(0.05, 0.95, len(Y))
    Y2 = Y + s[:, None] * (X - Y)
    r2 = np.array([t.radius for t in touch_many(ell, ell_cap, Y2, upper)])
    assert np.all(r2 < r)
    np.testing.assert_allclose(r2, (1 - s) * r, rtol=1e-6)


@pytest.mark.parametrize("which", ["hemi", "cone"])
def test_no_boundary_touch_on_admissible_caps(iso, hemi_surf, cone_surf, upper, cone, which):
    surf, K = (hemi_surf, upper) if which == "hemi" else (cone_surf, cone)
    Y, _ = sample_omega(surf, K, 300, seed=7)
    strata = {t.stratum for t in touch_many(iso, surf, Y, K)}
    assert strata == {INTERIOR_OF_SIGMA}


# --- outer touch ---------------------------------------------------------------------

def test_outer_touch_sphere(iso, sphere_surf):
    t = outer_touch(iso, sphere_surf)
    assert t.radius == pytest.approx(1.0, abs=1e-12)
    assert t.curvature >= 1.0 / t.radius - 1e-9


def test_outer_touch_cone_cap(iso, cone):
    surf = sample(radial_patch(2.0, cutter=cone), 32)
    t = outer_touch(iso, surf)
    assert t.radius == pytest.approx(2.0, abs=1e-12)
    assert t.curvature == pytest.approx(0.5, abs=1e-12)


def test_outer_touch_perturbed(iso):
    surf = sample(radial_patch(epsilon=0.05, coefficients=[1 / 3, 0, 2 / 3]), 32)
    t = outer_touch(iso, surf)
    assert t.radius == pytest.approx(1.05, abs=1e-8)
    assert abs(abs(t.point[2]) - 1.05) <= 1e-6
    assert t.curvature - 1.0 / t.radius >= -1e-6


def test_planar_touch():
    F = IsotropicGauge(2)
    K = Cone([0.0, 0.0], [1.0, 1.0], np.pi / 4)
    surf = sample(radial_patch(dimension=2, cutter=K), 32)
    t = inner_touch(F, surf, [0.3, 0.4], K)
    assert t.radius == pytest.approx(0.5, abs=1e-8)
    assert t.stratum == INTERIOR_OF_SIGMA
