"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines at session end.

Run alone with ``pytest tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from wulffkit.cli import main
from wulffkit.gauge import IsotropicGauge, geodesic_support_check
from wulffkit.hk import coverage_check, hk_ratio, minkowski_residual
from wulffkit.domain import wedge_touch_inequalities
from wulffkit.scenario import load_scenario, planar_oracle, run
from wulffkit.surface import anisotropic_shape, enclosed_volume, sample

from conftest import SCENARIOS, builtin_gauges, random_unit

RES = 64
N_COVER = 1000
N_PROPERTY = 10_000


@pytest.fixture
def crit(record_property):
    """``crit(name)`` tags the test; ``crit(name, detail)`` updates the printed detail."""
    def tag(name, detail=None):
        record_property("criterion", name)
        if detail is not None:
            record_property("detail", detail)
    return tag


def _scenario(name):
    return load_scenario(SCENARIOS / f"{name}.json")


def _fmt(**vals):
    return ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in vals.items())


def test_criterion_01_closed_sphere(crit):
    crit("1 closed equality: unit sphere")
    sc = _scenario("sphere")
    t0 = time.perf_counter()
    rep = run(sc, resolution=RES)
    dt = time.perf_counter() - t0
    crit("1 closed equality: unit sphere", _fmt(ratio_err=abs(rep.hk_ratio - 1), seconds=dt))
    assert abs(rep.hk_ratio - 1.0) <= 1e-3
    assert dt < 5.0


def test_criterion_02_hemisphere(crit):
    crit("2 half-space free boundary: hemisphere")
    rep = run(_scenario("hemisphere"), checks=["admissibility", "hk"], resolution=RES)
    res = rep.admissibility["free_boundary_residual"]
    crit("2 half-space free boundary: hemisphere", _fmt(ratio_err=abs(rep.hk_ratio - 1), residual=res))
    assert abs(rep.hk_ratio - 1.0) <= 1e-3
    assert res <= 1e-8


def test_criterion_03_cone_rigidity(crit):
    crit("3 cone rigidity: cap in cone of half-angle pi/3")
    sc = _scenario("cone_cap")
    surf = sample(sc.patch, RES)
    F, K = sc.gauge, sc.container
    # |Omega| of the unit spherical sector is pi r^3 / 3; compare the functional against it
    hk = hk_ratio(F, surf, K) * 1.5 * enclosed_volume(surf, K)
    ratio = hk / (1.5 * np.pi / 3)
    mk = minkowski_residual(F, surf).normalized
    rep = run(sc, checks=["hk", "equality"], resolution=RES)
    eq = rep.equality
    crit("3 cone rigidity: cap in cone of half-angle pi/3",
         _fmt(ratio_err=abs(ratio - 1), minkowski=mk, center_to_vertex=eq["center_to_vertex"]))
    assert abs(ratio - 1.0) <= 1e-3
    assert mk <= 1e-4
    assert eq["flagged"]
    assert eq["center_to_vertex"] <= 1e-3


def test_criterion_04_anisotropic_rigidity(crit):
    crit("4 anisotropic rigidity: ellipsoidal Wulff cap")
    sc = _scenario("ellipsoid_cap")
    rep = run(sc, checks=["admissibility", "hk"], resolution=RES)
    sh = anisotropic_shape(sc.gauge, sample(sc.patch, RES))
    r = sc.patch.map.radius
    kerr = float(np.max(np.abs(sh.kappa - 1.0 / r)))
    res = rep.admissibility["free_boundary_residual"]
    crit("4 anisotropic rigidity: ellipsoidal Wulff cap",
         _fmt(residual=res, ratio_err=abs(rep.hk_ratio - 1), kappa_err=kerr))
    assert res <= 1e-6
    assert abs(rep.hk_ratio - 1.0) <= 2e-3
    assert kerr <= 5e-4


def test_criterion_05_strictness(crit):
    crit("5 strictness: Legendre-perturbed sphere")
    rep = run(_scenario("perturbed"), checks=["hk", "equality"], resolution=RES)
    crit("5 strictness: Legendre-perturbed sphere",
         _fmt(ratio=rep.hk_ratio, flagged=rep.equality["flagged"]))
    assert rep.hk_ratio >= 1.001
    assert not rep.equality["flagged"]


def test_criterion_06_capillary_reduction(crit):
    crit("6 capillary-gauge reduction: cap with contact angle pi/3")
    sc = _scenario("capillary_cap")
    surf = sample(sc.patch, RES)
    rep = run(sc, checks=["admissibility"], resolution=RES)
    res = rep.admissibility["free_boundary_residual"]
    HF = anisotropic_shape(sc.gauge, surf).H_F
    H = anisotropic_shape(IsotropicGauge(), surf).H_F
    dH = float(np.max(np.abs(HF - H)))
    crit("6 capillary-gauge reduction: cap with contact angle pi/3", _fmt(residual=res, H_diff=dH))
    assert res <= 1e-6
    assert dH <= 1e-10


SUITE = sorted(p.stem for p in SCENARIOS.glob("*.json") if not p.name.endswith(".report.json"))


def test_criterion_07_chain(crit):
    crit("7 chain inequality on the suite")
    worst, wulff_err = 0.0, 0.0
    for name in SUITE:
        sc = _scenario(name)
        rep = run(sc, checks=["hk", "sweep"], resolution=RES)
        n = sc.dimension - 1
        lo = (rep.volume - rep.sweep_volume) / rep.sweep_volume
        hi = (rep.sweep_volume - n / (n + 1) * rep.hk_functional) / rep.hk_functional
        worst = max(worst, lo, hi)
        if sc.patch.closed and hasattr(sc.patch, "map"):
            wulff_err = max(wulff_err, abs(rep.sweep_volume - rep.volume) / rep.volume)
    crit("7 chain inequality on the suite", _fmt(scenarios=len(SUITE), worst_slack=worst,
                                                 wulff_sweep_err=wulff_err))
    assert worst <= 1e-3
    assert wulff_err <= 1e-4


@pytest.mark.parametrize("name", ["sphere", "hemisphere", "cone_cap", "ellipsoid_cap"])
def test_criterion_08_coverage(crit, name):
    label = "8 coverage on scenarios 1-4"
    crit(label)
    sc = _scenario(name)
    surf = sample(sc.patch, RES)
    cov = coverage_check(sc.gauge, surf, sc.container, n_samples=N_COVER, seed=sc.seed)
    crit(label, f"{name}: " + _fmt(fraction=cov.fraction, boundary_touches=cov.boundary_touches))
    assert cov.fraction == 1.0
    assert cov.boundary_touches == 0


def _geodesic_triples(rng, n):
    a = random_unit(rng, n)
    b = rng.standard_normal((n, 3))
    b -= np.einsum("ij,ij->i", b, a)[:, None] * a
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    L = rng.uniform(0.0, np.pi * (1 - 1e-6), n)
    s = rng.uniform(0.0, 1.0, n) * L

    def geo(t):
        return np.cos(t)[:, None] * a + np.sin(t)[:, None] * b

    return a, geo(s), geo(L)


def test_criterion_09_monotonicity(crit):
    crit("9 monotonicity on geodesic triples")
    rng = np.random.default_rng(9)
    margins = {}
    for name, F in builtin_gauges().items():
        x, y, z = _geodesic_triples(rng, N_PROPERTY)
        margins[name] = float(np.min(geodesic_support_check(F, x, y, z)))
    crit("9 monotonicity on geodesic triples", _fmt(min_margin=min(margins.values())))
    assert min(margins.values()) >= -1e-9


def test_criterion_10_dual_identities(crit):
    crit("10 dual-gauge identities")
    rng = np.random.default_rng(10)
    phi_err, cs = 0.0, -np.inf
    for F in builtin_gauges().values():
        z = random_unit(rng, N_PROPERTY)
        x = rng.standard_normal((N_PROPERTY, 3))
        phi_err = max(phi_err, float(np.max(np.abs(F.dual_gauge(F.cahn_hoffman(z)) - 1.0))))
        cs = max(cs, float(np.max(np.einsum("ij,ij->i", x, z) - F.dual_gauge(x) * F.eval(z))))
    crit("10 dual-gauge identities", _fmt(dual_err=phi_err, cauchy_schwarz_excess=cs))
    assert phi_err <= 1e-6
    assert cs <= 1e-9


def test_criterion_11_wedge_exclusion(crit):
    crit("11 wedge exclusion arithmetic")
    a = wedge_touch_inequalities(2 * np.pi / 3, 2 * np.pi / 3, np.pi / 2)
    b = wedge_touch_inequalities(np.pi / 3, np.pi / 3, np.pi / 2)
    crit("11 wedge exclusion arithmetic", f"obtuse={a}, acute={b}")
    assert a == (False, False)
    assert b == (True, True)


@pytest.mark.parametrize("name", ["circle_2d", "quarter_circle_2d"])
def test_criterion_12_planar_oracle(crit, name):
    label = "12 planar oracle agreement"
    crit(label)
    sc = _scenario(name)
    rep = run(sc, checks=["hk"], resolution=RES)
    orc = planar_oracle(sc)
    diff = abs(orc["polygon_hk"] - rep.hk_ratio) / rep.hk_ratio
    crit(label, f"{name}: " + _fmt(relative_difference=diff, raster_coverage=orc["raster_coverage"]))
    assert diff <= 1e-2
    assert orc["raster_coverage"] >= 0.999


def test_criterion_13_determinism(crit, tmp_path):
    crit("13 determinism of reports")
    src = SCENARIOS / "hemisphere.json"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(src), "--out", str(a)])
    main(["run", str(src), "--out", str(b)])
    same = a.read_bytes() == b.read_bytes()
    crit("13 determinism of reports", f"bytes={a.stat().st_size}, identical={same}")
    assert same
