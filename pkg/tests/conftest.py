from pathlib import Path

import numpy as np
import pytest

from wulffkit.domain import Cone, HalfSpace
from wulffkit.gauge import CapillaryGauge, EllipsoidalGauge, IsotropicGauge, PerturbedGauge
from wulffkit.surface import radial_patch, sample, sphere_patch
from wulffkit.wulff import wulff_cap, wulff_patch

RES = 64
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def builtin_gauges():
    iso = IsotropicGauge()
    return {
        "isotropic": iso,
        "ellipsoidal": EllipsoidalGauge(np.diag([4.0, 1.0, 1.0])),
        "capillary": CapillaryGauge(np.pi / 3),
        "perturbed": PerturbedGauge(iso, 0.05, [1 / 3, 0.0, 2 / 3]),
    }


@pytest.fixture(scope="session")
def gauges():
    return builtin_gauges()


@pytest.fixture(scope="session")
def iso():
    return IsotropicGauge()


@pytest.fixture(scope="session")
def ell():
    return EllipsoidalGauge(np.diag([4.0, 1.0, 1.0]))


@pytest.fixture(scope="session")
def upper():
    # the half-space {z >= 0}
    return HalfSpace([0.0, 0.0, -1.0], 0.0)


@pytest.fixture(scope="session")
def cone():
    return Cone([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], np.pi / 3)


@pytest.fixture(scope="session")
def sphere_surf():
    return sample(sphere_patch(), RES)


@pytest.fixture(scope="session")
def hemi_surf(upper):
    return sample(radial_patch(cutter=upper), RES)


@pytest.fixture(scope="session")
def cone_surf(cone):
    return sample(radial_patch(cutter=cone), RES)


@pytest.fixture(scope="session")
def ell_wulff(ell):
    return sample(wulff_patch(ell), RES)


@pytest.fixture(scope="session")
def ell_cap(ell, upper):
    return sample(wulff_cap(ell, None, 1.0, upper), RES)


@pytest.fixture(scope="session")
def perturbed_surf():
    return sample(radial_patch(epsilon=0.1, coefficients=[0, 0, 1]), RES)


def random_unit(rng, n, d=3):
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# --- acceptance summary -----------------------------------------------------------------
# Acceptance tests tag themselves with record_property("criterion", ...); one line per
# criterion is printed at the end of the session whether or not output capture is on.

_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(props["criterion"], []).append(
            (report.outcome == "passed", props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        ok = all(o for o, _ in _CRITERIA[name])
        detail = "; ".join(d for _, d in _CRITERIA[name] if d)
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
