"""Heintze-Karcher functional, sweep volume, coverage and equality diagnostics.

For a mean-convex surface with admissible boundary contact

    |Omega| <= sweep_volume <= n/(n+1) * int F(nu)/H^F dA,

where the sweep volume integrates the Jacobian ``F(nu) prod_i (1 - t kappa_i^F)``
of the parallel map ``zeta_F(x, t) = x - t nu_F(x)`` over
``0 < t <= 1/max_i kappa_i^F(x)``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .domain import (
    ADMISSIBLE_TOL,
    EDGE,
    REGULAR,
    ConvexContainer,
    Cone,
    Polytope,
    admissibility_report,
)
from .errors import InadmissibleSurface, NotMeanConvex, SamplingFailure
from .gauge import AnisotropyGauge
from .inside import ray_parity
from .surface import (
    AnisotropicShapeData,
    QuadraturedSurface,
    anisotropic_shape,
    boundary_points,
    boundary_trace,
    closed_cycle,
    enclosed_volume,
)
from .wulff import INTERIOR_OF_SIGMA, outer_touch, touch_many

SCHEMA_VERSION = 1
H_MIN = 1e-8
EPS_EQ = 5e-3
HK_TOL = 1e-3
CHAIN_TOL = 1e-3
MINKOWSKI_TOL = 1e-6
COVERAGE_TOL = 1e-6
TOUCH_TOL = 1e-6
OVERSAMPLING_CAP = 100
CENTER_TOL = 1e-3


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _check_mean_convex(shape):
    k = int(np.argmin(shape.H_F))
    if not shape.H_F[k] > H_MIN:
        raise NotMeanConvex(f"H^F = {shape.H_F[k]:.3e} at sample {k}", k, float(shape.H_F[k]))


def hk_functional(F: AnisotropyGauge, surf: QuadraturedSurface,
                  shape: AnisotropicShapeData | None = None) -> float:
    """``int F(nu) / H^F dA``."""
    if shape is None:
        shape = anisotropic_shape(F, surf)
    _check_mean_convex(shape)
    return float(np.sum(surf.weights * shape.F_nu / shape.H_F))


def check_admissible(F, surf, K, tol=ADMISSIBLE_TOL):
    """Admissibility record for a surface with boundary; raises if the contact condition fails."""
    if surf.closed:
        return None
    trace = boundary_trace(surf.patch, F, surf.resolution)
    rep = admissibility_report(F, trace, K, tol)
    if not rep.admissible:
        raise InadmissibleSurface(
            f"boundary contact condition violated: max <nu_F, Nbar> = {rep.max_contact:.3e}"
        )
    return rep


def hk_ratio(F: AnisotropyGauge, surf: QuadraturedSurface, K: ConvexContainer | None = None,
             shape: AnisotropicShapeData | None = None) -> float:
    """``int F(nu)/H^F dA / ((n+1)/n |Omega|)``; at least 1 for admissible inputs."""
    check_admissible(F, surf, K)
    n = surf.n
    return hk_functional(F, surf, shape) / ((n + 1) / n * enclosed_volume(surf, K))


@dataclass
class MinkowskiResult:
    surface: float
    boundary: float
    area: float

    @property
    def normalized(self):
        return abs(self.surface) / self.area

    @property
    def consistency(self):
        return abs(self.surface - self.boundary) / self.area


def minkowski_residual(F, surf, shape=None, origin=None) -> MinkowskiResult:
    """``int n F(nu) - H^F <x - o, nu> dA`` and the boundary form ``int <mu_F, x - o> ds``.

    The integrand is the surface divergence of ``F(nu)(x - o) - <x - o, nu> nu_F``,
    so both numbers agree; the first vanishes for free-boundary surfaces
    in cones with vertex ``o``.
    """
    if shape is None:
        shape = anisotropic_shape(F, surf)
    o = np.zeros(surf.dimension) if origin is None else np.asarray(origin, dtype=float)
    n = surf.n
    integrand = n * shape.F_nu - shape.H_F * _dot(surf.x - o, surf.nu)
    total = float(np.sum(surf.weights * integrand))
    if surf.closed:
        bd = 0.0
    else:
        tr = boundary_trace(surf.patch, F, surf.resolution)
        bd = float(np.sum(tr.weights * _dot(tr.mu_F, tr.x - o)))
    return MinkowskiResult(total, bd, surf.area)


def parallel_map(surf: QuadraturedSurface, shape: AnisotropicShapeData, index, t):
    """``zeta_F(x, t) = x - t nu_F(x)`` at sample(s) ``index``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    return surf.x[index] - t[..., None] * shape.nu_F[index]


@dataclass
class SweepRegion:
    surf: QuadraturedSurface
    shape: AnisotropicShapeData
    t_max: np.ndarray
    gauge: AnisotropyGauge | None = None


def sweep_region(F, surf, shape=None) -> SweepRegion:
    """``Z = {(x, t) : 0 < t <= 1/max_i kappa_i^F(x)}``."""
    if shape is None:
        shape = anisotropic_shape(F, surf)
    _check_mean_convex(shape)
    kmax = shape.kappa[:, -1]
    return SweepRegion(surf, shape, 1.0 / kmax, F)


def _elementary_symmetric(kappa):
    n = kappa.shape[-1]
    e = [np.ones(kappa.shape[:-1])] + [np.zeros(kappa.shape[:-1]) for _ in range(n)]
    for i in range(n):
        for k in range(i + 1, 0, -1):
            e[k] = e[k] + kappa[..., i] * e[k - 1]
    return e


def sweep_volume(F, region: SweepRegion) -> float:
    """``int_Sigma int_0^{t_max} F(nu) prod_i (1 - t kappa_i^F) dt dA``, inner integral exact."""
    sh, T = region.shape, region.t_max
    e = _elementary_symmetric(sh.kappa)
    inner = np.zeros_like(T)
    for k, ek in enumerate(e):
        inner += (-1) ** k * ek * T ** (k + 1) / (k + 1)
    return float(np.sum(region.surf.weights * sh.F_nu * inner))


@dataclass
class CoverageResult:
    fraction: float
    witnesses: list
    n_samples: int
    n_drawn: int
    boundary_touches: int

    def as_dict(self):
        return {"fraction": self.fraction, "n_samples": self.n_samples, "n_drawn": self.n_drawn,
                "boundary_touches": self.boundary_touches, "witnesses": self.witnesses}


def sample_omega(surf, K, n_samples, seed, resolution=None):
    """Uniform points in Omega: rejection from a bounding box, kept if in ``K`` and inside Sigma."""
    rng = np.random.default_rng(seed)
    cyc = closed_cycle(surf.patch, K, resolution or max(32, surf.resolution))
    lo, hi = cyc.bbox
    pad = 1e-9 * (hi - lo).max()
    lo, hi = lo - pad, hi + pad
    out, drawn = [], 0
    batch = max(64, n_samples)
    while sum(len(o) for o in out) < n_samples:
        if drawn >= OVERSAMPLING_CAP * n_samples:
            raise SamplingFailure(f"rejection sampling exceeded {OVERSAMPLING_CAP}x oversampling")
        P = rng.uniform(lo, hi, size=(batch, surf.dimension))
        drawn += batch
        keep = ray_parity(cyc, P)
        if K is not None:
            keep &= K.contains(P)
        out.append(P[keep])
    return np.vstack(out)[:n_samples], drawn


def coverage_check(F, surf, K=None, n_samples=1000, seed=0, shape=None, chunk=250,
                   tol=COVERAGE_TOL, admissible_tol=ADMISSIBLE_TOL):
    """Fraction of random points of Omega reached by the parallel map from the interior.

    A point ``y`` is covered when its first-touch point is interior to Sigma
    and ``r_y <= t_max(x_y)``.
    """
    check_admissible(F, surf, K, admissible_tol)
    if shape is None:
        shape = anisotropic_shape(F, surf)
    _check_mean_convex(shape)
    Y, drawn = sample_omega(surf, K, n_samples, seed)
    witnesses, boundary = [], 0
    ok = 0
    tol = tol * surf.patch.length_scale
    for i in range(0, len(Y), chunk):
        for k, t in enumerate(touch_many(F, surf, Y[i:i + chunk], K)):
            tmax = 1.0 / t.curvature if t.curvature > 0 else np.inf
            good = t.stratum == INTERIOR_OF_SIGMA and t.radius <= tmax + tol
            if t.stratum != INTERIOR_OF_SIGMA:
                boundary += 1
            if good:
                ok += 1
            else:
                witnesses.append({"index": i + k, "point": Y[i + k].tolist(),
                                  "stratum": t.stratum, "radius": t.radius,
                                  "t_max": float(tmax)})
    return CoverageResult(ok / len(Y), witnesses, len(Y), int(drawn), boundary)


# ---------------------------------------------------------------------------
# equality diagnosis
# ---------------------------------------------------------------------------

@dataclass
class EqualityDiagnosis:
    flagged: bool
    ratio: float
    umbilicity: float
    center: list
    wulff_residual: float
    cone_consistency: float | None
    classification: str
    center_to_vertex: float | None = None

    def as_dict(self):
        return asdict(self)


def _apex(K):
    if isinstance(K, Cone):
        return K.vertex
    if isinstance(K, Polytope):
        N, b = K.normals, K.offsets
        if np.linalg.matrix_rank(N) < K.dimension:
            return None
        p, *_ = np.linalg.lstsq(N, b, rcond=None)
        if np.max(np.abs(N @ p - b)) <= K.tau:
            return p
    return None


def equality_diagnosis(F, surf, K, report, shape=None, eps=EPS_EQ) -> EqualityDiagnosis:
    """Near-equality flag and rigidity residuals.

    ``c_hat`` is the area-weighted mean of ``x - (n/H^F) nu_F``; on a Wulff
    cap it is the center and every ``F°(x - c_hat)`` equals ``n/H^F``.
    """
    ratio = float(getattr(report, "hk_ratio", report))
    if shape is None:
        shape = anisotropic_shape(F, surf)
    n = surf.n
    rad = n / shape.H_F
    umb = float(np.max(np.abs(shape.kappa - (shape.H_F / n)[:, None])))
    pts = surf.x - rad[:, None] * shape.nu_F
    c = surf.weights @ pts / surf.weights.sum()
    wres = float(np.max(np.abs(F.dual_gauge(surf.x - c) - rad)))
    flagged = bool(ratio <= 1.0 + eps)
    cone_res, to_vertex = None, None
    if surf.closed:
        cls = "closed"
    else:
        xb, _, _, _ = boundary_points(surf.patch, surf.resolution)
        labels = K.classify_many(xb)
        normals = [lab.normals for lab in labels]
        cone_res = float(max(abs((x - c) @ nb) for x, ns in zip(xb, normals) for nb in ns))
        apex = _apex(K)
        facets = {f for lab in labels for f in lab.facets}
        kinds = {lab.kind for lab in labels}
        if apex is not None:
            to_vertex = float(np.linalg.norm(c - apex))
        if to_vertex is not None and to_vertex <= CENTER_TOL * surf.patch.length_scale:
            cls = "centered_at_vertex"
        elif isinstance(K, Polytope) and kinds == {REGULAR} and len(facets) == 1:
            cls = "flat_portion"
        elif isinstance(K, Polytope) and (EDGE in kinds or len(facets) == 2):
            cls = "wedge_portion"
        else:
            cls = "undetermined"
    return EqualityDiagnosis(flagged, float(ratio), umb, c.tolist(), wres, cone_res, cls, to_vertex)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

ALL_CHECKS = ("admissibility", "hk", "minkowski", "sweep", "coverage", "equality", "touch")


def default_tolerances():
    return {"admissibility": ADMISSIBLE_TOL, "hk": HK_TOL, "chain": CHAIN_TOL,
            "minkowski_consistency": MINKOWSKI_TOL, "equality": EPS_EQ,
            "coverage": COVERAGE_TOL, "touch": TOUCH_TOL, "mean_convexity": H_MIN}


@dataclass
class VerificationReport:
    name: str
    dimension: int
    resolution: int
    seed: int
    checks: dict = field(default_factory=dict)
    volume: float | None = None
    area: float | None = None
    hk_functional: float | None = None
    hk_ratio: float | None = None
    sweep_volume: float | None = None
    minkowski_residual: dict | None = None
    admissibility: dict | None = None
    coverage_fraction: float | None = None
    coverage: dict | None = None
    equality: dict | None = None
    touch: dict | None = None
    oracle: dict | None = None
    tolerances: dict = field(default_factory=default_tolerances)
    wall_time: float | None = None
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self, include_wall_time=False):
        d = asdict(self)
        if not include_wall_time:
            d.pop("wall_time")
        d["passed"] = self.passed
        return _plain(d)

    def to_json(self, include_wall_time=False):
        return json.dumps(self.to_dict(include_wall_time), sort_keys=True, indent=2) + "\n"

    CSV_FIELDS = ("name", "status", "volume", "hk_functional", "hk_ratio", "sweep_volume",
                  "minkowski_normalized", "coverage_fraction", "equality_flagged", "seed")

    def csv_row(self):
        mk = self.minkowski_residual or {}
        eq = self.equality or {}
        vals = {"name": self.name, "status": "PASS" if self.passed else "FAIL",
                "volume": self.volume, "hk_functional": self.hk_functional,
                "hk_ratio": self.hk_ratio, "sweep_volume": self.sweep_volume,
                "minkowski_normalized": mk.get("normalized"),
                "coverage_fraction": self.coverage_fraction,
                "equality_flagged": eq.get("flagged"), "seed": self.seed}
        return ["" if vals[k] is None else (repr(vals[k]) if isinstance(vals[k], float)
                                             else str(vals[k])) for k in self.CSV_FIELDS]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def verify(F, surf, K=None, checks=ALL_CHECKS, name="surface", seed=0, n_samples=1000,
           expect_equality=None, touch_origin=None, tolerances=None) -> VerificationReport:
    """Run the requested checks in dependency order and collect a report.

    ``tolerances`` overrides entries of :func:`default_tolerances`; the
    values actually used are stored in the report.  Precondition failures
    (inadmissible contact, mean convexity) propagate.
    """
    t0 = time.perf_counter()
    tol = default_tolerances()
    unknown = set(tolerances or {}) - set(tol)
    if unknown:
        raise ValueError(f"unknown tolerance keys {sorted(unknown)}")
    tol.update({k: float(v) for k, v in (tolerances or {}).items()})
    checks = [c for c in ALL_CHECKS if c in set(checks)]
    rep = VerificationReport(name, surf.dimension, surf.resolution, int(seed), tolerances=tol)
    K_ = None if (K is None or getattr(K, "kind", "") == "whole") else K
    shape = anisotropic_shape(F, surf)
    rep.area = surf.area
    needs_hk = {"hk", "sweep", "equality", "coverage"} & set(checks)
    if "admissibility" in checks or needs_hk:
        adm = check_admissible(F, surf, K_, tol["admissibility"])
        if adm is not None:
            rep.admissibility = adm.as_dict()
        if "admissibility" in checks:
            rep.checks["admissibility"] = True
    if needs_hk:
        rep.volume = enclosed_volume(surf, K_)
        rep.hk_functional = hk_functional(F, surf, shape)
        n = surf.n
        rep.hk_ratio = rep.hk_functional / ((n + 1) / n * rep.volume)
        if "hk" in checks:
            ok = rep.hk_ratio >= 1.0 - tol["hk"]
            if expect_equality:
                ok = ok and abs(rep.hk_ratio - 1.0) <= tol["hk"]
            rep.checks["hk"] = bool(ok)
    if "minkowski" in checks:
        mk = minkowski_residual(F, surf, shape)
        rep.minkowski_residual = {"surface": mk.surface, "boundary": mk.boundary,
                                  "normalized": mk.normalized, "consistency": mk.consistency}
        rep.checks["minkowski"] = bool(mk.consistency <= tol["minkowski_consistency"])
    if "sweep" in checks:
        region = sweep_region(F, surf, shape)
        rep.sweep_volume = sweep_volume(F, region)
        n = surf.n
        ok = (rep.volume <= rep.sweep_volume * (1 + tol["chain"])
              and rep.sweep_volume <= n / (n + 1) * rep.hk_functional * (1 + tol["chain"]))
        rep.checks["sweep"] = bool(ok)
    if "coverage" in checks:
        cov = coverage_check(F, surf, K_, n_samples, seed, shape, tol=tol["coverage"],
                             admissible_tol=tol["admissibility"])
        rep.coverage_fraction = cov.fraction
        rep.coverage = cov.as_dict()
        rep.checks["coverage"] = bool(cov.fraction == 1.0 and cov.boundary_touches == 0)
    if "equality" in checks:
        eq = equality_diagnosis(F, surf, K_, rep.hk_ratio, shape, tol["equality"])
        rep.equality = eq.as_dict()
        rep.checks["equality"] = True if expect_equality is None else (eq.flagged == expect_equality)
    if "touch" in checks:
        t = outer_touch(F, surf, touch_origin)
        cert = t.curvature - 1.0 / t.radius
        rep.touch = {"outer_radius": t.radius, "point": t.point.tolist(),
                     "min_kappa": t.curvature, "certificate": cert}
        rep.checks["touch"] = bool(cert >= -tol["touch"])
    rep.wall_time = time.perf_counter() - t0
    return rep
