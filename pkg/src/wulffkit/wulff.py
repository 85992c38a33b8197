"""Wulff shapes, Wulff caps and touching-radius searches.

The inner search grows Wulff shapes ``W_r(y)`` about an interior point until
they first touch the surface; the outer search shrinks a circumscribed Wulff
shape about an origin.  Both scan all quadrature samples and then polish the
best one with a trust-region Newton iteration in a local chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import EDGE
from .errors import NotInside
from .gauge import AnisotropyGauge
from .inside import winding_number
from .surface import (
    QuadraturedSurface,
    SphereMapPatch,
    WulffMap,
    anisotropic_shape,
    boundary_points,
    closed_cycle,
    sample_nodes,
)

REFINE_ITERS = 20
FD_STEP = 1e-4
TIE_TOL = 1e-9
BOUNDARY_TOL = 1e-6
RECON_TOL = 1e-6
GOLDEN_ITERS = 60
CRITICAL_TOL = 1e-4

INTERIOR_OF_SIGMA = "interior"
BOUNDARY_REGULAR = "boundary_regular"
BOUNDARY_EDGE = "boundary_edge"


def wulff_patch(F: AnisotropyGauge, x0=None, r=1.0, resolution=None) -> SphereMapPatch:
    """The closed patch ``z -> x0 + r Phi(z)``.  ``resolution`` is accepted for symmetry with :func:`sample`."""
    return SphereMapPatch(WulffMap(F, x0, r))


def wulff_cap(F: AnisotropyGauge, x0, r, cutter) -> SphereMapPatch:
    """The part of ``W_r(x0)`` inside ``cutter`` (a half-space or cone)."""
    return SphereMapPatch(WulffMap(F, x0, r), cutter=cutter)


@dataclass
class TouchResult:
    radius: float
    point: np.ndarray
    stratum: str
    curvature: float
    sample_index: int
    ties: int = 1
    reconstruction_error: float | None = None
    boundary_radius: float | None = None

    @property
    def interior(self):
        return self.stratum == INTERIOR_OF_SIGMA


def _dual(F, v):
    return F.dual_gauge(v)


def _scan(F, X, Y, sign=1.0):
    """Per point in ``Y``: best sample index, its value and the tie count."""
    M, K = Y.shape[0], X.shape[0]
    step = max(1, 2_000_000 // max(K, 1))
    idx = np.empty(M, dtype=int)
    best = np.empty(M)
    ties = np.empty(M, dtype=int)
    for i in range(0, M, step):
        sl = slice(i, min(M, i + step))
        vals = sign * _dual(F, X[None, :, :] - Y[sl, None, :])
        b = np.min(vals, axis=1)
        tied = vals <= b[:, None] + TIE_TOL * np.abs(b[:, None])
        # lowest index among the (near-)minimizers
        k = np.argmax(tied, axis=1)
        idx[sl] = k
        best[sl] = vals[np.arange(vals.shape[0]), k]
        ties[sl] = np.sum(tied, axis=1)
    return idx, sign * best, ties


def _refine(F, patch, anchor, Y, sign, radius0):
    """Trust-region Newton on ``sign * F°(X(s) - y)`` in the local chart about ``anchor``.

    Returns the chart offsets, the values and the final gradient norms.

    Gradient and Hessian by central differences on the smooth extension of
    the map; steps leaving the patch or failing to decrease are rejected and
    the region shrinks.
    """
    M, n = anchor.shape[0], patch.n
    h = FD_STEP * (patch.length_scale if not isinstance(patch, SphereMapPatch) else 1.0)

    def g(s, constrained=False):
        # the map extends smoothly past the cap edge; only steps must stay on the patch
        nodes = patch._local_nodes(anchor, s)
        X = patch._position(nodes)
        val = sign * _dual(F, X - Y)
        if constrained:
            val = np.where(patch._valid(X, nodes), val, np.inf)
        return val

    s = np.zeros((M, n))
    delta = np.full(M, radius0)
    g0 = g(s)
    E = np.eye(n)
    for _ in range(REFINE_ITERS):
        grad = np.zeros((M, n))
        H = np.zeros((M, n, n))
        for i in range(n):
            gp, gm = g(s + h * E[i]), g(s - h * E[i])
            grad[:, i] = (gp - gm) / (2 * h)
            H[:, i, i] = (gp - 2 * g0 + gm) / (h * h)
            for j in range(i + 1, n):
                hij = (g(s + h * (E[i] + E[j])) - g(s + h * (E[i] - E[j]))
                       - g(s - h * (E[i] - E[j])) + g(s - h * (E[i] + E[j]))) / (4 * h * h)
                H[:, i, j] = H[:, j, i] = hij
        finite = np.isfinite(grad).all(axis=1) & np.isfinite(H).all(axis=(1, 2))
        grad = np.where(finite[:, None], grad, 0.0)
        H = np.where(finite[:, None, None], H, np.eye(n))
        lam = np.linalg.eigvalsh(H)[:, 0]
        newton = -np.linalg.solve(H + 1e-300 * np.eye(n), grad[..., None])[..., 0]
        gn = np.linalg.norm(grad, axis=1)
        steep = -grad * (delta / np.where(gn > 0, gn, 1.0))[:, None]
        p = np.where((lam > 0)[:, None], newton, steep)
        pn = np.linalg.norm(p, axis=1)
        p = p * np.minimum(1.0, delta / np.where(pn > 0, pn, 1.0))[:, None]
        trial = g(s + p, constrained=True)
        acc = trial < g0
        s = np.where(acc[:, None], s + p, s)
        g0 = np.where(acc, trial, g0)
        delta = np.where(acc, np.maximum(delta, 2 * np.linalg.norm(p, axis=1)), delta / 4)
        if np.all((pn < 1e-13) | ~acc & (delta < 1e-13)):
            break
    # gradient at the final point: ~0 at a genuine critical point, O(1) when pinned at the rim
    gfin = np.stack([(g(s + h * E[i]) - g(s - h * E[i])) / (2 * h) for i in range(n)], axis=1)
    return s, sign * g0, np.linalg.norm(np.nan_to_num(gfin), axis=1)


def _boundary_min(F, patch, resolution, Y):
    """Smallest ``F°(x - y)`` over the boundary curve.

    Scans the boundary samples, then (for boundary curves with a periodic
    parameter) runs a golden-section search between the neighbours of the
    best sample.  Every evaluated value belongs to an actual boundary point,
    so the result never undershoots the true minimum.
    """
    xb, _, _, _ = boundary_points(patch, resolution)
    vals = _dual(F, xb[None, :, :] - Y[:, None, :])
    j = np.argmin(vals, axis=1)
    rows = np.arange(Y.shape[0])
    best = vals[rows, j]
    xbest = xb[j]
    curve = getattr(patch, "_boundary_position", None)
    if patch.dimension == 3 and curve is not None:
        m = xb.shape[0]
        dpsi = 2.0 * np.pi / m
        a, b = (j - 1) * dpsi, (j + 1) * dpsi
        ratio = (np.sqrt(5.0) - 1.0) / 2.0

        def f(psi):
            return _dual(F, curve(psi) - Y)

        c, d = b - ratio * (b - a), a + ratio * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(GOLDEN_ITERS):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c_new = b - ratio * (b - a)
            d_new = a + ratio * (b - a)
            c, d = np.where(left, c_new, d), np.where(left, c, d_new)
            fc, fd = np.where(left, f(c_new), fd), np.where(left, fc, f(d_new))
        psi = 0.5 * (a + b)
        fp = f(psi)
        better = fp < best
        best = np.where(better, fp, best)
        xbest = np.where(better[:, None], curve(psi), xbest)
    return best, xbest


def touch_many(F, surf: QuadraturedSurface, Y, K=None):
    """Vectorized inner touch for many points; returns a list of :class:`TouchResult`."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    patch = surf.patch
    idx, _, ties = _scan(F, surf.x, Y, 1.0)
    radius0 = 2.0 * np.pi / surf.resolution
    s, r, gnorm = _refine(F, patch, surf.anchor[idx], Y, 1.0, radius0)
    pts = sample_nodes(patch, patch._local_nodes(surf.anchor[idx], s))
    sh = anisotropic_shape(F, pts)
    kmax = sh.kappa[:, -1]
    recon = np.linalg.norm(pts.x - r[:, None] * sh.nu_F - Y, axis=1)
    strata = [INTERIOR_OF_SIGMA] * Y.shape[0]
    rb = np.full(Y.shape[0], np.inf)
    xbest = pts.x.copy()
    if not patch.closed:
        rb, xb = _boundary_min(F, patch, surf.resolution, Y)
        tol = BOUNDARY_TOL * patch.length_scale
        # the boundary wins when clearly lower, or when no worse and the interior
        # candidate is not a critical point (refinement stopped against the rim)
        pinned = (rb <= r + tol) & (gnorm > CRITICAL_TOL)
        for k in np.flatnonzero((rb < r - tol) | pinned):
            lab = K.classify(xb[k]) if K is not None else None
            strata[k] = BOUNDARY_EDGE if lab is not None and lab.kind == EDGE else BOUNDARY_REGULAR
            xbest[k] = xb[k]
    out = []
    for k in range(Y.shape[0]):
        interior = strata[k] == INTERIOR_OF_SIGMA
        out.append(TouchResult(
            radius=float(r[k]) if interior else float(rb[k]),
            point=xbest[k],
            stratum=strata[k],
            curvature=float(kmax[k]),
            sample_index=int(idx[k]),
            ties=int(ties[k]),
            reconstruction_error=float(recon[k]) if interior else None,
            boundary_radius=None if not np.isfinite(rb[k]) else float(rb[k]),
        ))
    return out


def inside_omega(surf: QuadraturedSurface, K, Y, resolution=None):
    """Winding-number membership of points in the region bounded by ``surf`` (and ``K``)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    cyc = closed_cycle(surf.patch, K, resolution or max(32, surf.resolution))
    w = winding_number(cyc, Y)
    ok = np.abs(w) > 0.5
    if K is not None:
        ok &= K.contains(Y, tol=K.tau)
    return ok


def inner_touch(F, surf: QuadraturedSurface, y, K=None) -> TouchResult:
    """First touch of the growing Wulff shapes ``W_r(y)`` with ``surf``.

    ``r_y = min F°(x - y)`` over the surface.  Interior touches carry the
    reconstruction error ``|x_y - r_y nu_F(x_y) - y|``.
    """
    y = np.asarray(y, dtype=float)
    if not inside_omega(surf, K, y[None])[0]:
        raise NotInside(f"point {y} is not inside the enclosed region")
    return touch_many(F, surf, y[None], K)[0]


def outer_touch(F, surf: QuadraturedSurface, origin=None) -> TouchResult:
    """Smallest circumscribed Wulff shape ``W_r0(origin)`` and its contact point.

    The certificate ``min_i kappa_i^F(x) - 1/r0`` is non-negative at an
    elliptic contact point; it is stored in ``curvature`` as ``min kappa``.
    """
    o = np.zeros(surf.dimension) if origin is None else np.asarray(origin, dtype=float)
    Y = o[None]
    idx, _, ties = _scan(F, surf.x, Y, -1.0)
    s, r, _ = _refine(F, surf.patch, surf.anchor[idx], Y, -1.0, 2.0 * np.pi / surf.resolution)
    pts = sample_nodes(surf.patch, surf.patch._local_nodes(surf.anchor[idx], s))
    sh = anisotropic_shape(F, pts)
    return TouchResult(
        radius=float(r[0]),
        point=pts.x[0],
        stratum=INTERIOR_OF_SIGMA,
        curvature=float(sh.kappa[0, 0]),
        sample_index=int(idx[0]),
        ties=int(ties[0]),
    )
