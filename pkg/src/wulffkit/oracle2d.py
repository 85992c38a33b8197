"""Brute-force planar oracles.

Everything here works on plain polylines with elementary formulas so that
it can cross-check the generic machinery in dimension two: shoelace area,
circumcircle curvature, the anisotropic curvature ``(F'' + F) kappa`` from a
private finite difference of ``theta -> F(cos theta, sin theta)``, and a
rasterized sweep of the parallel map.
"""

from __future__ import annotations

import numpy as np

from .errors import NotMeanConvex, SelfIntersecting

MIN_VERTICES = 64
FD_H = 1e-4


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _on_segment(p, a, b):
    return ((np.minimum(a[..., 0], b[..., 0]) <= p[..., 0]) & (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
            & (np.minimum(a[..., 1], b[..., 1]) <= p[..., 1]) & (p[..., 1] <= np.maximum(a[..., 1], b[..., 1])))


def find_self_intersection(poly):
    """First pair of intersecting edges of the closed polygon, or ``None``.

    Non-adjacent edges may not touch at all (collinear overlaps included);
    adjacent edges may not fold back onto each other.
    """
    A = poly
    B = np.roll(poly, -1, axis=0)
    m = len(A)
    E = B - A
    for i in range(m):
        # adjacent edge folding back
        j = (i + 1) % m
        if _cross(E[i], E[j]) == 0.0 and np.dot(E[i], E[j]) < 0.0:
            return i, j
        js = np.arange(i + 2, m)
        if i == 0:
            js = js[js != m - 1]
        if js.size == 0:
            continue
        a, b = A[i], B[i]
        c, d = A[js], B[js]
        o1 = np.sign(_cross(b - a, c - a))
        o2 = np.sign(_cross(b - a, d - a))
        o3 = np.sign(_cross(d - c, a - c))
        o4 = np.sign(_cross(d - c, b - c))
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        hit |= (o1 == 0) & _on_segment(c, a, b)
        hit |= (o2 == 0) & _on_segment(d, a, b)
        hit |= (o3 == 0) & _on_segment(np.broadcast_to(a, c.shape), c, d)
        hit |= (o4 == 0) & _on_segment(np.broadcast_to(b, c.shape), c, d)
        if np.any(hit):
            return i, int(js[np.argmax(hit)])
    return None


class PlanarCurve:
    """Closed polyline, or open arc closed up by ``closure`` vertices.

    The closing polygon is made counter-clockwise (vertex order reversed if
    needed) so normals point out of the enclosed region.
    """

    def __init__(self, vertices, closed=True, closure=None):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2:
            raise ValueError("vertices must be an (m, 2) array")
        if V.shape[0] < MIN_VERTICES:
            raise ValueError(f"need at least {MIN_VERTICES} vertices")
        self.closed = bool(closed)
        self.closure = np.zeros((0, 2)) if closure is None else np.atleast_2d(np.array(closure, float))
        if self.signed_area_raw(V) < 0:
            V = V[::-1].copy()
            self.closure = self.closure[::-1].copy()
        self.vertices = V
        hit = find_self_intersection(self.polygon)
        if hit is not None:
            raise SelfIntersecting(f"edges {hit[0]} and {hit[1]} intersect")

    def signed_area_raw(self, V):
        poly = V if self.closed else np.vstack([V, self.closure])
        return signed_area(poly)

    @property
    def polygon(self):
        return self.vertices if self.closed else np.vstack([self.vertices, self.closure])

    @property
    def size(self):
        return self.vertices.shape[0]

    def _neighbours(self):
        V = self.vertices
        if self.closed:
            return np.roll(V, 1, axis=0), V, np.roll(V, -1, axis=0)
        prev = np.vstack([V[:1], V[:-1]])
        nxt = np.vstack([V[1:], V[-1:]])
        return prev, V, nxt

    def curvature(self):
        """Signed circumcircle curvature; positive on convex counter-clockwise arcs."""
        a, b, c = self._neighbours()
        k = 2.0 * _cross(b - a, c - b) / (np.linalg.norm(b - a, axis=1) * np.linalg.norm(c - b, axis=1)
                                          * np.linalg.norm(c - a, axis=1) + 1e-300)
        if not self.closed:
            k[0], k[-1] = k[1], k[-2]
        return k

    def tangents(self):
        a, _, c = self._neighbours()
        t = c - a
        return t / np.linalg.norm(t, axis=1, keepdims=True)

    def normals(self):
        t = self.tangents()
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    def line_weights(self):
        V = self.vertices
        if self.closed:
            seg = np.linalg.norm(np.roll(V, -1, axis=0) - V, axis=1)
            return 0.5 * (seg + np.roll(seg, 1))
        seg = np.linalg.norm(V[1:] - V[:-1], axis=1)
        w = np.zeros(len(V))
        w[:-1] += 0.5 * seg
        w[1:] += 0.5 * seg
        return w


def shoelace_area(curve) -> float:
    """Area enclosed by the (closed-up) polyline; rejects self-intersecting input."""
    if isinstance(curve, PlanarCurve):
        poly = curve.polygon
    else:
        poly = np.asarray(curve, dtype=float)
        hit = find_self_intersection(poly)
        if hit is not None:
            raise SelfIntersecting(f"edges {hit[0]} and {hit[1]} intersect")
    return abs(signed_area(poly))


def _gauge_angle(F, theta):
    return F.eval(np.stack([np.cos(theta), np.sin(theta)], axis=-1))


def anisotropic_data(F, curve):
    """Per vertex: ``F(nu)``, ``kappa^F = (F'' + F) kappa`` and ``nu_F = F n + F' n'``."""
    n = curve.normals()
    theta = np.arctan2(n[:, 1], n[:, 0])
    f0 = _gauge_angle(F, theta)
    fp = _gauge_angle(F, theta + FD_H)
    fm = _gauge_angle(F, theta - FD_H)
    d1 = (fp - fm) / (2 * FD_H)
    d2 = (fp - 2 * f0 + fm) / (FD_H * FD_H)
    kF = (d2 + f0) * curve.curvature()
    nperp = np.stack([-n[:, 1], n[:, 0]], axis=1)
    nuF = f0[:, None] * n + d1[:, None] * nperp
    return f0, kF, nuF


def polygon_hk(F, curve: PlanarCurve, K=None) -> float:
    """``int F(nu)/kappa^F ds / (2 |Omega|)`` on the polyline."""
    f0, kF, _ = anisotropic_data(F, curve)
    if np.min(kF) <= 0.0:
        k = int(np.argmin(kF))
        raise NotMeanConvex(f"kappa^F = {kF[k]:.3e} at vertex {k}", k, float(kF[k]))
    hk = float(np.sum(curve.line_weights() * f0 / kF))
    return hk / (2.0 * shoelace_area(curve))


def _even_odd(poly, P):
    # crossing number with a horizontal ray to +x
    a = poly
    b = np.roll(poly, -1, axis=0)
    inside = np.zeros(P.shape[0], dtype=bool)
    step = max(1, 2_000_000 // len(a))
    for i in range(0, P.shape[0], step):
        p = P[i:i + step, None, :]
        cond = (a[None, :, 1] > p[..., 1]) != (b[None, :, 1] > p[..., 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a[None, :, 0] + (p[..., 1] - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                b[None, :, 1] - a[None, :, 1])
        inside[i:i + step] = (np.sum(cond & (p[..., 0] < xint), axis=1) % 2) == 1
    return inside


def raster_sweep(F, curve: PlanarCurve, grid_resolution=256) -> float:
    """Fraction of the cells of Omega hit by ``x - t nu_F(x)``, ``0 <= t <= 1/kappa^F``.

    Omega is rasterized by the even-odd rule at cell centers; the ``(x, t)``
    lattice is densified so both spacings stay below half a cell.
    """
    f0, kF, nuF = anisotropic_data(F, curve)
    if np.min(kF) <= 0.0:
        raise NotMeanConvex("curve is not mean convex")
    poly = curve.polygon
    lo = poly.min(axis=0)
    span = float((poly.max(axis=0) - lo).max())
    G = int(grid_resolution)
    cell = span / G
    centers = lo + cell * (np.stack(np.meshgrid(np.arange(G), np.arange(G), indexing="ij"), -1)
                           .reshape(-1, 2) + 0.5)
    inside = _even_odd(poly, centers).reshape(G, G)

    V = curve.vertices
    tmax = 1.0 / kF
    idx_next = np.arange(1, len(V) + (1 if curve.closed else 0)) % len(V)
    hit = np.zeros((G, G), dtype=bool)
    half = 0.5 * cell
    for i, j in zip(range(len(idx_next)), idx_next):
        seg = np.linalg.norm(V[j] - V[i])
        k = max(2, int(np.ceil(seg / (0.5 * half))) + 1)
        s = np.linspace(0.0, 1.0, k)[:, None]
        x = (1 - s) * V[i] + s * V[j]
        nf = (1 - s) * nuF[i] + s * nuF[j]
        tm = ((1 - s) * tmax[i] + s * tmax[j])[:, 0]
        step = 0.5 * half / np.max(np.linalg.norm(nf, axis=1))
        nt = int(np.ceil(tm.max() / step)) + 1
        tt = np.linspace(0.0, 1.0, nt)[None, :] * tm[:, None]
        pts = x[:, None, :] - tt[..., None] * nf[:, None, :]
        ij = np.floor((pts.reshape(-1, 2) - lo) / cell).astype(int)
        ok = (ij >= 0).all(axis=1) & (ij < G).all(axis=1)
        hit[ij[ok, 0], ij[ok, 1]] = True
    n_in = int(inside.sum())
    return float((hit & inside).sum() / n_in) if n_in else 1.0


def circle_curve(m=512, radius=1.0, center=(0.0, 0.0)):
    t = 2.0 * np.pi * np.arange(m) / m
    return PlanarCurve(np.asarray(center) + radius * np.stack([np.cos(t), np.sin(t)], 1))


def ellipse_curve(m=512, a=2.0, b=1.0):
    t = 2.0 * np.pi * np.arange(m) / m
    return PlanarCurve(np.stack([a * np.cos(t), b * np.sin(t)], 1))


def arc_curve(m=512, radius=1.0, start=0.0, stop=np.pi / 2, apex=(0.0, 0.0)):
    """Circular arc about ``apex`` closed through ``apex`` (a sector)."""
    t = np.linspace(start, stop, m)
    apex = np.asarray(apex, dtype=float)
    return PlanarCurve(apex + radius * np.stack([np.cos(t), np.sin(t)], 1), closed=False,
                       closure=apex[None])


def curve_from_patch(patch, m=512, closure=None):
    """Polyline through the mesh vertices of a planar patch."""
    V, _, _, _ = patch.mesh(m)
    if patch.closed:
        return PlanarCurve(V)
    return PlanarCurve(V, closed=False, closure=closure)
