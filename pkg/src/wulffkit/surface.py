"""Parametrized hypersurface patches and their quadrature.

A patch supplies positions, first derivatives, the outward unit normal and
the second fundamental form at parameter nodes.  :func:`sample` turns a patch
into a :class:`QuadraturedSurface` carrying per-sample geometry and area
weights; :func:`anisotropic_shape` adds the anisotropic Weingarten data for a
gauge.

Sign conventions: ``nu`` points out of the enclosed region and
``II_ij = <X_i, nu_j> = -<X_ij, nu>``, so the unit sphere has ``dnu = id``.

Sphere-based patches (spheres, radial graphs, Wulff shapes and their caps)
are parametrized through polar charts

    z(phi, psi) = cos(phi) a + sin(phi) (cos(psi) b1 + sin(psi) b2)

with ``phi`` in ``[0, phimax(psi)]``.  In the plane (``d = 2``) the angle
``psi`` is replaced by a choice of side ``e = +b`` or ``e = -b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Legendre

from .errors import ClosedSurface, DegenerateImmersion, EmptyCap, NoTrim, NotClosed
from .gauge import AnisotropyGauge, householder_basis

DET_TOL = 1e-10
BISECT_ITERS = 64
BOUNDARY_FACTOR = 4
CLOSURE_TOL = 1e-3


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _unit(v):
    # degenerate (zero) vectors become NaN and are caught by the immersion check
    with np.errstate(invalid="ignore", divide="ignore"):
        return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _gauss(n, lo=0.0, hi=1.0):
    s, w = np.polynomial.legendre.leggauss(n)
    return lo + (hi - lo) * (s + 1.0) / 2.0, w * (hi - lo) / 2.0


def _complete_frame(a):
    """Two unit vectors completing ``a`` to a right-handed frame (d = 3)."""
    T = householder_basis(a)
    b1, b2 = T[:, 0], T[:, 1]
    if np.dot(np.cross(a, b1), b2) < 0:
        b2 = -b2
    return b1, b2


class Geometry(NamedTuple):
    X: np.ndarray    # (N, d)
    Xu: np.ndarray   # (N, d, n)
    nu: np.ndarray   # (N, d)
    II: np.ndarray   # (N, n, n)


class FundamentalForms(NamedTuple):
    I: np.ndarray
    II: np.ndarray
    nu: np.ndarray
    dnu: np.ndarray


# ---------------------------------------------------------------------------
# maps from the unit sphere
# ---------------------------------------------------------------------------

class SphereMap:
    """A map ``z -> X(z)`` from the unit sphere whose image is a closed hypersurface."""

    dimension: int
    length_scale: float = 1.0

    def position(self, z):
        raise NotImplementedError

    def normal(self, z):
        raise NotImplementedError

    def geometry(self, z, zu, zuu):
        raise NotImplementedError


class RadialMap(SphereMap):
    """Radial graph ``X(z) = c + rho(z) z`` with ``rho = R + eps * q(<z, a>)``.

    ``q`` is a Legendre series.  With ``eps = 0`` this is the round sphere
    of radius ``R`` about ``c``.
    """

    def __init__(self, center=None, radius=1.0, epsilon=0.0, coefficients=(0.0,), axis=None,
                 dimension=3):
        self.dimension = int(dimension)
        self.center = np.zeros(dimension) if center is None else np.array(center, dtype=float)
        self.radius = float(radius)
        self.epsilon = float(epsilon)
        self.coefficients = np.atleast_1d(np.array(coefficients, dtype=float))
        a = np.eye(dimension)[-1] if axis is None else np.array(axis, dtype=float)
        self.axis = a / np.linalg.norm(a)
        self._q = Legendre(self.coefficients)
        self._dq = self._q.deriv(1)
        self._d2q = self._q.deriv(2) if len(self.coefficients) > 2 else Legendre([0.0])
        self.length_scale = self.radius
        s = np.linspace(-1.0, 1.0, 2001)
        if np.min(self.radius + self.epsilon * self._q(s)) <= 0.0:
            raise DegenerateImmersion("radial function is not positive")

    def rho(self, z):
        return self.radius + self.epsilon * self._q(z @ self.axis)

    def position(self, z):
        return self.center + self.rho(z)[..., None] * z

    def normal(self, z):
        s = z @ self.axis
        grad = self.epsilon * self._dq(s)[..., None] * (self.axis - s[..., None] * z)
        return _unit(self.rho(z)[..., None] * z - grad)

    def geometry(self, z, zu, zuu):
        a, eps = self.axis, self.epsilon
        s = z @ a
        su = np.einsum("...in,i->...n", zu, a)
        suu = np.einsum("...imn,i->...mn", zuu, a)
        rho = self.rho(z)
        q1, q2 = self._dq(s), self._d2q(s)
        ru = eps * q1[..., None] * su
        ruu = eps * (q2[..., None, None] * su[..., :, None] * su[..., None, :]
                     + q1[..., None, None] * suu)
        X = self.center + rho[..., None] * z
        Xu = z[..., :, None] * ru[..., None, :] + rho[..., None, None] * zu
        Xuu = (z[..., :, None, None] * ruu[..., None, :, :]
               + zu[..., :, :, None] * ru[..., None, None, :]
               + zu[..., :, None, :] * ru[..., None, :, None]
               + rho[..., None, None, None] * zuu)
        nu = self.normal(z)
        II = -np.einsum("...imn,...i->...mn", Xuu, nu)
        return Geometry(X, Xu, nu, II)


class WulffMap(SphereMap):
    """``X(z) = x0 + r Phi(z)``: the Wulff shape of radius ``r`` with ``nu = z``.

    The second fundamental form is ``II_ij = <X_i, z_j> = r z_i^T D^2F z_j``,
    so no third derivatives of the gauge are needed.
    """

    def __init__(self, gauge: AnisotropyGauge, center=None, radius=1.0):
        if radius <= 0:
            raise ValueError("Wulff radius must be positive")
        d = gauge.dimension
        self.gauge = gauge
        self.dimension = d
        self.center = np.zeros(d) if center is None else np.array(center, dtype=float)
        self.radius = float(radius)
        self.length_scale = self.radius

    def position(self, z):
        return self.center + self.radius * self.gauge.cahn_hoffman(z)

    def normal(self, z):
        return np.array(z, dtype=float)

    def geometry(self, z, zu, zuu):
        D2 = self.gauge.hessian(z)
        X = self.position(z)
        Xu = self.radius * D2 @ zu
        II = np.einsum("...im,...in->...mn", Xu, zu)
        II = 0.5 * (II + np.swapaxes(II, -1, -2))
        return Geometry(X, Xu, np.array(z, dtype=float), II)


# ---------------------------------------------------------------------------
# patches
# ---------------------------------------------------------------------------

class ParametrizedPatch:
    """Base class; subclasses implement node generation and geometry."""

    dimension: int
    closed: bool = False
    length_scale: float = 1.0

    @property
    def n(self):
        return self.dimension - 1

    def _nodes(self, resolution):
        raise NotImplementedError

    def _geometry(self, nodes):
        raise NotImplementedError

    def _boundary_nodes(self, resolution):
        raise ClosedSurface("patch has no boundary")

    def _coords(self, u):
        raise NotImplementedError

    def _local_nodes(self, anchor, s):
        raise NotImplementedError

    def _valid(self, X, nodes):
        return np.ones(X.shape[:-1], dtype=bool)

    def mesh(self, resolution):
        raise NotImplementedError


@dataclass
class PolarChart:
    """A polar chart about ``axis``; ``cap_angle`` fixes ``phimax`` when no cutter is used."""

    axis: np.ndarray
    b1: np.ndarray
    b2: np.ndarray | None = None
    cap_angle: float | None = None


def _polar_chart(axis, dimension, cap_angle=None):
    a = _unit(np.array(axis, dtype=float))
    if dimension == 2:
        return PolarChart(a, np.array([-a[1], a[0]]), None, cap_angle)
    b1, b2 = _complete_frame(a)
    return PolarChart(a, b1, b2, cap_angle)


def _polar_derivatives(phi, a, e, ep, dimension):
    """``z`` and its first and second derivatives in the polar chart."""
    c, s = np.cos(phi)[..., None], np.sin(phi)[..., None]
    z = c * a + s * e
    zphi = -s * a + c * e
    if dimension == 2:
        zu = zphi[..., None]
        zuu = -z[..., None, None]
        return z, zu, zuu
    zpsi = s * ep
    zu = np.stack([zphi, zpsi], axis=-1)
    zuu = np.empty(z.shape + (2, 2))
    zuu[..., 0, 0] = -z
    zuu[..., 0, 1] = c * ep
    zuu[..., 1, 0] = c * ep
    zuu[..., 1, 1] = -s * e
    return z, zu, zuu


class SphereMapPatch(ParametrizedPatch):
    """Image of (part of) the unit sphere under a :class:`SphereMap`.

    Without a cutter the patch is the whole closed surface, covered by two
    hemispherical charts (``d = 3``) or one chart with two sides (``d = 2``).
    With a ``cutter`` (any object with ``cut_value`` and ``cut_gradient``,
    positive inside) the patch is the part of the surface inside the cutter,
    parametrized by a single chart about ``cap_axis``.
    """

    def __init__(self, smap: SphereMap, cutter=None, cap_axis=None, axis=None):
        self.map = smap
        self.dimension = smap.dimension
        self.length_scale = smap.length_scale
        self.cutter = cutter
        d = self.dimension
        if cutter is None:
            self.closed = True
            a = np.eye(d)[-1] if axis is None else np.array(axis, dtype=float)
            if d == 2:
                self.charts = [_polar_chart(a, 2, np.pi)]
            else:
                self.charts = [_polar_chart(a, 3, np.pi / 2), _polar_chart(-a, 3, np.pi / 2)]
        else:
            self.closed = False
            if cap_axis is None:
                cap_axis = cutter.cap_axis()
            chart = _polar_chart(cap_axis, d)
            self.charts = [chart]
            self._check_cap(chart)

    # -- trimming ----------------------------------------------------------
    def _cut(self, z):
        return self.cutter.cut_value(self.map.position(z))

    def _check_cap(self, chart):
        if self._cut(chart.axis[None])[0] <= 0.0:
            raise EmptyCap("cap axis point lies outside the cutter")
        if self._cut(-chart.axis[None])[0] > 0.0:
            raise NoTrim("antipodal point lies inside the cutter; nothing is trimmed")

    def _phimax(self, chart, e):
        """Bisection for the first zero of the cutter along each meridian."""
        if chart.cap_angle is not None:
            return np.full(e.shape[0], chart.cap_angle)
        lo = np.zeros(e.shape[0])
        hi = np.full(e.shape[0], np.pi)
        a = chart.axis
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            z = np.cos(mid)[:, None] * a + np.sin(mid)[:, None] * e
            inside = self._cut(z) > 0.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def _sides(self, chart, m):
        """Meridian directions ``e``, ``e'`` and the angular weights."""
        if self.dimension == 2:
            e = np.stack([chart.b1, -chart.b1])
            return e, np.zeros_like(e), np.ones(2), np.zeros(2)
        psi = 2.0 * np.pi * np.arange(m) / m
        c, s = np.cos(psi)[:, None], np.sin(psi)[:, None]
        e = c * chart.b1 + s * chart.b2
        ep = -s * chart.b1 + c * chart.b2
        return e, ep, np.full(m, 2.0 * np.pi / m), psi

    # -- nodes -------------------------------------------------------------
    def _nodes(self, resolution):
        phis, As, Es, EPs, W, psis = [], [], [], [], [], []
        sg, wg = np.polynomial.legendre.leggauss(resolution)
        t, wt = (sg + 1.0) / 2.0, wg / 2.0
        for chart in self.charts:
            e, ep, wpsi, psi = self._sides(chart, 2 * resolution)
            pm = self._phimax(chart, e)
            phi = pm[:, None] * t[None, :]
            w = wpsi[:, None] * pm[:, None] * wt[None, :]
            k = phi.size
            phis.append(phi.ravel())
            As.append(np.broadcast_to(chart.axis, (k, self.dimension)))
            Es.append(np.repeat(e, resolution, axis=0))
            EPs.append(np.repeat(ep, resolution, axis=0))
            W.append(w.ravel())
            psis.append(np.repeat(psi, resolution))
        nodes = (np.concatenate(phis), np.concatenate(As), np.concatenate(Es),
                 np.concatenate(EPs))
        return nodes, np.concatenate(W), np.stack([nodes[0], np.concatenate(psis)], axis=-1)

    def _geometry(self, nodes):
        phi, a, e, ep = nodes
        z, zu, zuu = _polar_derivatives(phi, a, e, ep, self.dimension)
        return self.map.geometry(z, zu, zuu)

    def _anchor(self, nodes):
        phi, a, e, _ = nodes
        return np.cos(phi)[..., None] * a + np.sin(phi)[..., None] * e

    def _position(self, nodes):
        return self.map.position(self._anchor(nodes))

    def _z_nodes(self, z):
        # chart in which z sits on the equator, with orthonormal coordinates
        T = householder_basis(z)
        a = T[..., 0]
        ep = T[..., 1] if self.dimension == 3 else np.zeros_like(z)
        return (np.full(z.shape[:-1], np.pi / 2), a, np.array(z, dtype=float), ep)

    def _local_nodes(self, anchor, s):
        """Tangent-plane chart ``z(s) = normalize(z0 + T0 s)`` about the anchors."""
        T0 = householder_basis(anchor)
        z = _unit(anchor + np.einsum("...in,...n->...i", T0, s))
        return self._z_nodes(z)

    def _valid(self, X, nodes):
        if self.cutter is None:
            return np.ones(X.shape[:-1], dtype=bool)
        return self.cutter.cut_value(X) >= 0.0

    def _coords(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        chart = self.charts[0]
        if self.dimension == 2:
            phi = np.abs(u[:, 0])
            sgn = np.where(u[:, 0] >= 0, 1.0, -1.0)[:, None]
            e = sgn * chart.b1
            return (phi, np.broadcast_to(chart.axis, e.shape), e, np.zeros_like(e))
        phi, psi = u[:, 0], u[:, 1]
        c, s = np.cos(psi)[:, None], np.sin(psi)[:, None]
        e = c * chart.b1 + s * chart.b2
        ep = -s * chart.b1 + c * chart.b2
        return (phi, np.broadcast_to(chart.axis, e.shape), e, ep)

    # -- boundary ----------------------------------------------------------
    def _boundary_nodes(self, resolution):
        if self.closed:
            raise ClosedSurface("closed surface has no boundary")
        chart = self.charts[0]
        d = self.dimension
        m = BOUNDARY_FACTOR * 2 * resolution
        e, ep, wpsi, _ = self._sides(chart, m)
        pm = self._phimax(chart, e)
        nodes = (pm, np.broadcast_to(chart.axis, e.shape), e, ep)
        if d == 2:
            du = np.zeros((2, 1))
            out = np.ones((2, 1))
            return nodes, du, out, wpsi
        # d phimax / d psi from the implicit function theorem
        z, zu, _ = _polar_derivatives(*nodes, d)
        X = self.map.position(z)
        g = self._geometry(nodes)
        grad = self.cutter.cut_gradient(X)
        dphi = -_dot(grad, g.Xu[..., 1]) / _dot(grad, g.Xu[..., 0])
        du = np.stack([dphi, np.ones_like(dphi)], axis=-1)
        out = np.tile([1.0, 0.0], (m, 1))
        return nodes, du, out, wpsi

    def _boundary_position(self, psi):
        """Boundary point at polar angle ``psi`` of the cap chart (``d = 3``)."""
        chart = self.charts[0]
        psi = np.asarray(psi, dtype=float)
        e = np.cos(psi)[:, None] * chart.b1 + np.sin(psi)[:, None] * chart.b2
        pm = self._phimax(chart, e)
        return self.map.position(np.cos(pm)[:, None] * chart.axis + np.sin(pm)[:, None] * e)

    # -- meshing -----------------------------------------------------------
    def mesh(self, resolution):
        """Triangulated parameter grid: ``(vertices, normals, triangles, boundary_loop)``.

        Closed surfaces use ``resolution`` latitude rings plus both poles and
        have ``2 resolution^2`` triangles.
        """
        d, res = self.dimension, resolution
        chart = self.charts[0]
        a = chart.axis
        if d == 2:
            if self.closed:
                phi = 2.0 * np.pi * np.arange(res) / res - np.pi
                e = np.where(phi[:, None] >= 0, 1.0, -1.0) * chart.b1
                nodes = (np.abs(phi), np.broadcast_to(a, e.shape), e, np.zeros_like(e))
                segs = np.stack([np.arange(res), (np.arange(res) + 1) % res], axis=-1)
                loop = np.array([], dtype=int)
            else:
                e2 = np.stack([chart.b1, -chart.b1])
                pm = self._phimax(chart, e2)
                phi = np.linspace(-pm[1], pm[0], res + 1)
                e = np.where(phi[:, None] >= 0, 1.0, -1.0) * chart.b1
                nodes = (np.abs(phi), np.broadcast_to(a, e.shape), e, np.zeros_like(e))
                segs = np.stack([np.arange(res), np.arange(1, res + 1)], axis=-1)
                loop = np.array([0, res])
            z = self._anchor(nodes)
            return self.map.position(z), self.map.normal(z), segs, loop

        psi = 2.0 * np.pi * np.arange(res) / res
        c, s = np.cos(psi)[:, None], np.sin(psi)[:, None]
        e = c * chart.b1 + s * chart.b2
        if self.closed:
            rings = (np.arange(res) + 0.5) * np.pi / res
            phi = np.broadcast_to(rings[:, None], (res, res))
        else:
            pm = self._phimax(chart, e)
            phi = (np.arange(1, res + 1)[:, None] / res) * pm[None, :]
        z = (np.cos(phi)[..., None] * a + np.sin(phi)[..., None] * e[None, :, :]).reshape(-1, 3)
        poles = [a] if not self.closed else [a, -a]
        z = np.vstack([z] + [p[None] for p in poles])
        V = self.map.position(z)
        N = self.map.normal(z)
        tris = []
        idx = np.arange(res * res).reshape(res, res)
        top = res * res
        for j in range(res):
            jn = (j + 1) % res
            tris.append((top, idx[0, j], idx[0, jn]))
        for i in range(res - 1):
            for j in range(res):
                jn = (j + 1) % res
                tris.append((idx[i, j], idx[i + 1, j], idx[i + 1, jn]))
                tris.append((idx[i, j], idx[i + 1, jn], idx[i, jn]))
        if self.closed:
            bot = top + 1
            for j in range(res):
                jn = (j + 1) % res
                tris.append((bot, idx[res - 1, jn], idx[res - 1, j]))
            loop = np.array([], dtype=int)
        else:
            loop = idx[res - 1].copy()
        tris = _orient(V, N, np.array(tris))
        return V, N, tris, loop


def _orient(V, N, tris):
    """Flip triangles whose geometric normal disagrees with the vertex normals."""
    p0, p1, p2 = V[tris[:, 0]], V[tris[:, 1]], V[tris[:, 2]]
    tn = np.cross(p1 - p0, p2 - p0)
    ref = N[tris].sum(axis=1)
    flip = _dot(tn, ref) < 0
    tris = tris.copy()
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


class CartesianPatch(ParametrizedPatch):
    """Patch ``(u, v) -> X(u, v)`` in ``R^3`` with closed-form derivatives.

    Subclasses provide ``_eval(u) -> (X, Xu, Xuu)``.  The normal is
    ``orientation * normalize(X_u x X_v)``.
    """

    dimension = 3
    orientation = 1.0

    def _eval(self, u):
        raise NotImplementedError

    def _geometry(self, nodes):
        X, Xu, Xuu = self._eval(nodes)
        nu = self.orientation * _unit(np.cross(Xu[..., 0], Xu[..., 1]))
        II = -np.einsum("...imn,...i->...mn", Xuu, nu)
        return Geometry(X, Xu, nu, II)

    def _anchor(self, nodes):
        return nodes

    def _position(self, nodes):
        return self._eval(nodes)[0]

    def _coords(self, u):
        return np.atleast_2d(np.asarray(u, dtype=float))

    def _local_nodes(self, anchor, s):
        return anchor + s

    def _valid(self, X, nodes):
        return self._inside(nodes)

    def _inside(self, u):
        return np.ones(u.shape[:-1], dtype=bool)


class RectPatch(CartesianPatch):
    """Patch over a rectangle, optionally periodic in ``u`` (trapezoid nodes there)."""

    def __init__(self, bounds, periodic_u=False):
        (self.u0, self.u1), (self.v0, self.v1) = bounds
        self.periodic_u = periodic_u

    def _inside(self, u):
        ok = (u[..., 1] >= self.v0) & (u[..., 1] <= self.v1)
        if not self.periodic_u:
            ok &= (u[..., 0] >= self.u0) & (u[..., 0] <= self.u1)
        return ok

    def _nodes(self, resolution):
        if self.periodic_u:
            m = 2 * resolution
            u = self.u0 + (self.u1 - self.u0) * np.arange(m) / m
            wu = np.full(m, (self.u1 - self.u0) / m)
        else:
            u, wu = _gauss(resolution, self.u0, self.u1)
        v, wv = _gauss(resolution, self.v0, self.v1)
        U, Vv = np.meshgrid(u, v, indexing="ij")
        nodes = np.stack([U.ravel(), Vv.ravel()], axis=-1)
        return nodes, np.outer(wu, wv).ravel(), nodes

    def _boundary_nodes(self, resolution):
        m = BOUNDARY_FACTOR * resolution
        parts = []
        if self.periodic_u:
            k = 2 * m
            u = self.u0 + (self.u1 - self.u0) * np.arange(k) / k
            w = np.full(k, (self.u1 - self.u0) / k)
            for v, sgn in ((self.v0, -1.0), (self.v1, 1.0)):
                nodes = np.stack([u, np.full(k, v)], axis=-1)
                parts.append((nodes, np.tile([1.0, 0.0], (k, 1)), np.tile([0.0, sgn], (k, 1)), w))
        else:
            s, w = _gauss(m, 0.0, 1.0)
            du, dv = self.u1 - self.u0, self.v1 - self.v0
            edges = [
                (np.stack([self.u0 + du * s, np.full(m, self.v0)], -1), [du, 0.0], [0.0, -1.0]),
                (np.stack([np.full(m, self.u1), self.v0 + dv * s], -1), [0.0, dv], [1.0, 0.0]),
                (np.stack([self.u1 - du * s, np.full(m, self.v1)], -1), [-du, 0.0], [0.0, 1.0]),
                (np.stack([np.full(m, self.u0), self.v1 - dv * s], -1), [0.0, -dv], [-1.0, 0.0]),
            ]
            for nodes, vel, out in edges:
                parts.append((nodes, np.tile(vel, (m, 1)), np.tile(out, (m, 1)), w))
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))

    def mesh(self, resolution):
        res = resolution
        if self.periodic_u:
            u = self.u0 + (self.u1 - self.u0) * np.arange(res) / res
        else:
            u = np.linspace(self.u0, self.u1, res + 1)
        v = np.linspace(self.v0, self.v1, res + 1)
        U, Vv = np.meshgrid(u, v, indexing="ij")
        nodes = np.stack([U.ravel(), Vv.ravel()], axis=-1)
        g = self._geometry(nodes)
        nu_, nv = len(u), len(v)
        idx = np.arange(nu_ * nv).reshape(nu_, nv)
        tris = []
        for i in range(res):
            i1 = (i + 1) % nu_
            for j in range(res):
                tris.append((idx[i, j], idx[i1, j], idx[i1, j + 1]))
                tris.append((idx[i, j], idx[i1, j + 1], idx[i, j + 1]))
        if self.periodic_u:
            loop = idx[:, 0]
        else:
            loop = np.concatenate([idx[:-1, 0], idx[-1, :-1], idx[:0:-1, -1], idx[0, :0:-1]])
        return g.X, g.nu, _orient(g.X, g.nu, np.array(tris)), loop


class FlatPatch(RectPatch):
    """The square ``origin + u e1 + v e2`` for ``(u, v)`` in ``[0, size]^2``."""

    def __init__(self, size=1.0, origin=None, e1=None, e2=None):
        super().__init__(((0.0, size), (0.0, size)))
        self.origin = np.zeros(3) if origin is None else np.array(origin, dtype=float)
        self.e1 = np.eye(3)[0] if e1 is None else np.array(e1, dtype=float)
        self.e2 = np.eye(3)[1] if e2 is None else np.array(e2, dtype=float)
        self.length_scale = float(size)

    def _eval(self, u):
        X = self.origin + u[..., :1] * self.e1 + u[..., 1:] * self.e2
        Xu = np.broadcast_to(np.stack([self.e1, self.e2], -1), u.shape[:-1] + (3, 2))
        return X, Xu, np.zeros(u.shape[:-1] + (3, 2, 2))


class CylinderPatch(RectPatch):
    """``(R cos u, R sin u, v)``, ``u`` periodic, ``v`` in ``[0, height]``; outward normal."""

    def __init__(self, radius=1.0, height=1.0):
        super().__init__(((0.0, 2.0 * np.pi), (0.0, height)), periodic_u=True)
        self.radius = float(radius)
        self.length_scale = self.radius

    def _eval(self, u):
        R = self.radius
        c, s = np.cos(u[..., 0]), np.sin(u[..., 0])
        z = np.zeros_like(c)
        X = np.stack([R * c, R * s, u[..., 1]], -1)
        Xu = np.stack([np.stack([-R * s, z], -1),
                       np.stack([R * c, z], -1),
                       np.stack([z, z + 1.0], -1)], -2)
        Xuu = np.zeros(u.shape[:-1] + (3, 2, 2))
        Xuu[..., 0, 0, 0] = -R * c
        Xuu[..., 1, 0, 0] = -R * s
        return X, Xu, Xuu


class GraphDiskPatch(CartesianPatch):
    """Paraboloid graph ``(u, v, k (u^2 + v^2) / 2)`` over the disk of radius ``a``.

    Parameters are Cartesian; quadrature is polar (Gauss in the radius,
    trapezoid in the angle).  The normal points away from the convex side
    (downward for ``k > 0``), so ``dnu = k I`` at the vertex.
    """

    orientation = -1.0

    def __init__(self, curvature=1.0, disk_radius=1.0):
        self.k = float(curvature)
        self.a = float(disk_radius)
        self.length_scale = self.a

    def _inside(self, u):
        return _dot(u, u) <= self.a * self.a

    def _eval(self, u):
        k = self.k
        X = np.stack([u[..., 0], u[..., 1], 0.5 * k * _dot(u, u)], -1)
        one, zero = np.ones(u.shape[:-1]), np.zeros(u.shape[:-1])
        Xu = np.stack([np.stack([one, zero], -1),
                       np.stack([zero, one], -1),
                       np.stack([k * u[..., 0], k * u[..., 1]], -1)], -2)
        Xuu = np.zeros(u.shape[:-1] + (3, 2, 2))
        Xuu[..., 2, 0, 0] = k
        Xuu[..., 2, 1, 1] = k
        return X, Xu, Xuu

    def _nodes(self, resolution):
        r, wr = _gauss(resolution, 0.0, self.a)
        m = 2 * resolution
        t = 2.0 * np.pi * np.arange(m) / m
        R, Tt = np.meshgrid(r, t, indexing="ij")
        nodes = np.stack([(R * np.cos(Tt)).ravel(), (R * np.sin(Tt)).ravel()], -1)
        w = (wr * r)[:, None] * np.full(m, 2.0 * np.pi / m)[None, :]
        return nodes, w.ravel(), nodes

    def _boundary_nodes(self, resolution):
        m = BOUNDARY_FACTOR * 2 * resolution
        t = 2.0 * np.pi * np.arange(m) / m
        c, s = np.cos(t), np.sin(t)
        nodes = self.a * np.stack([c, s], -1)
        du = self.a * np.stack([-s, c], -1)
        return nodes, du, np.stack([c, s], -1), np.full(m, 2.0 * np.pi / m)

    def _boundary_position(self, psi):
        u = self.a * np.stack([np.cos(psi), np.sin(psi)], -1)
        return self._eval(u)[0]

    def mesh(self, resolution):
        res = resolution
        t = 2.0 * np.pi * np.arange(res) / res
        r = self.a * np.arange(1, res + 1) / res
        nodes = np.vstack([(r[:, None, None] * np.stack([np.cos(t), np.sin(t)], -1)[None])
                           .reshape(-1, 2), np.zeros((1, 2))])
        g = self._geometry(nodes)
        idx = np.arange(res * res).reshape(res, res)
        c0 = res * res
        tris = [(c0, idx[0, j], idx[0, (j + 1) % res]) for j in range(res)]
        for i in range(res - 1):
            for j in range(res):
                jn = (j + 1) % res
                tris.append((idx[i, j], idx[i + 1, j], idx[i + 1, jn]))
                tris.append((idx[i, j], idx[i + 1, jn], idx[i, jn]))
        return g.X, g.nu, _orient(g.X, g.nu, np.array(tris)), idx[-1].copy()


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def sphere_patch(radius=1.0, center=None, dimension=3):
    return SphereMapPatch(RadialMap(center, radius, dimension=dimension))


def radial_patch(radius=1.0, epsilon=0.0, coefficients=(0.0,), axis=None, center=None,
                 dimension=3, cutter=None, cap_axis=None):
    """Radial graph over the sphere, optionally trimmed by ``cutter``."""
    smap = RadialMap(center, radius, epsilon, coefficients, axis, dimension)
    return SphereMapPatch(smap, cutter=cutter, cap_axis=cap_axis)


# ---------------------------------------------------------------------------
# quadrature and curvature
# ---------------------------------------------------------------------------

@dataclass
class QuadraturedSurface:
    """Per-sample geometry of a sampled patch.

    ``frame`` holds an orthonormal basis of ``nu^perp`` (columns) and
    ``shape`` the shape operator ``dnu`` in that basis (symmetric).
    """

    patch: ParametrizedPatch
    resolution: int
    x: np.ndarray
    nu: np.ndarray
    frame: np.ndarray
    shape: np.ndarray
    metric: np.ndarray
    second: np.ndarray
    weights: np.ndarray
    params: np.ndarray
    anchor: np.ndarray

    @property
    def dimension(self):
        return self.x.shape[-1]

    @property
    def n(self):
        return self.x.shape[-1] - 1

    @property
    def size(self):
        return self.x.shape[0]

    @property
    def closed(self):
        return self.patch.closed

    @property
    def area(self):
        return float(np.sum(self.weights))

    @property
    def mean_curvature(self):
        return np.trace(self.shape, axis1=-2, axis2=-1)

    def self_adjoint_defect(self):
        """``max |I dnu - (I dnu)^T|`` over samples (``I dnu = II``)."""
        Idnu = self.metric @ np.linalg.solve(self.metric, self.second)
        return float(np.max(np.abs(Idnu - np.swapaxes(Idnu, -1, -2))))

    def flux(self):
        """``|int nu dA| / Area``; vanishes for closed surfaces."""
        return float(np.linalg.norm(self.weights @ self.nu) / self.area)


def _build(patch, nodes, pweights):
    g = patch._geometry(nodes)
    I = np.einsum("...im,...in->...mn", g.Xu, g.Xu)
    det = np.linalg.det(I)
    floor = DET_TOL * patch.length_scale ** (2 * patch.n)
    if np.min(det) < floor:
        k = int(np.argmin(det))
        raise DegenerateImmersion(f"first fundamental form degenerate at sample {k} (det {det[k]:.3e})")
    T = householder_basis(g.nu)
    J = np.swapaxes(T, -1, -2) @ g.Xu
    Jinv = np.linalg.inv(J)
    L = np.swapaxes(Jinv, -1, -2) @ g.II @ Jinv
    L = 0.5 * (L + np.swapaxes(L, -1, -2))
    w = None if pweights is None else pweights * np.sqrt(det)
    return g, I, T, L, w


def sample(patch: ParametrizedPatch, resolution: int) -> QuadraturedSurface:
    """Quadrature samples of ``patch``.

    Gauss-Legendre in the radial/polar direction and trapezoid in periodic
    directions; ``resolution`` is the number of Gauss nodes per chart.
    """
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    nodes, pw, params = patch._nodes(resolution)
    g, I, T, L, w = _build(patch, nodes, pw)
    return QuadraturedSurface(patch, int(resolution), g.X, g.nu, T, L, I, g.II, w, params,
                              patch._anchor(nodes))


def sample_nodes(patch: ParametrizedPatch, nodes) -> QuadraturedSurface:
    """Geometry at arbitrary nodes (zero weights); used for refined touch points."""
    g, I, T, L, _ = _build(patch, nodes, None)
    anchor = patch._anchor(nodes)
    return QuadraturedSurface(patch, 0, g.X, g.nu, T, L, I, g.II, np.zeros(g.X.shape[0]),
                              np.asarray(anchor), anchor)


def fundamental_forms(patch: ParametrizedPatch, u) -> FundamentalForms:
    """``(I, II, nu, dnu = I^{-1} II)`` at parameter point(s) ``u``.

    For sphere-based patches ``u = (phi, psi)`` in the first chart (``d = 3``)
    or a signed ``phi`` (``d = 2``).
    """
    single = np.ndim(u) == 1
    nodes = patch._coords(u)
    g, I, _, _, _ = _build(patch, nodes, None)
    dnu = np.linalg.solve(I, g.II)
    out = FundamentalForms(I, g.II, g.nu, dnu)
    if single:
        out = FundamentalForms(*(a[0] for a in out))
    return out


@dataclass
class AnisotropicShapeData:
    """Anisotropic normal, Weingarten map and curvatures per sample."""

    nu_F: np.ndarray
    F_nu: np.ndarray
    S_F: np.ndarray
    kappa: np.ndarray
    H_F: np.ndarray
    directions: np.ndarray
    H: np.ndarray
    max_imag: float = 0.0

    @property
    def n(self):
        return self.kappa.shape[-1]


def _sqrtm_spd(A):
    lam, V = np.linalg.eigh(A)
    return (V * np.sqrt(lam)[..., None, :]) @ np.swapaxes(V, -1, -2)


def anisotropic_shape(F: AnisotropyGauge, surf: QuadraturedSurface) -> AnisotropicShapeData:
    """``nu_F = Phi(nu)``, ``S_F = A_F(nu) dnu`` and its (real) spectrum.

    The spectrum comes from the symmetric matrix ``A^{1/2} L A^{1/2}``,
    which is similar to ``S_F = A L``.
    """
    nu = _unit(surf.nu)
    T = surf.frame
    A = F.anisotropy_form((nu, T))
    L = surf.shape
    S_F = A @ L
    R = _sqrtm_spd(A)
    B = R @ L @ R
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    kappa, W = np.linalg.eigh(B)
    dirs = T @ R @ W
    dirs = dirs / np.linalg.norm(dirs, axis=-2, keepdims=True)
    imag = float(np.max(np.abs(np.linalg.eigvals(S_F).imag), initial=0.0))
    return AnisotropicShapeData(
        nu_F=F.cahn_hoffman(nu),
        F_nu=F.eval(nu),
        S_F=S_F,
        kappa=kappa,
        H_F=np.trace(S_F, axis1=-2, axis2=-1),
        directions=np.swapaxes(dirs, -1, -2),
        H=np.trace(L, axis1=-2, axis2=-1),
        max_imag=imag,
    )


def integrate(surf: QuadraturedSurface, integrand) -> float:
    """``sum_k w_k f_k``; ``integrand`` is an array of per-sample values or a callable on ``surf``."""
    f = integrand(surf) if callable(integrand) else np.asarray(integrand, dtype=float)
    f = np.broadcast_to(f, surf.weights.shape)
    return float(np.sum(surf.weights * f))


# ---------------------------------------------------------------------------
# boundary
# ---------------------------------------------------------------------------

@dataclass
class BoundaryTrace:
    """Samples of the boundary curve with co-normals and line weights."""

    x: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    mu_F: np.ndarray
    nu_F: np.ndarray
    F_nu: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.x.shape[0]

    @property
    def length(self):
        return float(np.sum(self.weights))


def boundary_points(patch: ParametrizedPatch, resolution: int):
    """Boundary positions, normals, co-normals and line weights (gauge-free)."""
    nodes, du, out, wpar = patch._boundary_nodes(resolution)
    g = patch._geometry(nodes)
    nu = g.nu
    if patch.dimension == 2:
        mu = g.Xu[..., 0] * out[..., :1]
        ds = wpar
    else:
        t = np.einsum("...in,...n->...i", g.Xu, du)
        tn = np.linalg.norm(t, axis=-1)
        that = t / tn[..., None]
        mu = np.einsum("...in,...n->...i", g.Xu, out)
        mu = mu - _dot(mu, that)[..., None] * that
        ds = tn * wpar
    mu = mu - _dot(mu, nu)[..., None] * nu
    return g.X, _unit(mu), nu, ds


def boundary_trace(patch: ParametrizedPatch, F: AnisotropyGauge, resolution: int) -> BoundaryTrace:
    """Boundary samples (4x the interior resolution) with ``mu`` and ``mu_F``.

    ``mu_F = F(nu) mu - <nu_F, mu> nu``.
    """
    x, mu, nu, ds = boundary_points(patch, resolution)
    nu_F = F.cahn_hoffman(nu)
    Fnu = F.eval(nu)
    mu_F = Fnu[..., None] * mu - _dot(nu_F, mu)[..., None] * nu
    return BoundaryTrace(x, mu, nu, mu_F, nu_F, Fnu, ds)


# ---------------------------------------------------------------------------
# volume
# ---------------------------------------------------------------------------

def wetting_center(patch: ParametrizedPatch, K, resolution: int):
    """Point ``p`` with ``<x - p, Nbar(x)> = 0`` along the boundary, and the residual.

    Solved in the least-squares sense over boundary samples; the wetted part
    of the container is then swept by segments from ``p`` and contributes
    nothing to the flux of ``x - p``.
    """
    if K is None or getattr(K, "kind", None) == "whole":
        raise NotClosed("surface has boundary but no container closes it")
    if not getattr(K, "conical_faces", True):
        raise NotClosed(f"wetted region on a {K.kind} boundary is curved; volume unsupported")
    x, _, _, _ = boundary_points(patch, resolution)
    rows, rhs = [], []
    for xi, normals in zip(x, K.boundary_normals(x)):
        if not normals:
            raise NotClosed(f"boundary point {xi} does not lie on the container boundary")
        for nb in normals:
            rows.append(nb)
            rhs.append(nb @ xi)
    A, b = np.array(rows), np.array(rhs)
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ p - b))) / patch.length_scale
    return p, resid


def enclosed_volume(surf: QuadraturedSurface, K=None) -> float:
    """``|Omega| = (1/d) int <x - p, nu> dA``.

    Closed surfaces use ``p = 0`` after a flux check.  Surfaces with boundary
    need a container whose wetted part is conical about some ``p`` (planes,
    cones, wedges); otherwise :class:`NotClosed` is raised.
    """
    d = surf.dimension
    if surf.closed:
        if surf.flux() > CLOSURE_TOL:
            raise NotClosed(f"flux residual {surf.flux():.3e} exceeds tolerance")
        p = np.zeros(d)
    else:
        if K is None or getattr(K, "kind", None) == "whole":
            raise NotClosed("surface has boundary but no container closes it")
        p, resid = wetting_center(surf.patch, K, surf.resolution)
        if resid > CLOSURE_TOL:
            raise NotClosed(f"wetted region is not conical (residual {resid:.3e})")
    return integrate(surf, _dot(surf.x - p, surf.nu)) / d


# ---------------------------------------------------------------------------
# closed cycles for inside tests
# ---------------------------------------------------------------------------

@dataclass
class ClosedCycle:
    """Triangulated closed surface (``d = 3``) or closed polygon (``d = 2``) around Omega."""

    vertices: np.ndarray
    cells: np.ndarray
    dimension: int = 3
    bbox: tuple = field(default=None)


def closed_cycle(patch: ParametrizedPatch, K=None, resolution: int = 64) -> ClosedCycle:
    """Mesh of Sigma closed up by a fan from the wetting center over the boundary loop."""
    V, N, cells, loop = patch.mesh(resolution)
    d = patch.dimension
    if not patch.closed:
        p, resid = wetting_center(patch, K, max(8, resolution // 4))
        if resid > CLOSURE_TOL:
            raise NotClosed(f"wetted region is not conical (residual {resid:.3e})")
        pi = V.shape[0]
        V = np.vstack([V, p[None]])
        if d == 2:
            cells = np.vstack([cells, [[loop[1], pi], [pi, loop[0]]]])
        else:
            m = len(loop)
            fan = np.array([(pi, loop[(j + 1) % m], loop[j]) for j in range(m)])
            # orient fan triangles along the container normals
            nb = np.array([ns[0] for ns in K.boundary_normals(V[loop])])
            tn = np.cross(V[fan[:, 1]] - V[fan[:, 0]], V[fan[:, 2]] - V[fan[:, 0]])
            ref = nb[np.arange(m)] + nb[(np.arange(m) + 1) % m]
            flip = _dot(tn, ref) < 0
            fan[flip] = fan[flip][:, [0, 2, 1]]
            cells = np.vstack([cells, fan])
    return ClosedCycle(V, cells, d, (V.min(axis=0), V.max(axis=0)))
