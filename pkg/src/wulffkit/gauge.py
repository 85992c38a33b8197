"""Anisotropy gauges and the pointwise objects derived from them.

A gauge ``F`` is a positive function on the unit sphere extended
1-homogeneously to ``R^d``.  For unit ``z`` the Cahn-Hoffman map
``Phi(z) = grad_S F(z) + F(z) z`` coincides with the Euclidean gradient of
the homogeneous extension, and the anisotropy tensor
``A_F = Hess_S F + F sigma`` is the Euclidean Hessian restricted to the
tangent plane ``z^perp``.  Everything here is vectorised over leading axes:
inputs of shape ``(..., d)`` give outputs of shape ``(...)``, ``(..., d)`` or
``(..., d-1, d-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Legendre
from scipy.optimize import minimize

from .errors import (
    ConvergenceFailure,
    InadmissibleGauge,
    NonUnitInput,
    NotOnGeodesic,
    ZeroVector,
)

ZERO_TOL = 1e-14
UNIT_TOL = 1e-10

DUAL_STARTS = 32
DUAL_MAX_ITER = 1000
DUAL_WARMUP = 6
DUAL_KEEP = 4
DUAL_GRAD_TOL = 1e-10
DUAL_STEP_TOL = 1e-12
# best start must reach this gradient norm, otherwise the ascent stalled
DUAL_ACCEPT_TOL = 1e-6


def householder_basis(z):
    """Orthonormal basis of ``z^perp`` as the columns of a ``(..., d, d-1)`` array.

    Uses the Householder reflection that maps ``e_d`` to ``-sign(z_d) z``; the
    remaining columns are orthonormal and orthogonal to ``z``.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    sigma = np.where(z[..., -1] >= 0.0, 1.0, -1.0)
    v = z.copy()
    v[..., -1] += sigma
    vv = 2.0 * (1.0 + np.abs(z[..., -1]))
    H = np.eye(d) - 2.0 * v[..., :, None] * v[..., None, :] / vv[..., None, None]
    return H[..., :, :-1]


def sphere_grid(dimension, resolution):
    """Quasi-uniform points on the unit sphere.

    ``d = 2``: ``resolution`` equally spaced angles.  ``d = 3``: Fibonacci
    lattice with ``resolution**2`` points.  Higher ``d``: seeded Gaussian
    directions (``resolution**2`` of them).
    """
    if dimension == 2:
        t = 2.0 * np.pi * (np.arange(resolution) + 0.5) / resolution
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    m = resolution * resolution
    if dimension == 3:
        k = np.arange(m) + 0.5
        zc = 1.0 - 2.0 * k / m
        rho = np.sqrt(np.clip(1.0 - zc * zc, 0.0, None))
        ang = np.pi * (1.0 + np.sqrt(5.0)) * k
        return np.stack([rho * np.cos(ang), rho * np.sin(ang), zc], axis=-1)
    rng = np.random.default_rng(0)
    g = rng.standard_normal((m, dimension))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True)
class TangentFrame:
    """A base point on the unit sphere and an orthonormal basis of its tangent plane.

    ``basis`` has the tangent vectors as columns, shape ``(d, d-1)``.
    """

    z: np.ndarray
    basis: np.ndarray

    @classmethod
    def at(cls, z):
        z = np.asarray(z, dtype=float)
        if abs(np.linalg.norm(z) - 1.0) > UNIT_TOL:
            raise NonUnitInput(f"frame base point must be unit, |z| = {np.linalg.norm(z)!r}")
        return cls(z, householder_basis(z))

    def validate(self, tol=1e-12):
        B = self.basis
        gram = B.T @ B
        if np.max(np.abs(gram - np.eye(B.shape[1]))) > tol:
            raise ValueError("tangent basis is not orthonormal")
        if np.max(np.abs(B.T @ self.z)) > tol:
            raise ValueError("tangent basis is not orthogonal to the base point")


def _check_unit(z):
    z = np.asarray(z, dtype=float)
    err = np.max(np.abs(np.linalg.norm(z, axis=-1) - 1.0), initial=0.0)
    if err > UNIT_TOL:
        raise NonUnitInput(f"expected unit vectors, max ||z| - 1| = {err:.3e}")
    return z


def _split(xi):
    xi = np.asarray(xi, dtype=float)
    r = np.linalg.norm(xi, axis=-1)
    if np.any(r < ZERO_TOL):
        raise ZeroVector("gauge evaluated at the zero vector")
    return r, xi / r[..., None]


def _dual_starts(d):
    if d == 2:
        return sphere_grid(2, DUAL_STARTS)
    if d == 3:
        k = np.arange(DUAL_STARTS) + 0.5
        zc = 1.0 - 2.0 * k / DUAL_STARTS
        rho = np.sqrt(1.0 - zc * zc)
        ang = np.pi * (1.0 + np.sqrt(5.0)) * k
        return np.stack([rho * np.cos(ang), rho * np.sin(ang), zc], axis=-1)
    g = np.random.default_rng(1).standard_normal((DUAL_STARTS, d))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _arc(a, b):
    # robust great-circle distance
    return 2.0 * np.arcsin(np.clip(np.linalg.norm(a - b, axis=-1) / 2.0, 0.0, 1.0))


class AnisotropyGauge:
    """Positive, 1-homogeneous, uniformly convex gauge on ``R^d``.

    Subclasses implement ``_unit_value``, ``_unit_gradient`` and
    ``_unit_hessian`` on unit vectors; with ``derivative_mode="finite_difference"``
    only ``_unit_value`` is used and derivatives come from differences along
    great circles with step ``fd_step``.
    """

    family = "abstract"

    def __init__(self, dimension, derivative_mode="analytic", fd_step=1e-4, validate=True):
        if dimension < 2:
            raise InadmissibleGauge("dimension must be >= 2")
        if derivative_mode not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown derivative mode {derivative_mode!r}")
        self.dimension = int(dimension)
        self.derivative_mode = derivative_mode
        self.fd_step = float(fd_step)
        if validate:
            self._admit()

    # -- subclass hooks -------------------------------------------------
    def _unit_value(self, u):
        raise NotImplementedError

    def _unit_gradient(self, u):
        raise NotImplementedError

    def _unit_hessian(self, u):
        raise NotImplementedError

    def _dual_closed(self, x):
        return None

    def params(self):
        return {}

    # -- admission --------------------------------------------------------
    def _admit(self):
        res = 64 if self.dimension == 3 else 256
        grid = sphere_grid(self.dimension, res)
        fmin = float(np.min(self._unit_value(grid)))
        if not fmin > 0.0:
            raise InadmissibleGauge(f"{self.family} gauge is not positive (min F = {fmin:.3e})")
        margin = self.convexity_margin(res, refine=False)
        if not margin > 0.0:
            raise InadmissibleGauge(
                f"{self.family} gauge violates the convexity condition (margin {margin:.3e})"
            )

    @property
    def is_isotropic(self):
        return False

    def spec(self):
        out = {"family": self.family, "dimension": self.dimension,
               "derivative_mode": self.derivative_mode}
        if self.derivative_mode == "finite_difference":
            out["fd_step"] = self.fd_step
        out.update(self.params())
        return out

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.spec().items() if k != "family")
        return f"{type(self).__name__}({inner})"

    # -- evaluation -------------------------------------------------------
    def eval(self, xi):
        """``F(xi) = |xi| F(xi/|xi|)``."""
        r, u = _split(xi)
        return r * self._unit_value(u)

    __call__ = eval

    def gradient(self, xi):
        """Euclidean gradient ``DF(xi)`` of the homogeneous extension (0-homogeneous)."""
        _, u = _split(xi)
        if self.derivative_mode == "analytic":
            return self._unit_gradient(u)
        return self._fd_first(u)

    def hessian(self, xi):
        """Euclidean Hessian ``D^2F(xi)``; ``D^2F(xi) xi = 0``."""
        r, u = _split(xi)
        if self.derivative_mode == "analytic":
            Hs = self._unit_hessian(u)
        else:
            T = householder_basis(u)
            A = self._fd_form(u, T)
            Hs = T @ A @ np.swapaxes(T, -1, -2)
        return Hs / r[..., None, None]

    def cahn_hoffman(self, z):
        """``Phi(z) = grad_S F(z) + F(z) z`` for unit ``z``."""
        z = _check_unit(z)
        if self.derivative_mode == "analytic":
            return self._unit_gradient(z)
        return self._fd_first(z)

    def anisotropy_form(self, frame):
        """``A_F = Hess_S F + F sigma`` at ``frame.z`` in the frame's basis."""
        if isinstance(frame, TangentFrame):
            z, T = frame.z, frame.basis
        else:
            z, T = frame
        z = _check_unit(z)
        if self.derivative_mode == "analytic":
            Hs = self._unit_hessian(z)
            A = np.swapaxes(T, -1, -2) @ Hs @ T
        else:
            A = self._fd_form(z, T)
        return 0.5 * (A + np.swapaxes(A, -1, -2))

    # -- finite differences on great circles -------------------------------
    def _fd_first(self, u):
        T = householder_basis(u)
        h = self.fd_step
        f = self._unit_value
        out = f(u)[..., None] * u
        for i in range(self.dimension - 1):
            t = T[..., i]
            d1 = (f(np.cos(h) * u + np.sin(h) * t) - f(np.cos(h) * u - np.sin(h) * t)) / (2.0 * h)
            out = out + d1[..., None] * t
        return out

    def _geodesic_second(self, u, w):
        # five-point second derivative of F along the great circle through u with velocity w
        h = self.fd_step
        f = self._unit_value

        def g(s):
            return f(np.cos(s) * u + np.sin(s) * w)

        return (-g(2 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2 * h)) / (12.0 * h * h)

    def _fd_form(self, u, T):
        n = self.dimension - 1
        F0 = self._unit_value(u)
        A = np.zeros(u.shape[:-1] + (n, n))
        for i in range(n):
            A[..., i, i] = self._geodesic_second(u, T[..., i]) + F0
        for i in range(n):
            for j in range(i + 1, n):
                wp = (T[..., i] + T[..., j]) / np.sqrt(2.0)
                wm = (T[..., i] - T[..., j]) / np.sqrt(2.0)
                hij = 0.5 * (self._geodesic_second(u, wp) - self._geodesic_second(u, wm))
                A[..., i, j] = hij
                A[..., j, i] = hij
        return A

    # -- dual gauge -----------------------------------------------------------
    def dual_gauge(self, x, method="auto"):
        """``F°(x) = sup_z <x, z> / F(z)`` over unit ``z``.

        ``method`` is ``"auto"`` (closed form when the family has one),
        ``"closed"`` or ``"ascent"`` (multistart projected gradient ascent).
        """
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        if np.any(r < ZERO_TOL):
            raise ZeroVector("dual gauge evaluated at the zero vector")
        if method in ("auto", "closed"):
            val = self._dual_closed(x)
            if val is not None:
                return val
            if method == "closed":
                raise ValueError(f"{self.family} gauge has no closed-form dual")
        return self._dual_ascent(x)

    def dual_argmax(self, x):
        """Maximiser ``z*`` of ``<x, z>/F(z)``; satisfies ``Phi(z*) = x / F°(x)``."""
        _, z = self._ascent(np.asarray(x, dtype=float))
        return z

    def _dual_ascent(self, x):
        val, _ = self._ascent(x)
        return val

    def _ascent(self, x):
        shape = x.shape[:-1]
        d = self.dimension
        X = x.reshape(-1, d)
        r = np.linalg.norm(X, axis=-1)
        X = X / r[:, None]
        starts = _dual_starts(d)
        N, S = X.shape[0], starts.shape[0]
        Z = np.broadcast_to(starts, (N, S, d)).copy()
        Xb = np.broadcast_to(X[:, None, :], (N, S, d))

        def objective(Z):
            Fz = self._unit_value(Z)
            return np.einsum("nsd,nsd->ns", Xb, Z) / Fz, Fz

        def grad(Z, val, Fz):
            if self.derivative_mode == "analytic":
                DF = self._unit_gradient(Z)
            else:
                DF = self._fd_first(Z)
            # Euclidean gradient of the 0-homogeneous extension is tangent to the sphere
            return (Xb - val[..., None] * DF) / Fz[..., None]

        val, Fz = objective(Z)
        g = grad(Z, val, Fz)
        gn = np.linalg.norm(g, axis=-1)
        alpha = np.ones((N, S))
        active = np.ones((N, S), dtype=bool)
        for it in range(DUAL_MAX_ITER):
            if it == DUAL_WARMUP and S > DUAL_KEEP:
                # keep the most promising starts once every start has climbed a little
                keep = np.argsort(-val, axis=1)[:, :DUAL_KEEP]
                Z, g = (np.take_along_axis(a, keep[..., None], 1) for a in (Z, g))
                val, Fz, gn, alpha, active = (np.take_along_axis(a, keep, 1)
                                              for a in (val, Fz, gn, alpha, active))
                S = DUAL_KEEP
                Xb = np.broadcast_to(X[:, None, :], (N, S, d))
            active &= (gn > DUAL_GRAD_TOL) & (alpha * gn > DUAL_STEP_TOL)
            if not active.any():
                break
            idx = np.nonzero(active)
            Zt = Z[idx] + alpha[idx][:, None] * g[idx]
            Zt /= np.linalg.norm(Zt, axis=-1, keepdims=True)
            Ft = self._unit_value(Zt)
            vt = np.einsum("kd,kd->k", Xb[idx], Zt) / Ft
            ok = vt >= val[idx] + 0.25 * alpha[idx] * gn[idx] ** 2
            # accept even tiny non-decreasing steps once the Armijo gain is below roundoff
            ok |= (vt >= val[idx]) & (alpha[idx] * gn[idx] ** 2 < 1e-14)
            acc = tuple(a[ok] for a in idx)
            rej = tuple(a[~ok] for a in idx)
            Z[acc] = Zt[ok]
            val[acc] = vt[ok]
            Fz[acc] = Ft[ok]
            alpha[acc] = np.minimum(alpha[acc] * 2.0, 16.0)
            alpha[rej] *= 0.5
            if len(acc[0]):
                Za = Z[acc]
                if self.derivative_mode == "analytic":
                    DF = self._unit_gradient(Za)
                else:
                    DF = self._fd_first(Za)
                ga = (Xb[acc] - val[acc][:, None] * DF) / Fz[acc][:, None]
                g[acc] = ga
                gn[acc] = np.linalg.norm(ga, axis=-1)
        best = np.argmax(val, axis=1)
        rows = np.arange(N)
        bval = val[rows, best]
        bgn = gn[rows, best]
        if np.any(bgn > DUAL_ACCEPT_TOL):
            k = int(np.argmax(bgn))
            raise ConvergenceFailure(
                f"dual-gauge ascent stalled: gradient norm {bgn[k]:.3e} at x = {X[k]}"
            )
        return (bval * r).reshape(shape), Z[rows, best].reshape(shape + (d,))

    # -- convexity -----------------------------------------------------------
    def convexity_margin(self, grid_resolution=64, refine=True):
        """Minimum eigenvalue of ``A_F`` over a quasi-uniform sphere grid.

        With ``refine`` the four lowest grid points are polished by a local
        Nelder-Mead search in a tangent-plane chart.
        """
        if grid_resolution < 8:
            raise ValueError("grid_resolution must be >= 8")
        grid = sphere_grid(self.dimension, grid_resolution)
        T = householder_basis(grid)
        lam = np.linalg.eigvalsh(self.anisotropy_form((grid, T)))[:, 0]
        best = float(lam.min())
        if not refine:
            return best

        def lam_min(u, z0, T0):
            z = z0 + T0 @ u
            z = z / np.linalg.norm(z)
            A = self.anisotropy_form((z, householder_basis(z)))
            return float(np.linalg.eigvalsh(A)[0])

        for k in np.argsort(lam)[:4]:
            z0, T0 = grid[k], T[k]
            res = minimize(lam_min, np.zeros(self.dimension - 1), args=(z0, T0),
                           method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14})
            best = min(best, float(res.fun))
        return best


class IsotropicGauge(AnisotropyGauge):
    """``F(xi) = |xi|``."""

    family = "isotropic"

    def __init__(self, dimension=3, derivative_mode="analytic", fd_step=1e-4, validate=True):
        super().__init__(dimension, derivative_mode, fd_step, validate)

    @property
    def is_isotropic(self):
        return True

    def _unit_value(self, u):
        return np.ones(u.shape[:-1])

    def _unit_gradient(self, u):
        return np.array(u, dtype=float)

    def _unit_hessian(self, u):
        return np.eye(u.shape[-1]) - u[..., :, None] * u[..., None, :]

    def _dual_closed(self, x):
        return np.linalg.norm(x, axis=-1)


class EllipsoidalGauge(AnisotropyGauge):
    """``F(xi) = sqrt(xi^T M xi)`` for a symmetric positive definite ``M``."""

    family = "ellipsoidal"

    def __init__(self, matrix, derivative_mode="analytic", fd_step=1e-4, validate=True):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InadmissibleGauge("ellipsoidal gauge needs a square matrix")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
            raise InadmissibleGauge("ellipsoidal gauge matrix must be symmetric")
        M = 0.5 * (M + M.T)
        if np.linalg.eigvalsh(M)[0] <= 0.0:
            raise InadmissibleGauge("ellipsoidal gauge matrix must be positive definite")
        self.matrix = M
        self.matrix_inv = np.linalg.inv(M)
        self.matrix.flags.writeable = False
        self.matrix_inv.flags.writeable = False
        super().__init__(M.shape[0], derivative_mode, fd_step, validate)

    def params(self):
        return {"matrix": self.matrix.ravel().tolist()}

    def _unit_value(self, u):
        return np.sqrt(np.einsum("...i,ij,...j->...", u, self.matrix, u))

    def _unit_gradient(self, u):
        Mu = u @ self.matrix
        return Mu / np.sqrt(np.einsum("...i,...i->...", u, Mu))[..., None]

    def _unit_hessian(self, u):
        Mu = u @ self.matrix
        F = np.sqrt(np.einsum("...i,...i->...", u, Mu))[..., None, None]
        return self.matrix / F - Mu[..., :, None] * Mu[..., None, :] / F**3

    def _dual_closed(self, x):
        return np.sqrt(np.einsum("...i,ij,...j->...", x, self.matrix_inv, x))


class CapillaryGauge(AnisotropyGauge):
    """``F(xi) = |xi| - cos(theta) <xi, e>``.

    Its Wulff shape is the unit sphere centred at ``-cos(theta) e`` and
    ``A_F`` is the identity, so anisotropic and Euclidean curvatures coincide.
    """

    family = "capillary"

    def __init__(self, theta, axis=None, dimension=3, derivative_mode="analytic", fd_step=1e-4,
                 validate=True):
        theta = float(theta)
        if not 0.0 < theta < np.pi:
            raise InadmissibleGauge("capillary angle must lie in (0, pi)")
        if axis is None:
            axis = np.eye(dimension)[-1]
        e = np.array(axis, dtype=float)
        if e.shape != (dimension,):
            raise InadmissibleGauge("capillary axis has the wrong dimension")
        e /= np.linalg.norm(e)
        self.theta = theta
        self.axis = e
        self.axis.flags.writeable = False
        self.cos_theta = float(np.cos(theta))
        super().__init__(dimension, derivative_mode, fd_step, validate)

    def params(self):
        return {"theta": self.theta, "axis": self.axis.tolist()}

    def _unit_value(self, u):
        return 1.0 - self.cos_theta * (u @ self.axis)

    def _unit_gradient(self, u):
        return u - self.cos_theta * self.axis

    def _unit_hessian(self, u):
        return np.eye(u.shape[-1]) - u[..., :, None] * u[..., None, :]

    def _dual_closed(self, x):
        c = self.cos_theta
        xe = x @ self.axis
        xx = np.einsum("...i,...i->...", x, x)
        return (c * xe + np.sqrt(c * c * xe * xe + (1.0 - c * c) * xx)) / (1.0 - c * c)


class PerturbedGauge(AnisotropyGauge):
    """Base gauge plus a zonal (axially symmetric) harmonic perturbation.

    ``F(xi) = F_base(xi) + epsilon |xi| q(<xi, a>/|xi|)`` with
    ``q = sum_l c_l P_l`` a Legendre series about the unit axis ``a``.
    """

    family = "perturbed"

    def __init__(self, base, epsilon, coefficients, axis=None, derivative_mode="analytic",
                 fd_step=1e-4, validate=True):
        d = base.dimension
        if axis is None:
            axis = np.eye(d)[-1]
        a = np.array(axis, dtype=float)
        if a.shape != (d,):
            raise InadmissibleGauge("perturbation axis has the wrong dimension")
        a /= np.linalg.norm(a)
        self.base = base
        self.epsilon = float(epsilon)
        self.coefficients = np.array(coefficients, dtype=float)
        self.axis = a
        self._q = Legendre(self.coefficients)
        self._dq = self._q.deriv(1)
        self._d2q = self._q.deriv(2) if len(self.coefficients) > 2 else Legendre([0.0])
        super().__init__(d, derivative_mode, fd_step, validate)

    def params(self):
        return {"base": self.base.spec(), "epsilon": self.epsilon,
                "coefficients": self.coefficients.tolist(), "axis": self.axis.tolist()}

    def _unit_value(self, u):
        s = u @ self.axis
        return self.base._unit_value(u) + self.epsilon * self._q(s)

    def _unit_gradient(self, u):
        s = u @ self.axis
        w = self.axis - s[..., None] * u
        pert = self._q(s)[..., None] * u + self._dq(s)[..., None] * w
        return self.base._unit_gradient(u) + self.epsilon * pert

    def _unit_hessian(self, u):
        s = u @ self.axis
        w = self.axis - s[..., None] * u
        P = np.eye(u.shape[-1]) - u[..., :, None] * u[..., None, :]
        c1 = (self._q(s) - s * self._dq(s))[..., None, None]
        pert = c1 * P + self._d2q(s)[..., None, None] * w[..., :, None] * w[..., None, :]
        return self.base._unit_hessian(u) + self.epsilon * pert


def geodesic_support_check(F, x, y, z, tol=1e-8):
    """Monotonicity margin ``<Phi(y), z> - <Phi(x), z>`` for ``y`` on the geodesic ``x -> z``.

    The margin is non-negative for every uniformly convex gauge and vanishes
    only at ``y = x``.  Raises :class:`NotOnGeodesic` when ``y`` is not on the
    minimising arc (coplanarity or ordering violated beyond ``tol``).
    """
    x, y, z = (_check_unit(v) for v in (x, y, z))
    x, y, z = np.broadcast_arrays(x, y, z)
    dxz = _arc(x, z)
    # coplanarity: distance of y from span{x, z}
    e2 = z - np.einsum("...i,...i->...", z, x)[..., None] * x
    n2 = np.linalg.norm(e2, axis=-1)
    safe = n2 > 1e-12
    e2 = np.where(safe[..., None], e2 / np.where(safe, n2, 1.0)[..., None], 0.0)
    proj = (np.einsum("...i,...i->...", y, x)[..., None] * x
            + np.einsum("...i,...i->...", y, e2)[..., None] * e2)
    off_plane = np.where(safe, np.linalg.norm(y - proj, axis=-1), 0.0)
    order = _arc(x, y) + _arc(y, z) - dxz
    bad = (off_plane > tol) | (order > tol)
    if np.any(bad):
        raise NotOnGeodesic(
            f"y is not on the minimising geodesic (off-plane {np.max(off_plane):.2e}, "
            f"ordering excess {np.max(order):.2e})"
        )
    return (np.einsum("...i,...i->...", F.cahn_hoffman(y), z)
            - np.einsum("...i,...i->...", F.cahn_hoffman(x), z))


def gauge_from_spec(spec, dimension=3):
    """Build a gauge from a scenario-file dictionary."""
    spec = dict(spec)
    family = spec.pop("family")
    mode = spec.pop("derivative_mode", "analytic")
    h = spec.pop("fd_step", 1e-4)
    dim = spec.pop("dimension", dimension)
    if family == "isotropic":
        return IsotropicGauge(dim, mode, h)
    if family == "ellipsoidal":
        m = np.array(spec["matrix"], dtype=float)
        k = int(round(np.sqrt(m.size)))
        return EllipsoidalGauge(m.reshape(k, k), mode, h)
    if family == "capillary":
        return CapillaryGauge(spec["theta"], spec.get("axis"), dim, mode, h)
    if family == "perturbed":
        base = gauge_from_spec(spec["base"], dim)
        return PerturbedGauge(base, spec["epsilon"], spec["coefficients"], spec.get("axis"),
                              mode, h)
    raise ValueError(f"unknown gauge family {family!r}")
