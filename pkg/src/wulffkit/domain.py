"""Stratified convex containers.

Every flat-faced container is stored as an intersection of half-spaces
``{<n_j, x> <= b_j}`` with outward unit normals ``n_j``.  Circular cones and
balls have their own smooth boundary.  Points are classified by their
distance to the faces with tolerance ``tau = 1e-7 * scale``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import (
    AnisotropicOnEdge,
    BoundaryOffContainer,
    InvalidContainer,
    SingularBoundaryContact,
)

TAU_REL = 1e-7
ADMISSIBLE_TOL = 1e-6

INTERIOR, REGULAR, EDGE, HIGHER, OUTSIDE = "interior", "regular", "edge", "higher_singular", "outside"


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class StratumLabel:
    kind: str
    normals: tuple = ()
    facets: tuple = ()

    @property
    def on_boundary(self):
        return self.kind in (REGULAR, EDGE, HIGHER)


class ConvexContainer:
    kind = "abstract"
    dimension: int
    scale: float = 1.0
    # boundary made of pieces that are cones over some point (planes, circular cones)
    conical_faces = True

    @property
    def tau(self):
        return TAU_REL * self.scale

    def classify_many(self, x):
        raise NotImplementedError

    def classify(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.classify_many(x[None])[0]
        return self.classify_many(x)

    def contains(self, x, tol=0.0):
        raise NotImplementedError

    def boundary_normals(self, x):
        """Outward normals at each point: one (regular), two (edge) or none."""
        out = []
        for lab in self.classify_many(np.atleast_2d(x)):
            out.append(list(lab.normals) if lab.kind in (REGULAR, EDGE) else [])
        return out

    def scaled(self, s):
        raise NotImplementedError

    def spec(self):
        raise NotImplementedError


class WholeSpace(ConvexContainer):
    """No container: closed surfaces."""

    kind = "whole"

    def __init__(self, dimension=3):
        self.dimension = dimension

    def classify_many(self, x):
        return [StratumLabel(INTERIOR) for _ in range(len(x))]

    def contains(self, x, tol=0.0):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    def scaled(self, s):
        return self

    def spec(self):
        return {"type": "whole"}


class Polytope(ConvexContainer):
    """``{x : <n_j, x> <= b_j for all j}`` with irredundant facets and nonempty interior."""

    kind = "polytope"

    def __init__(self, normals, offsets, scale=1.0, check=True):
        N = np.atleast_2d(np.array(normals, dtype=float))
        nrm = np.linalg.norm(N, axis=1)
        if np.any(nrm == 0):
            raise InvalidContainer("zero facet normal")
        self.normals = N / nrm[:, None]
        self.offsets = np.array(offsets, dtype=float).ravel() / nrm
        if self.offsets.shape[0] != self.normals.shape[0]:
            raise InvalidContainer("normals and offsets differ in length")
        self.dimension = self.normals.shape[1]
        self.scale = float(scale)
        if check:
            c, r = self.chebyshev_center()
            if not r > self.tau:
                raise InvalidContainer("container has empty interior")
            self._check_irredundant()

    def chebyshev_center(self):
        """Center and radius of the largest inscribed ball (radius capped at ``1e3 scale``)."""
        m, d = self.normals.shape
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        A = np.hstack([self.normals, np.ones((m, 1))])
        cap = 1e3 * self.scale
        res = linprog(cost, A_ub=A, b_ub=self.offsets, bounds=[(None, None)] * d + [(0, cap)],
                      method="highs")
        if res.status != 0:
            raise InvalidContainer(f"Chebyshev-center LP failed: {res.message}")
        return res.x[:d], float(res.x[-1])

    def _check_irredundant(self):
        m, d = self.normals.shape
        for j in range(m):
            others = [k for k in range(m) if k != j]
            A = np.vstack([self.normals[others], self.normals[j]])
            b = np.concatenate([self.offsets[others], [self.offsets[j] + self.scale]])
            res = linprog(-self.normals[j], A_ub=A, b_ub=b, bounds=[(None, None)] * d,
                          method="highs")
            if res.status == 0 and -res.fun <= self.offsets[j] + self.tau:
                raise InvalidContainer(f"facet {j} is redundant")

    def _signed(self, x):
        return x @ self.normals.T - self.offsets

    def contains(self, x, tol=0.0):
        return np.all(self._signed(np.asarray(x, dtype=float)) <= tol, axis=-1)

    def classify_many(self, x):
        s = self._signed(np.atleast_2d(x))
        out = []
        for row in s:
            if np.any(row > self.tau):
                out.append(StratumLabel(OUTSIDE))
                continue
            near = np.flatnonzero(np.abs(row) <= self.tau)
            normals = tuple(self.normals[j] for j in near)
            if len(near) == 0:
                out.append(StratumLabel(INTERIOR))
            elif len(near) == 1:
                out.append(StratumLabel(REGULAR, normals, tuple(near)))
            elif len(near) == 2:
                out.append(StratumLabel(EDGE, normals, tuple(near)))
            else:
                out.append(StratumLabel(HIGHER, normals, tuple(near)))
        return out

    def scaled(self, s):
        return type(self)._rebuild(self, self.normals, s * self.offsets, s * self.scale)

    @staticmethod
    def _rebuild(obj, normals, offsets, scale):
        new = object.__new__(type(obj))
        Polytope.__init__(new, normals, offsets, scale, check=False)
        return new

    def spec(self):
        return {"type": "polytope", "normals": self.normals.tolist(),
                "offsets": self.offsets.tolist()}


class HalfSpace(Polytope):
    """``{<n, x> <= b}``; ``n`` is the outward normal of the boundary plane."""

    kind = "half_space"

    def __init__(self, normal, offset=0.0, scale=1.0, check=True):
        super().__init__([normal], [offset], scale, check=False)

    @property
    def normal(self):
        return self.normals[0]

    @property
    def offset(self):
        return float(self.offsets[0])

    def cut_value(self, x):
        return self.offset - np.asarray(x) @ self.normal

    def cut_gradient(self, x):
        return np.broadcast_to(-self.normal, np.shape(x))

    def cap_axis(self):
        return -self.normal

    def spec(self):
        return {"type": "half_space", "normal": self.normal.tolist(), "offset": self.offset}


class Wedge(Polytope):
    """Intersection of two half-spaces with dihedral angle ``alpha``."""

    kind = "wedge"

    def __init__(self, normals, offsets, scale=1.0, check=True):
        if len(normals) != 2:
            raise InvalidContainer("a wedge has exactly two facets")
        super().__init__(normals, offsets, scale, check)
        c = float(self.normals[0] @ self.normals[1])
        if abs(abs(c) - 1.0) < 1e-12:
            raise InvalidContainer("wedge facets are parallel")

    @property
    def dihedral_angle(self):
        return float(np.pi - np.arccos(np.clip(self.normals[0] @ self.normals[1], -1, 1)))

    def facet(self, j):
        return HalfSpace(self.normals[j], self.offsets[j], self.scale)

    def spec(self):
        return {"type": "wedge", "normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


def polyhedral_cone(vertex, normals, scale=1.0):
    """Cone over a spherical polygon: facets through ``vertex`` with the given outward normals."""
    N = _unit(np.atleast_2d(normals))
    v = np.asarray(vertex, dtype=float)
    return Polytope(N, N @ v, scale)


class Cone(ConvexContainer):
    """Circular cone ``{w = x - v : <w, A> >= cos(beta) |w|}``, ``0 < beta < pi/2``."""

    kind = "cone"

    def __init__(self, vertex, axis, half_angle, scale=1.0):
        self.vertex = np.array(vertex, dtype=float)
        self.axis = _unit(axis)
        self.beta = float(half_angle)
        if not 0.0 < self.beta < np.pi / 2:
            raise InvalidContainer("cone half-angle must lie in (0, pi/2)")
        self.dimension = self.vertex.shape[0]
        self.scale = float(scale)

    def _parts(self, x):
        w = np.atleast_2d(x) - self.vertex
        r = np.linalg.norm(w, axis=-1)
        h = w @ self.axis
        q = w - h[:, None] * self.axis
        qn = np.linalg.norm(q, axis=-1)
        gamma = np.arctan2(qn, h)
        return w, r, q, qn, gamma

    def _signed(self, x):
        _, r, _, _, gamma = self._parts(x)
        g = gamma - self.beta
        return np.where(g < -np.pi / 2, -r, np.where(g > np.pi / 2, r, r * np.sin(g)))

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        s = self._signed(x.reshape(-1, self.dimension))
        return (s <= tol).reshape(x.shape[:-1])

    def normal_at(self, x):
        _, _, q, qn, _ = self._parts(x)
        qh = q / np.where(qn > 0, qn, 1.0)[:, None]
        return np.cos(self.beta) * qh - np.sin(self.beta) * self.axis

    def classify_many(self, x):
        x = np.atleast_2d(x)
        _, r, _, _, _ = self._parts(x)
        s = self._signed(x)
        nb = self.normal_at(x)
        out = []
        for k in range(x.shape[0]):
            if r[k] <= self.tau:
                out.append(StratumLabel(HIGHER))
            elif s[k] > self.tau:
                out.append(StratumLabel(OUTSIDE))
            elif s[k] < -self.tau:
                out.append(StratumLabel(INTERIOR))
            else:
                out.append(StratumLabel(REGULAR, (nb[k],), (0,)))
        return out

    def cut_value(self, x):
        w = np.asarray(x, dtype=float) - self.vertex
        return w @ self.axis - np.cos(self.beta) * np.linalg.norm(w, axis=-1)

    def cut_gradient(self, x):
        w = np.asarray(x, dtype=float) - self.vertex
        return self.axis - np.cos(self.beta) * w / np.linalg.norm(w, axis=-1, keepdims=True)

    def cap_axis(self):
        return self.axis.copy()

    def scaled(self, s):
        return Cone(s * self.vertex, self.axis, self.beta, s * self.scale)

    def spec(self):
        return {"type": "cone", "vertex": self.vertex.tolist(), "axis": self.axis.tolist(),
                "half_angle": self.beta}


class Ball(ConvexContainer):
    kind = "ball"
    conical_faces = False

    def __init__(self, center, radius):
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise InvalidContainer("ball radius must be positive")
        self.dimension = self.center.shape[0]
        self.scale = self.radius

    def contains(self, x, tol=0.0):
        return np.linalg.norm(np.asarray(x) - self.center, axis=-1) - self.radius <= tol

    def classify_many(self, x):
        w = np.atleast_2d(x) - self.center
        r = np.linalg.norm(w, axis=-1)
        out = []
        for k in range(w.shape[0]):
            s = r[k] - self.radius
            if s > self.tau:
                out.append(StratumLabel(OUTSIDE))
            elif s < -self.tau:
                out.append(StratumLabel(INTERIOR))
            else:
                out.append(StratumLabel(REGULAR, (w[k] / r[k],), (0,)))
        return out

    def scaled(self, s):
        return Ball(s * self.center, s * self.radius)

    def spec(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


def container_from_spec(spec, dimension=3) -> ConvexContainer:
    spec = dict(spec)
    kind = spec.pop("type")
    scale = spec.pop("scale", 1.0)
    if kind == "whole":
        return WholeSpace(dimension)
    if kind == "half_space":
        return HalfSpace(spec["normal"], spec.get("offset", 0.0), scale)
    if kind == "wedge":
        return Wedge(spec["normals"], spec["offsets"], scale)
    if kind == "polytope":
        return Polytope(spec["normals"], spec["offsets"], scale)
    if kind == "cone":
        if "normals" in spec:
            return polyhedral_cone(spec["vertex"], spec["normals"], scale)
        return Cone(spec["vertex"], spec["axis"], spec["half_angle"], scale)
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    raise ValueError(f"unknown container type {kind!r}")


def classify(K: ConvexContainer, x):
    return K.classify(x)


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------

def container_conormal(trace, normals):
    """``nubar = -<nu, Nbar> mu + <mu, Nbar> nu`` (co-normal of the boundary in the container)."""
    nb = np.asarray(normals)
    a = np.einsum("ij,ij->i", trace.nu, nb)
    b = np.einsum("ij,ij->i", trace.mu, nb)
    return -a[:, None] * trace.mu + b[:, None] * trace.nu


@dataclass
class AdmissibilityReport:
    admissible: bool
    max_contact: float
    max_edge_contact: float
    free_boundary_residual: float
    transversality: float
    conormal_alignment: float
    conormal_parallel: bool
    prop_residuals: dict = field(default_factory=dict)
    n_regular: int = 0
    n_edge: int = 0
    tolerance: float = ADMISSIBLE_TOL

    def as_dict(self):
        return {
            "admissible": bool(self.admissible),
            "max_contact": float(self.max_contact),
            "max_edge_contact": float(self.max_edge_contact),
            "free_boundary_residual": float(self.free_boundary_residual),
            "transversality": float(self.transversality),
            "conormal_alignment": float(self.conormal_alignment),
            "conormal_parallel": bool(self.conormal_parallel),
            "prop_residuals": {k: float(v) for k, v in self.prop_residuals.items()},
            "n_regular": int(self.n_regular),
            "n_edge": int(self.n_edge),
            "tolerance": float(self.tolerance),
        }


def _regular_frame(trace, K):
    labels = K.classify_many(trace.x)
    kinds = [lab.kind for lab in labels]
    if HIGHER in kinds:
        k = kinds.index(HIGHER)
        raise SingularBoundaryContact(f"boundary sample {k} touches a vertex of the container")
    off = [i for i, s in enumerate(kinds) if s in (INTERIOR, OUTSIDE)]
    if off:
        raise BoundaryOffContainer(f"boundary sample {off[0]} is not on the container boundary")
    return labels, kinds


def admissibility_report(F, trace, K, tol=ADMISSIBLE_TOL, mode=None) -> AdmissibilityReport:
    """Contact-angle conditions along the boundary.

    ``mode`` is ``"isotropic"`` or ``"anisotropic"``; by default it follows
    the gauge.  Edge contact is only allowed in isotropic mode.
    """
    if mode is None:
        mode = "isotropic" if F.is_isotropic else "anisotropic"
    labels, kinds = _regular_frame(trace, K)
    reg = np.array([k == REGULAR for k in kinds])
    edge = ~reg
    if mode == "anisotropic" and np.any(edge):
        raise AnisotropicOnEdge("anisotropic boundary meets an edge of the container")

    max_contact = fb = align = -np.inf
    trans = np.inf
    prop = {"mu_F_nu_F": float(np.max(np.abs(np.einsum("ij,ij->i", trace.mu_F, trace.nu_F))))}
    if np.any(reg):
        idx = np.flatnonzero(reg)
        nb = np.array([labels[i].normals[0] for i in idx])
        c = np.einsum("ij,ij->i", trace.nu_F[idx], nb)
        max_contact = float(np.max(c))
        fb = float(np.max(np.abs(c)))
        cosang = np.abs(np.einsum("ij,ij->i", trace.nu[idx], nb))
        trans = float(np.min(np.arccos(np.clip(cosang, 0.0, 1.0))))
        mf = trace.mu_F[idx] / np.linalg.norm(trace.mu_F[idx], axis=-1, keepdims=True)
        align = float(np.max(np.linalg.norm(mf - nb, axis=-1)))
        sub = _Sub(trace, idx)
        nubar = container_conormal(sub, nb)
        prop["mu_F_N"] = float(np.max(np.abs(np.einsum("ij,ij->i", sub.mu_F, nb)
                                             - np.einsum("ij,ij->i", sub.nu_F, nubar))))
        prop["mu_F_nubar"] = float(np.max(np.abs(np.einsum("ij,ij->i", sub.mu_F, nubar)
                                                 + np.einsum("ij,ij->i", sub.nu_F, nb))))
    max_edge = -np.inf
    if np.any(edge):
        vals = []
        for i in np.flatnonzero(edge):
            for nb in labels[i].normals:
                vals.append(float(trace.nu[i] @ nb))
                trans = min(trans, float(np.arccos(min(1.0, abs(trace.nu[i] @ nb)))))
        max_edge = max(vals)
    ok = max_contact <= tol and max_edge <= tol and trans > 0.0
    return AdmissibilityReport(
        admissible=bool(ok),
        max_contact=max_contact,
        max_edge_contact=max_edge,
        free_boundary_residual=fb if np.isfinite(fb) else 0.0,
        transversality=trans,
        conormal_alignment=align if np.isfinite(align) else 0.0,
        conormal_parallel=bool(align <= tol),
        prop_residuals=prop,
        n_regular=int(np.sum(reg)),
        n_edge=int(np.sum(edge)),
        tolerance=tol,
    )


class _Sub:
    # row subset of a trace
    def __init__(self, trace, idx):
        for name in ("x", "mu", "nu", "mu_F", "nu_F"):
            setattr(self, name, getattr(trace, name)[idx])


def capillary_residual(trace, K, theta) -> float:
    """``max |mu_F/|mu_F| - (sin(theta) Nbar + cos(theta) nubar)|`` over the boundary."""
    labels, kinds = _regular_frame(trace, K)
    if any(k != REGULAR for k in kinds):
        raise SingularBoundaryContact("capillary residual needs regular boundary contact")
    nb = np.array([lab.normals[0] for lab in labels])
    nubar = container_conormal(trace, nb)
    mf = trace.mu_F / np.linalg.norm(trace.mu_F, axis=-1, keepdims=True)
    target = np.sin(theta) * nb + np.cos(theta) * nubar
    return float(np.max(np.linalg.norm(mf - target, axis=-1)))


def wedge_touch_inequalities(eta1, eta2, alpha):
    """``(cos eta2 + cos eta1 cos alpha >= 0, cos eta1 + cos eta2 cos alpha >= 0)``.

    Both true: an edge first-touch is geometrically consistent.  Either false:
    such a touch is excluded.  A tiny slack absorbs rounding in the boundary
    case ``0 >= 0``.
    """
    for a in (eta1, eta2, alpha):
        if not 0.0 < a < np.pi:
            raise ValueError("angles must lie in (0, pi)")
    slack = 1e-15
    c1, c2, ca = np.cos(eta1), np.cos(eta2), np.cos(alpha)
    return bool(c2 + c1 * ca >= -slack), bool(c1 + c2 * ca >= -slack)
