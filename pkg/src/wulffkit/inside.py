"""Point-in-region tests against a :class:`~wulffkit.surface.ClosedCycle`.

Ray parity (Moller-Trumbore in 3-D, crossing number in 2-D) for sampling,
and the generalized winding number (solid-angle sum) for robust membership.
"""

from __future__ import annotations

import numpy as np

# fixed, irrational-looking ray direction so rays rarely graze mesh edges
_RAY3 = np.array([0.5773502691896258, 0.5345224838248488, 0.6172133998483676])
_RAY3 = _RAY3 / np.linalg.norm(_RAY3)
_RAY2 = np.array([0.8191520442889918, 0.5735764363510461])

_CHUNK = 2_000_000


def _chunks(m, width):
    step = max(1, _CHUNK // max(width, 1))
    for i in range(0, m, step):
        yield slice(i, min(m, i + step))


def ray_parity(cycle, points):
    """True where a ray from the point crosses the cycle an odd number of times."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    V, C = cycle.vertices, cycle.cells
    out = np.zeros(P.shape[0], dtype=bool)
    if cycle.dimension == 2:
        a, b = V[C[:, 0]], V[C[:, 1]]
        e = b - a
        r = _RAY2
        den = e[:, 0] * r[1] - e[:, 1] * r[0]
        for sl in _chunks(P.shape[0], len(C)):
            w = a[None] - P[sl, None, :]
            # solve P + t r = a + s e
            t = (w[..., 0] * e[:, 1] - w[..., 1] * e[:, 0]) / np.where(den == 0, np.inf, -den)
            s = (w[..., 0] * r[1] - w[..., 1] * r[0]) / np.where(den == 0, np.inf, -den)
            hit = (t > 0) & (s >= 0) & (s < 1)
            out[sl] = (hit.sum(axis=1) % 2) == 1
        return out
    v0, v1, v2 = V[C[:, 0]], V[C[:, 1]], V[C[:, 2]]
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(_RAY3, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    for sl in _chunks(P.shape[0], len(C)):
        tvec = P[sl, None, :] - v0[None]
        u = np.einsum("mti,ti->mt", tvec, pvec) * inv
        q = np.cross(tvec, e1[None])
        v = (q @ _RAY3) * inv
        t = np.einsum("mti,ti->mt", q, e2) * inv
        hit = ok & (u >= 0) & (v >= 0) & (u + v < 1) & (t > 0)
        out[sl] = (hit.sum(axis=1) % 2) == 1
    return out


def winding_number(cycle, points):
    """Generalized winding number; about 1 inside an outward-oriented cycle, 0 outside."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    V, C = cycle.vertices, cycle.cells
    out = np.zeros(P.shape[0])
    if cycle.dimension == 2:
        for sl in _chunks(P.shape[0], len(C)):
            a = V[C[:, 0]][None] - P[sl, None, :]
            b = V[C[:, 1]][None] - P[sl, None, :]
            cr = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
            dt = np.einsum("mti,mti->mt", a, b)
            out[sl] = np.arctan2(cr, dt).sum(axis=1) / (2.0 * np.pi)
        return out
    for sl in _chunks(P.shape[0], len(C)):
        a = V[C[:, 0]][None] - P[sl, None, :]
        b = V[C[:, 1]][None] - P[sl, None, :]
        c = V[C[:, 2]][None] - P[sl, None, :]
        la, lb, lc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
        num = np.einsum("mti,mti->mt", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("mti,mti->mt", a, b) * lc
               + np.einsum("mti,mti->mt", a, c) * lb + np.einsum("mti,mti->mt", b, c) * la)
        out[sl] = (2.0 * np.arctan2(num, den)).sum(axis=1) / (4.0 * np.pi)
    return out
