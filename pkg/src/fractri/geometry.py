"""Planar primitives: triangles, barycentric coordinates, planes and point location."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateTriangleError, DomainError

# relative to bounding-box scale (squared for areas)
DEGENERACY_RTOL = 1e-12
LOCATE_RTOL = 1e-9
ROUNDOFF_RTOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class DataPoint3(NamedTuple):
    x: float
    y: float
    z: float


def _as_point(p) -> Point2:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {p!r}")
    return Point2(x, y)


@dataclass(frozen=True)
class Triangle2:
    """Non-degenerate triangle; degeneracy is rejected at construction."""

    a: Point2
    b: Point2
    c: Point2

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _as_point(getattr(self, name)))
        if abs(self.area) <= DEGENERACY_RTOL * self.scale**2:
            raise DegenerateTriangleError(f"degenerate triangle {self.a}, {self.b}, {self.c}")

    @classmethod
    def from_flat(cls, values) -> "Triangle2":
        v = [float(t) for t in values]
        if len(v) != 6:
            raise ValueError("expected six coordinates x1,y1,x2,y2,x3,y3")
        return cls(Point2(v[0], v[1]), Point2(v[2], v[3]), Point2(v[4], v[5]))

    @property
    def vertices(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    @property
    def scale(self) -> float:
        v = self.vertices
        span = v.max(axis=0) - v.min(axis=0)
        return float(span.max())

    @property
    def area(self) -> float:
        return signed_area(self)

    @property
    def tolerance(self) -> float:
        """Point-in-triangle tolerance in length units."""
        return LOCATE_RTOL * self.scale

    def contains(self, p, tol: float | None = None) -> bool:
        tol = self.tolerance if tol is None else tol
        w = np.asarray(barycentric(self, p))
        return bool(np.all(w * _altitudes(self.vertices) >= -tol))


def signed_area(t: Triangle2) -> float:
    (xa, ya), (xb, yb), (xc, yc) = t.a, t.b, t.c
    return 0.5 * ((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya))


def centroid(t: Triangle2) -> Point2:
    return Point2((t.a.x + t.b.x + t.c.x) / 3.0, (t.a.y + t.b.y + t.c.y) / 3.0)


def barycentric(t: Triangle2, p) -> tuple:
    """Barycentric weights of ``p`` (a point or an ``(..., 2)`` array) w.r.t. ``t``.

    Weights are normalised so that they sum to one.
    """
    p = np.asarray(p, dtype=float)
    (xa, ya), (xb, yb), (xc, yc) = t.a, t.b, t.c
    det = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya)
    if det == 0.0:
        raise DegenerateTriangleError("barycentric coordinates of a degenerate triangle")
    px, py = p[..., 0], p[..., 1]
    wb = ((px - xa) * (yc - ya) - (xc - xa) * (py - ya)) / det
    wc = ((xb - xa) * (py - ya) - (px - xa) * (yb - ya)) / det
    wa = 1.0 - wb - wc
    if p.ndim == 1:
        return float(wa), float(wb), float(wc)
    return wa, wb, wc


def _norm(d: np.ndarray) -> np.ndarray:
    return np.hypot(d[..., 0], d[..., 1])


def _altitudes(v: np.ndarray) -> np.ndarray:
    """Altitudes onto the edges opposite each vertex, for arrays ``(..., 3, 2)``."""
    a, b, c = v[..., 0, :], v[..., 1, :], v[..., 2, :]
    area2 = np.abs((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                   - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1]))
    opp = np.stack([_norm(c - b), _norm(a - c), _norm(b - a)], axis=-1)
    return area2[..., None] / opp


@dataclass(frozen=True)
class Plane:
    """The plane z = p*x + q*y + r."""

    p: float
    q: float
    r: float

    def __call__(self, x, y):
        return self.p * x + self.q * y + self.r


def plane_coefficients(x, y, z):
    """Vectorised plane through three points; arrays have a trailing axis of length 3.

    Uses the explicit rational expressions for the plane through
    (x1,y1,z1), (x2,y2,z2), (x3,y3,z3). Returns ``(p, q, r, den)`` where ``den``
    is the shared denominator (twice the signed area of the projected triangle).
    """
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    y1, y2, y3 = y[..., 0], y[..., 1], y[..., 2]
    z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2]
    den = x2 * y3 - x3 * y2 + x3 * y1 - x1 * y3 + x1 * y2 - x2 * y1
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (x2 * z3 - x3 * z2 + x3 * z1 - x1 * z3 + x1 * z2 - x2 * z1) / den
        p = -(y2 * z3 - y3 * z2 + y3 * z1 - y1 * z3 + y1 * z2 - y2 * z1) / den
        r = -((x3 * y2 - x2 * y3) * z1 + (x1 * y3 - x3 * y1) * z2 + (x2 * y1 - x1 * y2) * z3) / den
    return p, q, r, den


def plane_through(p1, p2, p3) -> Plane:
    pts = np.array([p1, p2, p3], dtype=float)
    if pts.shape != (3, 3) or not np.all(np.isfinite(pts)):
        raise ValueError("plane_through needs three finite (x, y, z) points")
    span = np.ptp(pts[:, :2], axis=0).max()
    p, q, r, den = plane_coefficients(pts[:, 0], pts[:, 1], pts[:, 2])
    if abs(den) <= 2 * DEGENERACY_RTOL * span**2:
        raise DegenerateTriangleError("projected points are collinear")
    return Plane(float(p), float(q), float(r))


class TriangleLocator:
    """Bucket-grid point location over a set of triangles.

    Containment is tested with barycentric weights scaled to signed edge
    distances, so ``tol`` is in length units. Among containing triangles the
    lowest index wins; triangles containing the point up to roundoff are
    preferred over ones that only reach it within ``tol``, so maps are never
    extrapolated past a neighbour that really holds the point.
    """

    def __init__(self, points: np.ndarray, triangles: np.ndarray, tol: float):
        self.points = np.asarray(points, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.tol = float(tol)
        v = self.points[self.triangles]  # (N, 3, 2)
        self.eps = ROUNDOFF_RTOL * float(np.ptp(v.reshape(-1, 2), axis=0).max())
        self._a = v[:, 0, :]
        e1 = v[:, 1, :] - self._a
        e2 = v[:, 2, :] - self._a
        det = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
        # rows of inv map (p - a) to the weights of vertices 1 and 2
        self._inv = np.stack([np.stack([e2[:, 1], -e2[:, 0]], -1),
                              np.stack([-e1[:, 1], e1[:, 0]], -1)], 1) / det[:, None, None]
        self._alt = _altitudes(v)

        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        n = len(self.triangles)
        cells = max(1, int(math.ceil(math.sqrt(n))))
        self._lo = lo
        self._size = np.maximum((hi - lo) / cells, 1e-300)
        self._shape = (cells, cells)
        tmin = np.floor((v.min(axis=1) - self.tol - lo) / self._size).astype(np.int64)
        tmax = np.floor((v.max(axis=1) + self.tol - lo) / self._size).astype(np.int64)
        tmin = np.clip(tmin, 0, cells - 1)
        tmax = np.clip(tmax, 0, cells - 1)
        buckets: list[list[int]] = [[] for _ in range(cells * cells)]
        for k in range(n):
            for i in range(tmin[k, 0], tmax[k, 0] + 1):
                row = i * cells
                for j in range(tmin[k, 1], tmax[k, 1] + 1):
                    buckets[row + j].append(k)
        width = max(len(b) for b in buckets)
        table = np.full((cells * cells, max(width, 1)), -1, dtype=np.int64)
        for c, b in enumerate(buckets):
            table[c, : len(b)] = b
        self._table = table

    def weights(self, idx: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Barycentric weights ``(..., 3)`` of ``pts`` in triangles ``idx``."""
        d = pts - self._a[idx]
        inv = self._inv[idx]
        w1 = inv[..., 0, 0] * d[..., 0] + inv[..., 0, 1] * d[..., 1]
        w2 = inv[..., 1, 0] * d[..., 0] + inv[..., 1, 1] * d[..., 1]
        return np.stack([1.0 - w1 - w2, w1, w2], axis=-1)

    def margin(self, idx: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Smallest signed distance from ``pts`` to the edges of triangles ``idx``."""
        return (self.weights(idx, pts) * self._alt[idx]).min(axis=-1)

    def query(self, pts, strict: bool = True, chunk: int = 1 << 15) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(len(pts), dtype=np.int64)
        for s in range(0, len(pts), chunk):
            out[s:s + chunk] = self._query(pts[s:s + chunk], strict)
        return out

    def _query(self, pts: np.ndarray, strict: bool) -> np.ndarray:
        cell = np.floor((pts - self._lo) / self._size).astype(np.int64)
        cell = np.clip(cell, 0, self._shape[0] - 1)
        cand = self._table[cell[:, 0] * self._shape[1] + cell[:, 1]]  # (P, K)
        valid = cand >= 0
        safe = np.where(valid, cand, 0)
        m = self.margin(safe, pts[:, None, :])
        m = np.where(valid, m, -np.inf)
        rows = np.arange(len(pts))
        # candidates are stored in ascending order, so argmax picks the lowest index;
        # containment up to roundoff wins over the tolerance band
        exact = m >= -self.eps
        inside = m >= -self.tol
        first_exact = np.argmax(exact, axis=1)
        first = np.where(exact[rows, first_exact], first_exact, np.argmax(inside, axis=1))
        hit = inside[rows, first]
        result = safe[rows, first]
        if not hit.all():
            if strict:
                bad = pts[~hit][0]
                raise DomainError(f"point ({bad[0]:.17g}, {bad[1]:.17g}) lies outside the domain")
            best = np.argmax(m, axis=1)
            result = np.where(hit, result, safe[rows, best])
        return result


def locate(partition, p):
    """Index of the lowest-numbered subtriangle containing ``p``.

    ``p`` may be a single point (returns an int) or an ``(M, 2)`` array.
    Raises :class:`DomainError` for points outside the domain beyond tolerance.
    """
    arr = np.asarray(p, dtype=float)
    idx = partition.locator.query(arr)
    return int(idx[0]) if arr.ndim == 1 else idx
