"""Fractal interpolation surface: model assembly, the operator T and its fixed point.

The surface f is the fixed point of

    (Tg)(p) = alpha_n7 * g(L_n^-1 p) + Q_n(L_n^-1 p),   p in D_n,

and is evaluated pointwise by unrolling this relation along the orbit
p -> L_n^-1 p -> ... The tail after k steps is replaced by the base plane b;
its error is at most |prod alpha| * ||f - b||, and ||f - b|| is bounded by
max_n ||h_n - b|| / (1 - max|alpha|) where h_n is the plane through the data
of D_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, MissingDataError
from .geometry import ROUNDOFF_RTOL, Plane, Triangle2, barycentric, centroid, plane_coefficients, plane_through
from .ifs import (HyperbolicityReport, MapTable, ScalingPolicy, barycentric_grid,
                  hyperbolicity_theta, scaling_centroid, solve_all)
from .partition import ColoredPartition, partition_triangle

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
BURN_IN = 100
# barycentric weights below this are treated as exactly zero during evaluation
SNAP_BARYCENTRIC = 1e-11


@dataclass(frozen=True, eq=False)
class BfifModel:
    partition: ColoredPartition
    vertex_z: np.ndarray
    maps: MapTable
    policy: ScalingPolicy
    hyperbolicity: HyperbolicityReport
    source: str | None = None

    @property
    def N(self) -> int:
        return self.partition.N

    @property
    def d(self) -> int:
        return self.partition.d

    @property
    def base_data(self) -> np.ndarray:
        """Color-ordered ``(x, y, z)`` rows for the corners of D."""
        idx = self.partition.base_by_color
        return np.column_stack([self.partition.points[idx], self.vertex_z[idx]])

    @property
    def sub_data(self) -> np.ndarray:
        """Color-ordered ``(x, y, z)`` data of every subtriangle, ``(N, 3, 3)``."""
        tri = self.partition.triangles
        return np.concatenate([self.partition.points[tri], self.vertex_z[tri][..., None]], axis=-1)

    @cached_property
    def base_plane(self) -> Plane:
        return plane_through(*self.base_data)

    @cached_property
    def _sub_planes(self):
        s = self.sub_data
        p, q, r, _ = plane_coefficients(s[..., 0], s[..., 1], s[..., 2])
        return p, q, r

    def h(self, idx, x, y):
        """Plane through the data of subtriangle ``idx`` evaluated at ``(x, y)``."""
        p, q, r = self._sub_planes
        return p[idx] * x + q[idx] * y + r[idx]

    @cached_property
    def h_minus_b(self) -> float:
        """max_n sup over D_n of |h_n - b| (attained at the vertices)."""
        pts = self.partition.points
        return float(np.max(np.abs(self.vertex_z - self.base_plane(pts[:, 0], pts[:, 1]))))

    @property
    def max_alpha(self) -> float:
        return float(np.max(np.abs(self.maps.alpha7)))

    @cached_property
    def f_minus_b_bound(self) -> float:
        return self.h_minus_b / (1.0 - self.max_alpha)

    def clamp_to_domain(self, x, y):
        """Snap points within roundoff of the boundary of D onto it.

        Orbits that start on a shared edge run along the boundary of D. The
        inverse maps of thin subtriangles expand the normal direction far more
        than the tangential one, so a one-ulp offset off the boundary would
        otherwise grow into a visible error within a dozen steps.
        """
        wa, wb, wc = barycentric(self.partition.base, np.column_stack([x, y]))
        w = np.column_stack([wa, wb, wc])
        near = np.any(w < SNAP_BARYCENTRIC, axis=1)
        if not near.any():
            return x, y
        w = w[near]
        w[w < SNAP_BARYCENTRIC] = 0.0
        p = (w / w.sum(axis=1, keepdims=True)) @ self.partition.base.vertices
        x, y = x.copy(), y.copy()
        x[near], y[near] = p[:, 0], p[:, 1]
        return x, y

    def locate(self, pts, strict: bool = True) -> np.ndarray:
        return self.partition.locator.query(pts, strict=strict)

    def renumbered(self, order) -> "BfifModel":
        order = np.asarray(order)
        return BfifModel(self.partition.renumbered(order), self.vertex_z,
                         self.maps.renumbered(order), self.policy, self.hyperbolicity, self.source)


def _values(f: Callable, xy: np.ndarray) -> np.ndarray:
    out = np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float)
    return np.broadcast_to(out, xy.shape[:-1]).copy()


def _least_squares_alpha(partition, base_data, sub_data, function, policy) -> np.ndarray:
    linear = solve_all(base_data, sub_data, np.zeros(len(sub_data)))
    samples = barycentric_grid(sub_data[..., :2], policy.dprime)  # (N, S, 2)
    z = _values(function, samples)
    p, q, r, _ = plane_coefficients(sub_data[..., 0], sub_data[..., 1], sub_data[..., 2])
    b = plane_through(*base_data)
    n = np.arange(len(sub_data))[:, None]
    ux, uy = linear.L_inv(n, samples[..., 0], samples[..., 1])
    u = (p[:, None] * ux + q[:, None] * uy + r[:, None]) - b(ux, uy)
    res = z - (p[:, None] * samples[..., 0] + q[:, None] * samples[..., 1] + r[:, None])
    uu = np.sum(u * u, axis=1)
    # h = b up to roundoff (affine data) leaves u as pure noise; treat it as zero
    floor = samples.shape[1] * (ROUNDOFF_RTOL * float(np.max(np.abs(sub_data[..., 2]), initial=0.0))) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(uu > floor, np.sum(res * u, axis=1) / uu, 0.0)
    return np.clip(alpha, -policy.clamp, policy.clamp)


def assemble_model(partition: ColoredPartition, policy: ScalingPolicy | None = None, *,
                   function: Callable | None = None, vertex_z=None, centroid_z=None,
                   base_centroid_z: float | None = None, source: str | None = None) -> BfifModel:
    """Solve all N maps on an existing partition.

    Vertex values come from ``vertex_z`` or, failing that, ``function``.
    Centroid scaling needs centroid values (given or sampled); least-squares
    scaling needs ``function`` to sample the interior of each subtriangle.
    """
    policy = policy or ScalingPolicy()
    if vertex_z is None:
        if function is None:
            raise MissingDataError("need vertex values or a function to sample")
        vertex_z = _values(function, partition.points)
    vertex_z = np.asarray(vertex_z, dtype=float)
    if vertex_z.shape != (partition.V,):
        raise MissingDataError(f"expected {partition.V} vertex values, got {vertex_z.size}")
    if not np.all(np.isfinite(vertex_z)):
        raise MissingDataError("vertex values must be finite")

    tri = partition.triangles
    sub_data = np.concatenate([partition.points[tri], vertex_z[tri][..., None]], axis=-1)
    idx = partition.base_by_color
    base_data = np.column_stack([partition.points[idx], vertex_z[idx]])

    if policy.mode == "fixed":
        alpha = np.asarray(policy.value, dtype=float)
        if alpha.ndim == 0 or alpha.size == 1:
            alpha = np.full(partition.N, float(alpha.reshape(-1)[0]))
        elif alpha.shape != (partition.N,):
            raise MissingDataError(f"expected 1 or {partition.N} fixed scaling factors")
    elif policy.mode == "centroid":
        if centroid_z is None or base_centroid_z is None:
            if function is None:
                raise MissingDataError("centroid scaling needs centroid values or a function")
            if centroid_z is None:
                centroid_z = _values(function, partition.centroids())
            if base_centroid_z is None:
                g = centroid(partition.base)
                base_centroid_z = float(function(g.x, g.y))
        centroid_z = np.asarray(centroid_z, dtype=float)
        if centroid_z.shape != (partition.N,):
            raise MissingDataError(f"expected {partition.N} centroid values, got {centroid_z.size}")
        zb = base_data[:, 2]
        alpha = scaling_centroid(centroid_z, sub_data[:, 0, 2], sub_data[:, 1, 2], sub_data[:, 2, 2],
                                 float(base_centroid_z), zb[0], zb[1], zb[2], clamp=policy.clamp)
    else:
        if function is None:
            raise MissingDataError("least-squares scaling needs a function to sample")
        alpha = _least_squares_alpha(partition, base_data, sub_data, function, policy)

    maps = solve_all(base_data, sub_data, np.asarray(alpha, dtype=float))
    return BfifModel(partition, vertex_z, maps, policy, hyperbolicity_theta(maps), source)


def build_model(base: Triangle2, d: int, policy: ScalingPolicy | None = None, **kwargs) -> BfifModel:
    return assemble_model(partition_triangle(base, d), policy, **kwargs)


def _points(p):
    arr = np.asarray(p, dtype=float)
    return np.atleast_2d(arr), arr.ndim == 1


def apply_T(model: BfifModel, g: Callable, p, start: int | None = None):
    """(Tg)(p) for a vectorised surface ``g``; ``start`` forces the subtriangle."""
    pts, single = _points(p)
    n = model.locate(pts) if start is None else np.full(len(pts), start)
    u, v = model.maps.L_inv(n, pts[:, 0], pts[:, 1])
    out = model.maps.alpha7[n] * np.asarray(g(u, v), dtype=float) + model.maps.Q(n, u, v)
    return float(out[0]) if single else out


def evaluate(model: BfifModel, p, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
             start: int | None = None):
    """Value of the fixed point f at ``p`` with guaranteed error below ``tol``.

    ``start`` forces the first subtriangle (for two-sided edge checks);
    otherwise the lowest-index containing subtriangle is used.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    pts, single = _points(p)
    maps, b = model.maps, model.base_plane
    bound = model.f_minus_b_bound
    x, y = pts[:, 0].copy(), pts[:, 1].copy()
    n = model.locate(pts) if start is None else np.full(len(pts), int(start))
    ids = np.arange(len(pts))
    total = np.zeros(len(pts))
    weight = np.ones(len(pts))
    result = np.empty(len(pts))
    for _ in range(max_iter):
        x, y = maps.L_inv(n, x, y)
        total += weight * maps.Q(n, x, y)
        weight *= maps.alpha7[n]
        done = np.abs(weight) * bound < tol
        result[ids[done]] = total[done] + weight[done] * b(x[done], y[done])
        keep = ~done
        if not keep.any():
            break
        x, y, ids, total, weight = x[keep], y[keep], ids[keep], total[keep], weight[keep]
        x, y = model.clamp_to_domain(x, y)
        n = model.locate(np.column_stack([x, y]), strict=False)
    else:
        result[ids] = total + weight * b(x, y)
        achieved = float(np.max(np.abs(weight)) * bound)
        raise ConvergenceError(f"max_iter={max_iter} reached with error bound {achieved:.3g}",
                               values=result, bound=achieved)
    return float(result[0]) if single else result


def check_plane_relation(model: BfifModel, samples, tol: float = DEFAULT_TOL) -> float:
    """max |f(p) - h_n(p) - alpha_n7 (f - b)(L_n^-1 p)| over the samples."""
    pts, _ = _points(samples)
    n = model.locate(pts)
    fp = evaluate(model, pts, tol)
    ux, uy = model.maps.L_inv(n, pts[:, 0], pts[:, 1])
    fu = evaluate(model, np.column_stack([ux, uy]), tol)
    rhs = model.h(n, pts[:, 0], pts[:, 1]) + model.maps.alpha7[n] * (fu - model.base_plane(ux, uy))
    return float(np.max(np.abs(fp - rhs)))


def shared_edges(partition: ColoredPartition) -> np.ndarray:
    """Rows ``(v1, v2, n, m)`` for every edge that is a full side of two subtriangles."""
    tri = partition.triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    owner = np.tile(np.arange(len(tri)), 3)
    e = np.sort(e, axis=1)
    order = np.lexsort((owner, e[:, 1], e[:, 0]))
    e, owner = e[order], owner[order]
    same = np.all(e[1:] == e[:-1], axis=1)
    k = np.flatnonzero(same)
    return np.column_stack([e[k], owner[k], owner[k + 1]])


def edge_consistency(model: BfifModel, count: int = 100, seed: int = 0,
                     tol: float = DEFAULT_TOL) -> float:
    """Largest two-sided disagreement of f at random points of shared edges."""
    rng = np.random.default_rng(seed)
    edges = shared_edges(model.partition)
    pick = edges[rng.integers(len(edges), size=count)]
    t = rng.uniform(0.05, 0.95, size=count)[:, None]
    pts = model.partition.points
    p = (1 - t) * pts[pick[:, 0]] + t * pts[pick[:, 1]]
    worst = 0.0
    for k in range(count):
        a = evaluate(model, p[k], tol, start=int(pick[k, 2]))
        c = evaluate(model, p[k], tol, start=int(pick[k, 3]))
        worst = max(worst, abs(a - c))
    return worst


def hanging_node_gap(model: BfifModel, tol: float = DEFAULT_TOL) -> float:
    """Disagreement at hanging nodes between the strip value and the middle top map."""
    part = model.partition
    d = part.d
    row = (d - 1) * (d + 1)
    hanging = np.arange(row + 2, row + d - 1)
    if len(hanging) == 0:
        return 0.0
    middle = part.N - 2
    via_top = evaluate(model, part.points[hanging], tol, start=middle)
    return float(np.max(np.abs(via_top - model.vertex_z[hanging])))


@dataclass(frozen=True, eq=False)
class PointCloud:
    xyz: np.ndarray

    def __len__(self) -> int:
        return len(self.xyz)

    def write(self, path) -> None:
        path = Path(path)
        if path.suffix.lower() == ".ply":
            self.write_ply(path)
        else:
            self.write_csv(path)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,z\n")
            for x, y, z in self.xyz:
                fh.write(f"{x:.17g},{y:.17g},{z:.17g}\n")

    def write_ply(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(self.xyz)}\n")
            fh.write("property double x\nproperty double y\nproperty double z\nend_header\n")
            for x, y, z in self.xyz:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def _apply_maps(model: BfifModel, idx, xyz: np.ndarray) -> np.ndarray:
    m = model.maps
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    lx, ly = m.L(idx, x, y)
    return np.stack([lx, ly, m.Q(idx, x, y) + m.alpha7[idx] * z], axis=-1)


def render_attractor(model: BfifModel, n_points: int, method: str = "chaos",
                     seed: int = 0, chains: int = 1024) -> PointCloud:
    """Sample the attractor of {w_n}.

    ``chaos`` runs independent random-iteration chains (map n drawn with
    probability delta_n) from data points, dropping a burn-in. ``iterate``
    (alias ``deterministic``) applies every map to the data points until
    there are enough points, then takes an evenly spaced subset. Data
    points lie on the graph, so both methods only produce points of G.
    """
    if int(n_points) != n_points or n_points <= 0:
        raise ValueError("n_points must be a positive integer")
    n_points = int(n_points)
    pts = model.partition.points
    start = np.column_stack([pts, model.vertex_z])
    if method == "chaos":
        rng = np.random.default_rng(seed)
        prob = model.maps.delta / model.maps.delta.sum()
        chains = min(chains, n_points)
        steps = -(-n_points // chains)
        cur = start[rng.integers(len(start), size=chains)]
        out = np.empty((steps, chains, 3))
        for k in range(BURN_IN + steps):
            cur = _apply_maps(model, rng.choice(len(prob), size=chains, p=prob), cur)
            if k >= BURN_IN:
                out[k - BURN_IN] = cur
        return PointCloud(out.reshape(-1, 3)[:n_points])
    if method in ("iterate", "deterministic"):
        cur = start
        while len(cur) < n_points:
            idx = np.arange(model.N)[:, None]
            cur = _apply_maps(model, idx, cur[None, :, :]).reshape(-1, 3)
        pick = np.linspace(0, len(cur) - 1, n_points).round().astype(np.int64)
        return PointCloud(cur[pick])
    raise ValueError(f"unknown render method {method!r}")
