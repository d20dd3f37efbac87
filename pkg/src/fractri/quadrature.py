"""Closed-form integral of the fractal surface, reference cubature and error estimates.

Integrating the fixed-point relation over D and changing variables on each
D_n gives

    M = A * M + B,  A = sum_n alpha_n7 delta_n,
                    B = sum_n delta_n * int_D Q_n(u, v) du dv,

so M = B / (1 - A). Q_n is affine, hence each term of B is exactly
|D| * Q_n(centroid of D).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .bfif import BfifModel, evaluate
from .errors import SingularModelError
from .geometry import Triangle2, centroid, signed_area
from .ifs import barycentric_grid
from .parallel import map_chunks

SINGULAR_GUARD = 1e-12
MIN_MC_SAMPLES = 10_000
MC_CHUNK = 1 << 15

# Degree-5 symmetric 7-point rule on the reference triangle (barycentric points, weights sum to 1)
_S15 = math.sqrt(15.0)
_A1, _A2 = (6.0 - _S15) / 21.0, (6.0 + _S15) / 21.0
_W1, _W2 = (155.0 - _S15) / 1200.0, (155.0 + _S15) / 1200.0
RULE7_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
RULE7_WEIGHTS = np.array([0.225, _W1, _W1, _W1, _W2, _W2, _W2])


@dataclass(frozen=True)
class IntegralReport:
    d: int
    N: int
    A: float
    B: float
    M: float
    I: float | None = None

    @property
    def error(self) -> float | None:
        return None if self.I is None else self.M - self.I

    def with_reference(self, I: float) -> "IntegralReport":
        return IntegralReport(self.d, self.N, self.A, self.B, self.M, float(I))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["error"] = self.error
        if self.I is None:
            del out["I"], out["error"]
        return out


def _divide(A: float, B: float) -> float:
    if not abs(1.0 - A) >= SINGULAR_GUARD:
        raise SingularModelError(f"1 - A = {1.0 - A:.3g}: scaling factors too large, integral undefined")
    return B / (1.0 - A)


def integrate(model: BfifModel) -> IntegralReport:
    """M = B / (1 - A) with every B term integrated exactly by the centroid rule."""
    maps = model.maps
    base = model.partition.base
    g = centroid(base)
    area = abs(signed_area(base))
    A = math.fsum(maps.alpha7 * maps.delta)
    B = math.fsum(maps.delta * area * maps.Q(slice(None), g.x, g.y))
    return IntegralReport(model.d, model.N, A, B, _divide(A, B))


def integrate_alternative(model: BfifModel) -> float:
    """Same M with B written through the subtriangle data: sum |D_n| (mean z_n - alpha_n7 mean z_base)."""
    maps = model.maps
    sub_z = model.sub_data[..., 2]
    base_mean = float(np.mean(model.base_data[:, 2]))
    A = math.fsum(maps.alpha7 * maps.delta)
    B = math.fsum(model.partition.areas() * (sub_z.mean(axis=1) - maps.alpha7 * base_mean))
    return _divide(A, B)


def reference_integral(f: Callable, base: Triangle2, refinement: int = 64) -> float:
    """Composite 7-point cubature over ``refinement**2`` congruent subtriangles of ``base``."""
    if int(refinement) != refinement or refinement < 1:
        raise ValueError("refinement must be a positive integer")
    r = int(refinement)
    v = base.vertices
    # all small triangles in barycentric lattice units: upright then inverted
    i, j = np.meshgrid(np.arange(r), np.arange(r), indexing="ij")
    up = (i + j) < r
    iu, ju = i[up], j[up]
    down = (i + j) < r - 1
    idn, jdn = i[down], j[down]
    corners = np.concatenate([
        np.stack([np.stack([iu, ju], -1), np.stack([iu + 1, ju], -1), np.stack([iu, ju + 1], -1)], 1),
        np.stack([np.stack([idn + 1, jdn], -1), np.stack([idn + 1, jdn + 1], -1),
                  np.stack([idn, jdn + 1], -1)], 1),
    ]) / r  # (r^2, 3, 2) lattice coordinates (s, t): p = a + s (b - a) + t (c - a)
    xy = v[0] + corners[..., :1] * (v[1] - v[0]) + corners[..., 1:] * (v[2] - v[0])
    nodes = np.einsum("qk,tkc->tqc", RULE7_POINTS, xy)
    values = np.asarray(f(nodes[..., 0], nodes[..., 1]), dtype=float) * np.ones(nodes.shape[:-1])
    small_area = abs(signed_area(base)) / (r * r)
    per_triangle = values @ RULE7_WEIGHTS
    return small_area * math.fsum(per_triangle)


def _uniform_in_triangle(rng: np.random.Generator, base: Triangle2, n: int) -> np.ndarray:
    """Rejection sampling from the bounding box until ``n`` points fall inside ``base``."""
    v = base.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    accepted = []
    have = 0
    while have < n:
        batch = rng.uniform(lo, hi, size=(max(2 * (n - have), 1024), 2))
        inside = batch[_inside(base, batch)]
        accepted.append(inside)
        have += len(inside)
    return np.concatenate(accepted)[:n]


def _inside(base: Triangle2, pts: np.ndarray) -> np.ndarray:
    a, b, c = base.vertices
    s = np.sign(signed_area(base))

    def side(p, q):
        return s * ((q[0] - p[0]) * (pts[:, 1] - p[1]) - (q[1] - p[1]) * (pts[:, 0] - p[0])) >= 0

    return side(a, b) & side(b, c) & side(c, a)


def monte_carlo_bfif_integral(model: BfifModel, n_samples: int = 1_000_000, seed: int = 0,
                              tol: float = 1e-8) -> tuple[float, float]:
    """Estimate of the integral of the surface itself, with its standard error.

    Samples are drawn up front from one seeded stream, so the result does not
    depend on the thread count.
    """
    if int(n_samples) != n_samples or n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"n_samples must be an integer >= {MIN_MC_SAMPLES}")
    base = model.partition.base
    pts = _uniform_in_triangle(np.random.default_rng(seed), base, int(n_samples))
    chunks = [pts[k:k + MC_CHUNK] for k in range(0, len(pts), MC_CHUNK)]
    values = np.concatenate(map_chunks(lambda c: evaluate(model, c, tol), chunks))
    area = abs(signed_area(base))
    mean = math.fsum(values) / len(values)
    stderr = area * float(np.std(values, ddof=1)) / math.sqrt(len(values))
    return area * mean, stderr


@dataclass(frozen=True)
class ErrorBoundReport:
    delta: float
    w_f: float
    k_prime: float
    k_h: float
    k_h_prime: float
    h_minus_b: float
    max_alpha: float
    sup_bound: float
    integral_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pairs_within(rng, base: Triangle2, n: int, radius: float):
    p = _uniform_in_triangle(rng, base, n)
    q = np.empty_like(p)
    pending = np.arange(n)
    while len(pending):
        r = radius * np.sqrt(rng.uniform(size=len(pending)))
        phi = rng.uniform(0.0, 2.0 * np.pi, size=len(pending))
        cand = p[pending] + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        ok = _inside(base, cand)
        q[pending[ok]] = cand[ok]
        pending = pending[~ok]
    return p, q


def error_bound(model: BfifModel, f: Callable, probe: int = 4000, seed: int = 0) -> ErrorBoundReport:
    """Sampled estimate of the sup-norm and integral error bounds.

    These are estimates, not rigorous bounds: the modulus of continuity and
    ``||h - b||`` are maxima over random probes.
    """
    if int(probe) != probe or probe < 1:
        raise ValueError("probe must be a positive integer")
    rng = np.random.default_rng(seed)
    part = model.partition
    base = part.base
    v = part.vertices_xy()
    diam = np.max(np.linalg.norm(v[:, [1, 2, 0]] - v, axis=-1))
    p, q = _pairs_within(rng, base, int(probe), float(diam))
    w_f = float(np.max(np.abs(np.asarray(f(p[:, 0], p[:, 1])) - np.asarray(f(q[:, 0], q[:, 1])))))
    k_prime = 12.0 * float(np.max(np.abs(v[..., 0]))) * float(np.max(np.abs(v[..., 1])))

    s = _uniform_in_triangle(rng, base, int(probe))
    n = model.locate(s)
    h_minus_b = float(np.max(np.abs(model.h(n, s[:, 0], s[:, 1]) - model.base_plane(s[:, 0], s[:, 1]))))

    grid = barycentric_grid(v, model.policy.dprime)
    idx = np.arange(model.N)[:, None]
    ux, uy = model.maps.L_inv(idx, grid[..., 0], grid[..., 1])
    u = model.h(idx, ux, uy) - model.base_plane(ux, uy)
    k_h = float(np.min(np.sqrt(np.sum(u * u, axis=1))))
    k_h_prime = grid.shape[1] * k_prime / k_h if k_h > 0 else math.inf

    max_alpha = model.max_alpha
    sup_bound = w_f * k_prime + h_minus_b * max_alpha / (1.0 - max_alpha)
    return ErrorBoundReport(float(diam), w_f, k_prime, k_h, k_h_prime, h_minus_b, max_alpha,
                            sup_bound, abs(signed_area(base)) * sup_bound)
