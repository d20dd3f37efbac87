"""IFS maps w_n = (L_n, F_n), vertical scaling factors and the hyperbolicity check.

Each subtriangle ``D_n`` gets an affine map ``L_n: D -> D_n`` sending the base
vertex of color j to the vertex of ``D_n`` with color j, and
``F_n(x, y, z) = alpha5*x + alpha6*y + beta3 + alpha7*z`` with
``F_n(x_j, y_j, z_j) = z_nj``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateTriangleError, DomainError
from .geometry import DEGENERACY_RTOL, ROUNDOFF_RTOL, Plane

SCALING_MODES = ("centroid", "least-squares", "fixed")
COEFFICIENT_NAMES = ("alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "alpha7",
                     "beta1", "beta2", "beta3", "delta")


@dataclass(frozen=True)
class AffineMapCoefficients:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    alpha7: float
    beta1: float
    beta2: float
    beta3: float
    delta: float

    def L(self, x, y):
        return (self.alpha1 * x + self.alpha2 * y + self.beta1,
                self.alpha3 * x + self.alpha4 * y + self.beta2)

    def L_inv(self, x, y):
        det = self.alpha1 * self.alpha4 - self.alpha2 * self.alpha3
        u, v = x - self.beta1, y - self.beta2
        return (self.alpha4 * u - self.alpha2 * v) / det, (self.alpha1 * v - self.alpha3 * u) / det

    def Q(self, x, y):
        return self.alpha5 * x + self.alpha6 * y + self.beta3

    def F(self, x, y, z):
        return self.Q(x, y) + self.alpha7 * z

    def w(self, x, y, z):
        return (*self.L(x, y), self.F(x, y, z))


@dataclass(frozen=True)
class ScalingPolicy:
    """How the vertical scaling factors alpha_n7 are chosen.

    ``value`` is used in ``fixed`` mode and may be a scalar or one value per
    subtriangle. ``dprime`` is the barycentric sampling depth for
    ``least-squares``.
    """

    mode: str = "centroid"
    value: float | tuple = 0.0
    clamp: float = 0.9
    dprime: int = 4

    def __post_init__(self):
        if self.mode not in SCALING_MODES:
            raise ValueError(f"unknown scaling mode {self.mode!r}; expected one of {SCALING_MODES}")
        if not 0.0 < self.clamp < 1.0:
            raise ValueError("clamp bound must lie in (0, 1)")
        if int(self.dprime) != self.dprime or self.dprime < 1:
            raise ValueError("dprime must be a positive integer")
        if self.mode == "fixed":
            vals = np.atleast_1d(np.asarray(self.value, dtype=float))
            if not np.all(np.isfinite(vals)) or np.any(np.abs(vals) > self.clamp):
                raise DomainError(f"fixed scaling factors must satisfy |alpha| <= {self.clamp}")
            if vals.size > 1:
                object.__setattr__(self, "value", tuple(vals.tolist()))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value, "clamp": self.clamp, "dprime": self.dprime}


class MapTable:
    """All N maps as coefficient arrays (one entry per subtriangle)."""

    def __init__(self, **arrays):
        for name in COEFFICIENT_NAMES:
            setattr(self, name, np.asarray(arrays[name], dtype=float))
        det = self.alpha1 * self.alpha4 - self.alpha2 * self.alpha3
        self._inv = np.stack([self.alpha4, -self.alpha2, -self.alpha3, self.alpha1], -1) / det[:, None]

    def __len__(self) -> int:
        return len(self.alpha1)

    def __getitem__(self, n: int) -> AffineMapCoefficients:
        return AffineMapCoefficients(**{k: float(getattr(self, k)[n]) for k in COEFFICIENT_NAMES})

    def __iter__(self):
        return (self[n] for n in range(len(self)))

    def as_array(self) -> np.ndarray:
        return np.stack([getattr(self, k) for k in COEFFICIENT_NAMES], axis=1)

    def L(self, idx, x, y):
        return (self.alpha1[idx] * x + self.alpha2[idx] * y + self.beta1[idx],
                self.alpha3[idx] * x + self.alpha4[idx] * y + self.beta2[idx])

    def L_inv(self, idx, x, y):
        inv = self._inv[idx]
        u, v = x - self.beta1[idx], y - self.beta2[idx]
        return inv[..., 0] * u + inv[..., 1] * v, inv[..., 2] * u + inv[..., 3] * v

    def Q(self, idx, x, y):
        return self.alpha5[idx] * x + self.alpha6[idx] * y + self.beta3[idx]

    def renumbered(self, order) -> "MapTable":
        return MapTable(**{k: getattr(self, k)[order] for k in COEFFICIENT_NAMES})


def solve_all(base_data, sub_data, alpha7) -> MapTable:
    """Closed-form coefficients for many maps at once.

    ``base_data`` is ``(3, 3)``: color-ordered ``(x, y, z)`` rows of the base
    triangle. ``sub_data`` is ``(N, 3, 3)`` with the color-ordered data of each
    subtriangle, ``alpha7`` has shape ``(N,)``.
    """
    base = np.asarray(base_data, dtype=float)
    sub = np.asarray(sub_data, dtype=float)
    a7 = np.broadcast_to(np.asarray(alpha7, dtype=float), sub.shape[:1])
    if np.any(np.abs(a7) >= 1.0):
        raise DomainError("vertical scaling factors must satisfy |alpha7| < 1")

    (x1, y1, z1), (x2, y2, z2), (x3, y3, z3) = base
    xn1, xn2, xn3 = sub[:, 0, 0], sub[:, 1, 0], sub[:, 2, 0]
    yn1, yn2, yn3 = sub[:, 0, 1], sub[:, 1, 1], sub[:, 2, 1]
    zn1, zn2, zn3 = sub[:, 0, 2], sub[:, 1, 2], sub[:, 2, 2]

    den = (x1 - x2) * (y1 - y3) - (x1 - x3) * (y1 - y2)
    scale = max(np.ptp(base[:, 0]), np.ptp(base[:, 1]))
    if abs(den) <= 2 * DEGENERACY_RTOL * scale**2:
        raise DegenerateTriangleError("base triangle is degenerate (zero denominator)")

    w1, w2, w3 = zn1 - a7 * z1, zn2 - a7 * z2, zn3 - a7 * z3
    alpha1 = ((xn1 - xn2) * (y1 - y3) - (xn1 - xn3) * (y1 - y2)) / den
    alpha2 = ((xn1 - xn3) * (x1 - x2) - (xn1 - xn2) * (x1 - x3)) / den
    alpha3 = ((yn1 - yn2) * (y1 - y3) - (yn1 - yn3) * (y1 - y2)) / den
    alpha4 = ((yn1 - yn3) * (x1 - x2) - (yn1 - yn2) * (x1 - x3)) / den
    alpha5 = (w1 * (y2 - y3) + w2 * (y3 - y1) + w3 * (y1 - y2)) / den
    alpha6 = -(w1 * (x2 - x3) + w2 * (x3 - x1) + w3 * (x1 - x2)) / den
    beta1 = ((xn1 * x2 - x1 * xn2) * y3 + (xn3 * x1 - x3 * xn1) * y2 + (xn2 * x3 - x2 * xn3) * y1) / den
    beta2 = ((x2 * y3 - x3 * y2) * yn1 + (x3 * y1 - x1 * y3) * yn2 + (x1 * y2 - x2 * y1) * yn3) / den
    beta3 = (w1 * (x2 * y3 - x3 * y2) + w2 * (x3 * y1 - x1 * y3) + w3 * (x1 * y2 - x2 * y1)) / den
    delta = np.abs(alpha1 * alpha4 - alpha2 * alpha3)
    return MapTable(alpha1=alpha1, alpha2=alpha2, alpha3=alpha3, alpha4=alpha4,
                    alpha5=alpha5, alpha6=alpha6, alpha7=np.array(a7), beta1=beta1,
                    beta2=beta2, beta3=beta3, delta=delta)


def solve_coefficients(base_data, sub_data, alpha7: float) -> AffineMapCoefficients:
    """Coefficients of one map from color-ordered ``(x, y, z)`` triples."""
    sub = np.asarray(sub_data, dtype=float)[None]
    return solve_all(base_data, sub, np.array([alpha7]))[0]


def endpoint_residuals(maps: MapTable, base_data, sub_data) -> np.ndarray:
    """Max relative residual of L_n(x_j, y_j) = (x_nj, y_nj) and F_n(x_j, y_j, z_j) = z_nj per map."""
    base = np.asarray(base_data, dtype=float)
    sub = np.asarray(sub_data, dtype=float)
    n = np.arange(len(maps))[:, None]
    bx, by, bz = base[None, :, 0], base[None, :, 1], base[None, :, 2]
    lx, ly = maps.L(n, bx, by)
    fz = maps.Q(n, bx, by) + maps.alpha7[n] * bz
    xy_scale = max(np.abs(sub[..., :2]).max(), np.abs(base[:, :2]).max(), 1e-300)
    z_scale = max(np.abs(sub[..., 2]).max(), np.abs(base[:, 2]).max(), 1.0)
    rx = np.abs(lx - sub[..., 0]) / xy_scale
    ry = np.abs(ly - sub[..., 1]) / xy_scale
    rz = np.abs(fz - sub[..., 2]) / z_scale
    return np.maximum(np.maximum(rx, ry), rz).max(axis=1)


def scaling_centroid(zG, zn1, zn2, zn3, zH, z1, z2, z3, clamp: float = 0.9):
    """alpha_n7 from the centroid value of f on D_n relative to the centroid value on D.

    Vectorises over the subtriangle arguments. A vanishing denominator
    (f affine on D) gives 0.
    """
    den = zH - (z1 + z2 + z3) / 3.0
    scale = max(abs(zH), abs(z1), abs(z2), abs(z3))
    num = np.asarray(zG, dtype=float) - (np.asarray(zn1) + np.asarray(zn2) + np.asarray(zn3)) / 3.0
    if abs(den) <= 1e-12 * scale:
        out = np.zeros_like(num)
    else:
        out = np.clip(num / den, -clamp, clamp)
    return float(out) if out.ndim == 0 else out


def barycentric_grid(vertices, depth: int) -> np.ndarray:
    """All points ``(i*v0 + j*v1 + k*v2)/depth`` with ``i + j + k = depth``.

    ``vertices`` is ``(..., 3, 2)``; returns ``(..., S, 2)`` with
    ``S = (depth + 1)(depth + 2)/2``.
    """
    v = np.asarray(vertices, dtype=float)
    w = np.array([(i, j, depth - i - j) for i in range(depth + 1) for j in range(depth + 1 - i)],
                 dtype=float) / depth
    return np.einsum("sk,...kd->...sd", w, v)


def _ls_terms(samples, z, h: Plane, b: Plane, L: AffineMapCoefficients):
    samples = np.asarray(samples, dtype=float)
    z = np.asarray(z, dtype=float)
    x, y = samples[:, 0], samples[:, 1]
    u_x, u_y = L.L_inv(x, y)
    u = h(u_x, u_y) - b(u_x, u_y)
    r = z - h(x, y)
    return r, u


def scaling_least_squares(samples, z, h: Plane, b: Plane, L: AffineMapCoefficients,
                          clamp: float = 0.9, clip: bool = True) -> float:
    """Least-squares alpha_n7 with u = (h - b) o L_n^-1; 0 when u vanishes to roundoff."""
    r, u = _ls_terms(samples, z, h, b, L)
    uu = math.fsum(u * u)
    scale = float(np.max(np.abs(z), initial=0.0))
    if uu <= len(u) * (ROUNDOFF_RTOL * scale) ** 2:
        return 0.0
    value = math.fsum(r * u) / uu
    return float(np.clip(value, -clamp, clamp)) if clip else value


def scaling_bound(samples, z, h: Plane, b: Plane, L: AffineMapCoefficients) -> float:
    """Cauchy-Schwarz bound ||z - h|| / k_h on the unclamped least-squares factor."""
    r, u = _ls_terms(samples, z, h, b, L)
    num = math.sqrt(math.fsum(r * r))
    k_h = math.sqrt(math.fsum(u * u))
    if num == 0.0:
        return 0.0
    if k_h == 0.0:
        raise DomainError("k_h = 0: h and b coincide on the samples")
    return num / k_h


class HyperbolicityReport(NamedTuple):
    theta: float
    contraction: float
    certified: bool


def hyperbolicity_theta(maps) -> HyperbolicityReport:
    """theta for the metric |dx| + |dy| + theta*|dz| and the resulting contraction factor.

    The certificate holds when theta > 0. A branch whose z-coupling
    coefficients all vanish is unconstrained (+inf) if its planar part
    contracts, and hopeless (-inf) otherwise.
    """
    if isinstance(maps, MapTable):
        a = maps
    else:
        items = list(maps)
        if not items:
            raise ValueError("need at least one map")
        a = MapTable(**{k: [getattr(m, k) for m in items] for k in COEFFICIENT_NAMES})
    branches = []
    for lin1, lin2, coupling in ((a.alpha1, a.alpha3, a.alpha5), (a.alpha2, a.alpha4, a.alpha6)):
        slack = float(np.min(0.5 - (np.abs(lin1) + np.abs(lin2))))
        top = float(np.max(np.abs(coupling)))
        if top == 0.0:
            branches.append(math.inf if slack > 0 else -math.inf)
        else:
            branches.append(slack / top)
    theta = min(branches)
    contraction = max(0.5, float(np.max(np.abs(a.alpha7))))
    certified = theta > 0 and contraction < 1
    return HyperbolicityReport(theta, contraction, certified)
