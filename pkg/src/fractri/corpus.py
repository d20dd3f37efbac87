"""Built-in test functions with canonical triangles and reference integrals.

Canonical triangles are isosceles with the base on the bottom edge of the
square range and the apex at the top middle. Reference integrals come from
integrating over horizontal cross-sections: at height y the triangle with
half-base ``a`` and half-height ``h`` spans ``|x| <= a (h - y) / (2h)``, odd
powers of x drop out, and the remaining polynomial in y integrates exactly.

* Matyas on ((-10,-10), (10,-10), (0,10)):
  int 0.26 (x^2 + y^2) dx dy = 2600, the xy term vanishes by symmetry.
* Three-hump camel on ((-5,-5), (5,-5), (0,5)): 276875/84 = 3296.1309523...
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .geometry import Triangle2, centroid, signed_area

UNIT_TRIANGLE = Triangle2((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
MATYAS_TRIANGLE = Triangle2((-10.0, -10.0), (10.0, -10.0), (0.0, 10.0))
CAMEL_TRIANGLE = Triangle2((-5.0, -5.0), (5.0, -5.0), (0.0, 5.0))

MATYAS_INTEGRAL = 2600.0
CAMEL_INTEGRAL = float(Fraction(276875, 84))


def matyas(x, y):
    return 0.26 * (x * x + y * y) - 0.48 * x * y


def three_hump_camel(x, y):
    return 2.0 * x**2 - 1.05 * x**4 + x**6 / 6.0 + x * y + y**2


@dataclass(frozen=True)
class TestFunction:
    """A named surface ``f(x, y)`` (vectorised) with its canonical triangle."""

    __test__ = False  # not a pytest class

    name: str
    func: Callable
    base: Triangle2
    reference: float | None = None
    affine: tuple[float, float, float] | None = None

    def __call__(self, x, y):
        return self.func(x, y)

    def exact_integral(self, base: Triangle2 | None = None) -> float | None:
        """Known integral over ``base`` (defaults to the canonical triangle), or None."""
        if base is None or base == self.base:
            if self.reference is not None:
                return self.reference
            base = self.base
        if self.affine is not None:
            g = centroid(base)
            p, q, r = self.affine
            return abs(signed_area(base)) * (p * g.x + q * g.y + r)
        return None


def _plane(p: float, q: float, r: float) -> Callable:
    def f(x, y):
        return p * np.asarray(x, dtype=float) + q * np.asarray(y, dtype=float) + r
    return f


def builtin(name: str) -> TestFunction:
    """Look up ``matyas``, ``three-hump-camel``, ``plane:p,q,r`` or ``constant:c``."""
    key = name.strip().lower()
    if key == "matyas":
        return TestFunction("matyas", matyas, MATYAS_TRIANGLE, MATYAS_INTEGRAL)
    if key in ("three-hump-camel", "camel"):
        return TestFunction("three-hump-camel", three_hump_camel, CAMEL_TRIANGLE, CAMEL_INTEGRAL)
    kind, _, args = key.partition(":")
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        values = None
    if kind == "plane" and values and len(values) == 3:
        p, q, r = values
        return TestFunction(name, _plane(p, q, r), UNIT_TRIANGLE, affine=(p, q, r))
    if kind == "constant" and values and len(values) == 1:
        (c,) = values
        return TestFunction(name, _plane(0.0, 0.0, c), UNIT_TRIANGLE, affine=(0.0, 0.0, c))
    raise KeyError(f"unknown test function {name!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    vertex_z: np.ndarray
    centroid_z: np.ndarray
    base_centroid_z: float


def sample_dataset(f, partition) -> Dataset:
    """Values of ``f`` at every vertex, every subtriangle centroid and the base centroid."""
    pts = partition.points
    cen = partition.centroids()
    g = centroid(partition.base)
    vz = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float) * np.ones(len(pts))
    cz = np.asarray(f(cen[:, 0], cen[:, 1]), dtype=float) * np.ones(len(cen))
    return Dataset(vz, cz, float(f(g.x, g.y)))
