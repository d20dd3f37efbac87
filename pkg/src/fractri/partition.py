"""Row/strip partition of a triangle and its rainbow 3-coloring.

The base triangle ``(a, b, c)`` is cut by ``d`` rows parallel to ``ab``:
row ``j`` (0-based) sits at height fraction ``j/d`` towards the apex ``c``
and carries ``d + 1`` equally spaced points between the sides ``ac`` and
``bc``. Consecutive rows bound a strip of ``2d`` triangles; the apex is joined
to the 2nd and d-th points of the last row, giving three top triangles.
Points 3..d-1 of the last row are hanging nodes on the middle top triangle.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ColoringError
from .geometry import Point2, Triangle2, TriangleLocator

MIN_D = 4


def count_formulas(d: int) -> tuple[int, int]:
    """Return ``(N, V)``: the number of subtriangles and of vertices."""
    return 2 * d * d - 2 * d + 3, d * d + d + 1


@dataclass(frozen=True, eq=False)
class PartitionLayout:
    """Uncolored partition: geometry and connectivity only."""

    base: Triangle2
    d: int
    points: np.ndarray
    triangles: np.ndarray
    corners: tuple[int, int, int]

    @cached_property
    def edges(self) -> np.ndarray:
        return _triangle_edges(self.triangles)


@dataclass(frozen=True, eq=False)
class ColoredPartition:
    """Partition whose vertices carry colors 1..3.

    ``triangles[n, j]`` is the index of the vertex of subtriangle ``n`` with
    color ``j + 1``. ``corners`` are the vertex indices of the base corners
    ``a, b, c`` (in base order, not color order).
    """

    base: Triangle2
    d: int
    points: np.ndarray
    colors: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    corners: tuple[int, int, int]
    _locator: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return len(self.triangles)

    @property
    def V(self) -> int:
        return len(self.points)

    @property
    def tolerance(self) -> float:
        return self.base.tolerance

    @property
    def base_by_color(self) -> np.ndarray:
        """Corner vertex indices ordered by color 1, 2, 3."""
        corners = np.array(self.corners)
        return corners[np.argsort(self.colors[corners], kind="stable")]

    @property
    def locator(self) -> TriangleLocator:
        if "loc" not in self._locator:
            self._locator["loc"] = TriangleLocator(self.points, self.triangles, self.tolerance)
        return self._locator["loc"]

    def subtriangle(self, n: int) -> Triangle2:
        a, b, c = self.points[self.triangles[n]]
        return Triangle2(Point2(*a), Point2(*b), Point2(*c))

    def vertices_xy(self) -> np.ndarray:
        """Color-ordered vertex coordinates, shape ``(N, 3, 2)``."""
        return self.points[self.triangles]

    def areas(self) -> np.ndarray:
        v = self.vertices_xy()
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1])

    def centroids(self) -> np.ndarray:
        return self.vertices_xy().mean(axis=1)

    def renumbered(self, order) -> "ColoredPartition":
        """Same partition with subtriangle ``k`` taken from old index ``order[k]``."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(self.N)):
            raise ValueError("order must be a permutation of the subtriangle indices")
        return ColoredPartition(self.base, self.d, self.points, self.colors,
                                self.triangles[order], self.edges, self.corners)

    def recolored(self, perm) -> "ColoredPartition":
        """Apply the color permutation ``c -> perm[c - 1]``."""
        perm = np.asarray(perm)
        if sorted(perm.tolist()) != [1, 2, 3]:
            raise ValueError("perm must be a permutation of (1, 2, 3)")
        colors = perm[self.colors - 1]
        return ColoredPartition(self.base, self.d, self.points, colors,
                                _color_order(self.triangles, colors), self.edges, self.corners)


def _triangle_edges(triangles: np.ndarray) -> np.ndarray:
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _color_order(triangles: np.ndarray, colors: np.ndarray) -> np.ndarray:
    order = np.argsort(colors[triangles], axis=1, kind="stable")
    return np.take_along_axis(triangles, order, axis=1)


def layout_triangle(base: Triangle2, d: int) -> PartitionLayout:
    """Geometry of the partition, numbered bottom strip first.

    Within a strip, triangles run left to right alternating upright and
    inverted; the three apex triangles come last.
    """
    if int(d) != d or d < MIN_D:
        raise ValueError(f"d must be an integer >= {MIN_D}, got {d}")
    d = int(d)
    a, b, c = (np.asarray(p, dtype=float) for p in (base.a, base.b, base.c))
    s = np.arange(d)[:, None] / d
    t = np.arange(d + 1)[None, :] / d
    rows = a + s[..., None] * (c - a) + (t * (1.0 - s))[..., None] * (b - a)
    points = np.vstack([rows.reshape(-1, 2), c[None, :]])
    # snap the corners so they are bit-identical to the base
    points[0] = a
    points[d] = b

    def vid(i, j):
        return j * (d + 1) + i

    i = np.arange(d)
    tris = []
    for j in range(d - 1):
        up = np.stack([vid(i, j), vid(i + 1, j), vid(i, j + 1)], axis=1)
        inv = np.stack([vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)], axis=1)
        tris.append(np.stack([up, inv], axis=1).reshape(-1, 3))
    apex = d * (d + 1)
    top = d - 1
    tris.append(np.array([[vid(0, top), vid(1, top), apex],
                          [vid(1, top), vid(d - 1, top), apex],
                          [vid(d - 1, top), vid(d, top), apex]]))
    triangles = np.concatenate(tris).astype(np.int64)
    return PartitionLayout(base, d, points, triangles, (0, d, apex))


def formula_coloring(d: int) -> np.ndarray:
    """Colors ``((i - j) mod 3) + 1`` on the rows; apex chosen from the top triangles.

    Returns an array with 0 for the apex when no single color completes all
    three top triangles (happens unless d = 1 mod 3).
    """
    j, i = np.divmod(np.arange(d * (d + 1)), d + 1)
    colors = np.append(((i - j) % 3) + 1, 0)
    top = (d - 1) * (d + 1)
    wanted = set()
    for p, q in ((0, 1), (1, d - 1), (d - 1, d)):
        pair = {int(colors[top + p]), int(colors[top + q])}
        wanted.add(frozenset({1, 2, 3} - pair) if len(pair) == 2 else frozenset())
    if len(wanted) == 1:
        (choice,) = wanted
        if len(choice) == 1:
            colors[-1] = next(iter(choice))
    return colors


def coloring_defects(colors: np.ndarray, triangles: np.ndarray, edges: np.ndarray,
                     corners=None) -> list[str]:
    """Human-readable list of violations; empty when the coloring is valid."""
    defects = []
    colors = np.asarray(colors)
    if colors.min(initial=1) < 1 or colors.max(initial=1) > 3:
        defects.append("colors outside 1..3")
    tri_colors = np.sort(colors[triangles], axis=1)
    not_rainbow = np.flatnonzero(~np.all(tri_colors == [1, 2, 3], axis=1))
    if len(not_rainbow):
        defects.append(f"{len(not_rainbow)} subtriangles are not rainbow (first: {not_rainbow[0]})")
    clash = np.flatnonzero(colors[edges[:, 0]] == colors[edges[:, 1]])
    if len(clash):
        defects.append(f"{len(clash)} adjacent vertex pairs share a color")
    if len(np.unique(colors)) != 3:
        defects.append(f"{len(np.unique(colors))} distinct colors used, expected 3")
    if corners is not None and len(set(colors[list(corners)].tolist())) != 3:
        defects.append("base corners do not carry three distinct colors")
    return defects


def _backtrack_coloring(n_vertices: int, triangles: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Proper 3-coloring by depth-first search.

    Vertices are visited in the order they appear while walking the triangles
    breadth-first across shared edges, so after the first triangle every new
    vertex already has two colored neighbours and its color is forced.
    """
    adj: list[set[int]] = [set() for _ in range(n_vertices)]
    for u, v in edges:
        adj[u].add(int(v))
        adj[v].add(int(u))

    by_edge: dict[tuple[int, int], list[int]] = {}
    for n, tri in enumerate(triangles):
        for k in range(3):
            key = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
            by_edge.setdefault(key, []).append(n)

    order: list[int] = []
    seen_v = np.zeros(n_vertices, dtype=bool)
    seen_t = np.zeros(len(triangles), dtype=bool)
    for start in range(len(triangles)):
        if seen_t[start]:
            continue
        queue = deque([start])
        seen_t[start] = True
        while queue:
            n = queue.popleft()
            tri = triangles[n]
            for v in tri:
                if not seen_v[v]:
                    seen_v[v] = True
                    order.append(int(v))
            for k in range(3):
                key = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
                for m in by_edge[key]:
                    if not seen_t[m]:
                        seen_t[m] = True
                        queue.append(m)
    order.extend(v for v in range(n_vertices) if not seen_v[v])

    colors = np.zeros(n_vertices, dtype=np.int64)
    options: list[list[int] | None] = [None] * len(order)
    pos = 0
    while 0 <= pos < len(order):
        v = order[pos]
        if options[pos] is None:
            used = {int(colors[u]) for u in adj[v]}
            options[pos] = [c for c in (1, 2, 3) if c not in used]
        if options[pos]:
            colors[v] = options[pos].pop(0)
            pos += 1
        else:
            options[pos] = None
            colors[v] = 0
            pos -= 1
    if pos < 0:
        raise ColoringError("no proper 3-coloring exists for this partition")
    return colors


def color_partition(layout: PartitionLayout) -> ColoredPartition:
    """Color the layout, verify it, and fall back to a search if the formula fails."""
    edges = layout.edges
    colors = formula_coloring(layout.d)
    if coloring_defects(colors, layout.triangles, edges, layout.corners):
        colors = _backtrack_coloring(len(layout.points), layout.triangles, edges)
        defects = coloring_defects(colors, layout.triangles, edges, layout.corners)
        if defects:
            raise ColoringError("no rainbow 3-coloring: " + "; ".join(defects))
    return ColoredPartition(layout.base, layout.d, layout.points, colors,
                            _color_order(layout.triangles, colors), edges, layout.corners)


def partition_triangle(base: Triangle2, d: int) -> ColoredPartition:
    if isinstance(d, (int, np.integer)) and d >= MIN_D and d % 3 != 1:
        warnings.warn(f"d={d} is not of the form 3n+1", stacklevel=2)
    return color_partition(layout_triangle(base, d))


def verify_coloring(partition: ColoredPartition) -> bool:
    return not coloring_defects(partition.colors, partition.triangles, partition.edges,
                                partition.corners)
