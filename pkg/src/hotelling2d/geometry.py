"""Exact polygon computations on the unit square.

Voronoi cells by successive half-plane clipping, shoelace areas, and
distance integrals used for demand and transportation cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DuplicateSites, OutOfDomain

COINCIDENCE_TOL = 1e-12
BOUNDARY_TOL = 1e-9
MAX_SITES = 16

UNIT_SQUARE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class Point(NamedTuple):
    """A location in the unit square (consumer type or firm position)."""

    x1: float
    x2: float


#: The 8 isometries of the unit square, as vectorised callables on (k, 2) arrays.
#: Index 0 is the identity; the ordering is fixed and part of the canonical form.
SQUARE_SYMMETRIES: tuple[Callable[[np.ndarray], np.ndarray], ...] = (
    lambda p: p.copy(),
    lambda p: np.column_stack([1.0 - p[:, 0], p[:, 1]]),
    lambda p: np.column_stack([p[:, 0], 1.0 - p[:, 1]]),
    lambda p: np.column_stack([1.0 - p[:, 0], 1.0 - p[:, 1]]),
    lambda p: p[:, ::-1].copy(),
    lambda p: np.column_stack([1.0 - p[:, 1], p[:, 0]]),
    lambda p: np.column_stack([p[:, 1], 1.0 - p[:, 0]]),
    lambda p: np.column_stack([1.0 - p[:, 1], 1.0 - p[:, 0]]),
)


@dataclass
class Polygon:
    """Convex polygon with counterclockwise vertices, optionally owned by a firm."""

    vertices: np.ndarray
    owner: Optional[int] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


def in_unit_square(points: np.ndarray, tol: float = BOUNDARY_TOL) -> bool:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return bool(np.all(pts >= -tol) and np.all(pts <= 1.0 + tol))


def _as_site_array(sites: Sequence) -> np.ndarray:
    arr = np.asarray([(s[0], s[1]) for s in sites], dtype=float)
    return arr.reshape(-1, 2)


def _clip_halfplane(vertices: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Clip a convex CCW polygon against {x : normal . x <= offset}."""
    if len(vertices) == 0:
        return vertices
    g = vertices @ normal - offset
    keep = g <= COINCIDENCE_TOL
    if keep.all():
        return vertices
    out = []
    k = len(vertices)
    for i in range(k):
        j = (i + 1) % k
        vi, vj = vertices[i], vertices[j]
        gi, gj = g[i], g[j]
        if keep[i]:
            out.append(vi)
        if keep[i] != keep[j]:
            # edge crosses the line; gi != gj because keep flags differ
            t = gi / (gi - gj)
            out.append(vi + t * (vj - vi))
    if not out:
        return np.empty((0, 2))
    return np.asarray(out)


def voronoi_cells(sites: Sequence) -> list[Polygon]:
    """Voronoi cells of the given sites, clipped to the unit square.

    Cell i is the set of points no farther from site i than from any other
    site, built by clipping the square against each perpendicular-bisector
    half-plane. Cells tile the square; boundary points belong to several.
    """
    pts = _as_site_array(sites)
    n = len(pts)
    if not 1 <= n <= MAX_SITES:
        raise ValueError(f"need between 1 and {MAX_SITES} sites, got {n}")
    if not in_unit_square(pts):
        raise OutOfDomain("all sites must lie in the unit square")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    if d2.min() < COINCIDENCE_TOL**2:
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        raise DuplicateSites(f"sites {i} and {j} coincide within {COINCIDENCE_TOL}")

    cells = []
    for i in range(n):
        verts = UNIT_SQUARE_VERTICES.copy()
        for j in range(n):
            if j == i:
                continue
            # ||x - p_i|| <= ||x - p_j||  <=>  2 (p_j - p_i) . x <= |p_j|^2 - |p_i|^2
            normal = 2.0 * (pts[j] - pts[i])
            offset = pts[j] @ pts[j] - pts[i] @ pts[i]
            verts = _clip_halfplane(verts, normal, offset)
            if len(verts) == 0:
                break
        cells.append(Polygon(vertices=verts, owner=i))
    return cells


def _distinct_vertices(vertices: np.ndarray) -> np.ndarray:
    if len(vertices) == 0:
        return vertices
    out = [vertices[0]]
    for v in vertices[1:]:
        if np.hypot(*(v - out[-1])) > COINCIDENCE_TOL:
            out.append(v)
    while len(out) > 1 and np.hypot(*(out[-1] - out[0])) <= COINCIDENCE_TOL:
        out.pop()
    return np.asarray(out)


def polygon_area(poly: Polygon) -> float:
    """Positive shoelace area; 0.0 for degenerate polygons (< 3 distinct vertices)."""
    verts = _distinct_vertices(poly.vertices)
    if len(verts) < 3:
        return 0.0
    x, y = verts[:, 0], verts[:, 1]
    s = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return abs(0.5 * s)


def polygon_centroid(poly: Polygon) -> np.ndarray:
    """Area centroid of a non-degenerate polygon."""
    verts = _distinct_vertices(poly.vertices)
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def point_in_polygon(poly: Polygon, point, tol: float = BOUNDARY_TOL) -> bool:
    """Membership test for convex CCW polygons (boundary counts as inside)."""
    verts = _distinct_vertices(poly.vertices)
    if len(verts) < 3:
        return False
    p = np.asarray(point, dtype=float)
    nxt = np.roll(verts, -1, axis=0)
    edge = nxt - verts
    rel = p[None, :] - verts
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -tol))


def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre on [0, 1]
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _triangle_distance_quad(apex, b, c, site, nodes, weights) -> float:
    """Integral of ||x - site|| over triangle (apex, b, c).

    Duffy map from the unit square concentrates nodes at the apex, so the
    integrand is smooth there; the apex is chosen at (or nearest to) the site.
    """
    a = np.asarray(apex)
    e1 = np.asarray(b) - a
    e2 = np.asarray(c) - a
    area2 = abs(e1[0] * e2[1] - e1[1] * e2[0])
    if area2 < 1e-18:
        return 0.0
    u = nodes[:, None]
    t = nodes[None, :]
    px = a[0] + u * ((1 - t) * e1[0] + t * e2[0])
    py = a[1] + u * ((1 - t) * e1[1] + t * e2[1])
    r = np.hypot(px - site[0], py - site[1])
    wu = weights[:, None] * weights[None, :]
    return float(area2 * np.sum(wu * u * r))


def _split_on_site(tri: np.ndarray, site: np.ndarray) -> list[np.ndarray]:
    """Split a triangle so the site becomes a vertex whenever it lies inside."""
    a, b, c = tri
    for v in tri:
        if np.hypot(*(v - site)) <= COINCIDENCE_TOL:
            return [tri]
    # barycentric coordinates of the site
    m = np.column_stack([b - a, c - a])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-18:
        return [tri]
    rhs = site - a
    l1 = (m[1, 1] * rhs[0] - m[0, 1] * rhs[1]) / det
    l2 = (-m[1, 0] * rhs[0] + m[0, 0] * rhs[1]) / det
    eps = 1e-12
    if l1 >= -eps and l2 >= -eps and l1 + l2 <= 1.0 + eps:
        return [np.array([site, a, b]), np.array([site, b, c]), np.array([site, c, a])]
    return [tri]


def distance_integral(poly: Polygon, site, quad_points: int = 20) -> float:
    """Integral of the Euclidean distance from ``site`` over the polygon.

    Fan-triangulates from the centroid, splits any triangle containing the
    site so the distance kink sits at a quadrature apex, then applies a
    tensor Gauss-Legendre rule per triangle (``quad_points`` per axis).
    """
    s = np.asarray([site[0], site[1]], dtype=float)
    if not in_unit_square(s[None, :]):
        raise OutOfDomain("site must lie in the unit square")
    verts = _distinct_vertices(poly.vertices)
    if len(verts) < 3:
        return 0.0
    centroid = polygon_centroid(poly)
    nodes, weights = _gauss_nodes(quad_points)
    total = 0.0
    k = len(verts)
    for i in range(k):
        tri = np.array([centroid, verts[i], verts[(i + 1) % k]])
        for sub in _split_on_site(tri, s):
            # apex at the site if it is a vertex, else at the nearest vertex
            d = np.hypot(sub[:, 0] - s[0], sub[:, 1] - s[1])
            order = np.argsort(d, kind="stable")
            apex, b, c = sub[order[0]], sub[order[1]], sub[order[2]]
            total += _triangle_distance_quad(apex, b, c, s, nodes, weights)
    return total
