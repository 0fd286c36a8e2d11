"""Level-set geometry, cut classification, clipping and quadrature.

The physical domain is ``{phi < 0}``. Each cut triangle is clipped against a
piecewise linear reconstruction of the zero level set, giving a convex polygon
and one straight boundary segment per element.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

SNAP_FACTOR = 1e-12
ROOT_TOL = 1e-14


class DegenerateCut(ValueError):
    """A cut element whose reconstructed boundary segment is (nearly) empty."""


class UnsupportedOrder(ValueError):
    pass


class Location(enum.IntEnum):
    OUTSIDE = 0
    CUT = 1
    INSIDE = 2


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------

class LevelSet:
    """Base class. Subclasses implement ``__call__`` and ``gradient``.

    Both accept arrays of shape ``(..., 2)``.
    """

    affine = False

    def __call__(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def normal(self, x):
        g = np.asarray(self.gradient(x), dtype=float)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def edge_roots(self, a, b):
        """Parameters t in [0, 1] where phi(a + t(b - a)) = 0, or None if unknown."""
        return None


@dataclass(frozen=True)
class Circle(LevelSet):
    center: tuple = (0.5, 0.5)
    radius: float = 0.45

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def gradient(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def edge_roots(self, a, b):
        # |a + t d - c|^2 = r^2
        c = np.asarray(self.center, dtype=float)
        d = np.asarray(b, dtype=float) - a
        e = np.asarray(a, dtype=float) - c
        qa = d @ d
        qb = 2.0 * (d @ e)
        qc = e @ e - self.radius ** 2
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return []
        s = np.sqrt(disc)
        # numerically stable pair
        q = -0.5 * (qb + np.copysign(s, qb))
        roots = [q / qa, qc / q] if q != 0 else [-qb / (2 * qa)]
        return sorted(t for t in roots if 0.0 <= t <= 1.0)


@dataclass(frozen=True)
class HalfPlane(LevelSet):
    """``phi = x[axis] - offset`` (or its negative with ``sign=-1``)."""

    axis: int = 1
    offset: float = 0.5
    sign: float = 1.0
    affine = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.sign * (x[..., self.axis] - self.offset)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., self.axis] = self.sign
        return g

    def edge_roots(self, a, b):
        fa, fb = self(a), self(b)
        if fa == fb:
            return []
        t = fa / (fa - fb)
        return [t] if 0.0 <= t <= 1.0 else []


@dataclass(frozen=True)
class Annulus(LevelSet):
    # reserved; not used by the experiments
    center: tuple = (0.5, 0.5)
    r_inner: float = 0.15
    r_outer: float = 0.45

    def __call__(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.center), axis=-1)
        mid = 0.5 * (self.r_inner + self.r_outer)
        return np.abs(r - mid) - 0.5 * (self.r_outer - self.r_inner)

    def gradient(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        mid = 0.5 * (self.r_inner + self.r_outer)
        return np.sign(r - mid) * d / r


@dataclass(frozen=True)
class Analytic(LevelSet):
    phi: Callable = field(default=None)
    grad: Callable = field(default=None)
    affine: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.phi(x), dtype=float) * np.ones(x.shape[:-1])

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.grad(x), dtype=float) * np.ones(x.shape)


def constant_level_set(value: float) -> Analytic:
    """Level set that is ``value`` everywhere (no boundary inside the box)."""
    return Analytic(lambda x: np.full(x.shape[:-1], value),
                    lambda x: np.zeros_like(x) + np.array([0.0, 1.0]))


# ---------------------------------------------------------------------------
# classification and clipping
# ---------------------------------------------------------------------------

@dataclass
class CutGeometry:
    element_id: int
    polygon: np.ndarray            # (n, 2), counterclockwise
    segment: Optional[np.ndarray]  # (2, 2)
    normal: Optional[np.ndarray]   # (2,), outward from Omega
    volume_fraction: float

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    @property
    def segment_length(self) -> float:
        if self.segment is None:
            return 0.0
        return float(np.linalg.norm(self.segment[1] - self.segment[0]))


def polygon_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _diameter(tri) -> float:
    tri = np.asarray(tri, dtype=float)
    return max(np.linalg.norm(tri[i] - tri[j]) for i, j in ((0, 1), (1, 2), (2, 0)))


def _snapped_inside(phi_values, h):
    return np.asarray(phi_values) < SNAP_FACTOR * h


def _edge_crosses(a, b, fa_in, fb_in, geom: LevelSet) -> bool:
    """True when the edge meets the zero set, including double crossings."""
    if fa_in != fb_in:
        return True
    roots = geom.edge_roots(a, b)
    if roots is not None:
        if fa_in:
            return False  # both ends inside; a crossing pair only dips outside
        return len(roots) > 0
    t = np.linspace(0.0, 1.0, 9)[1:-1]
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    vals = geom(pts)
    return bool(np.any(vals >= 0)) if fa_in else bool(np.any(vals < 0))


def classify_element(tri, geom: LevelSet) -> Location:
    """Inside, Cut or Outside with respect to ``{phi < 0}``."""
    tri = np.asarray(tri, dtype=float)
    h = _diameter(tri)
    inside = _snapped_inside(geom(tri), h)
    crossing = any(_edge_crosses(tri[i], tri[(i + 1) % 3], inside[i], inside[(i + 1) % 3], geom)
                   for i in range(3))
    if inside.all() and not crossing:
        return Location.INSIDE
    if not inside.any() and not crossing:
        return Location.OUTSIDE
    return Location.CUT


def _edge_root(a, b, fa, fb, geom: LevelSet):
    if fa >= 0:  # snapped vertex counts as inside; the crossing sits on it
        return np.array(a, dtype=float)
    if geom.affine:
        t = fa / (fa - fb)
    else:
        roots = geom.edge_roots(a, b)
        if roots:
            t = roots[0]
        else:
            t = brentq(lambda s: float(geom(a + s * (b - a))), 0.0, 1.0, xtol=ROOT_TOL)
    return a + t * (b - a)


def clip_element(tri, geom: LevelSet, element_id: int = -1) -> CutGeometry:
    """Clip a counterclockwise triangle against the linearized zero level set."""
    tri = np.asarray(tri, dtype=float)
    h = _diameter(tri)
    phi = geom(tri)
    inside = _snapped_inside(phi, h)
    area_t = polygon_area(tri)
    if inside.all():
        return CutGeometry(element_id, tri.copy(), None, None, 1.0)

    poly, crossings = [], []
    for i in range(3):
        j = (i + 1) % 3
        if inside[i]:
            poly.append(tri[i])
        if inside[i] != inside[j]:
            if inside[i]:
                x = _edge_root(tri[i], tri[j], phi[i], phi[j], geom)
            else:
                x = _edge_root(tri[j], tri[i], phi[j], phi[i], geom)
            poly.append(x)
            crossings.append(x)
    if len(crossings) != 2:
        raise DegenerateCut(f"element {element_id}: {len(crossings)} edge crossings")
    seg = np.array(crossings)
    length = np.linalg.norm(seg[1] - seg[0])
    if length < SNAP_FACTOR * h:
        raise DegenerateCut(f"element {element_id}: boundary segment of length {length:.3e}")

    t = (seg[1] - seg[0]) / length
    n = np.array([t[1], -t[0]])
    if n @ geom.gradient(0.5 * (seg[0] + seg[1])) < 0:
        n = -n
    poly = np.array(poly)
    frac = polygon_area(poly) / area_t
    return CutGeometry(element_id, poly, seg, n, float(min(max(frac, 0.0), 1.0)))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass
class QuadratureRule:
    points: np.ndarray   # (n, 2)
    weights: np.ndarray  # (n,)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))

    @staticmethod
    def concatenate(rules) -> "QuadratureRule":
        rules = list(rules)
        if not rules:
            return QuadratureRule(np.zeros((0, 2)), np.zeros(0))
        return QuadratureRule(np.vstack([r.points for r in rules]),
                              np.concatenate([r.weights for r in rules]))


def _orbit(a, w, kind):
    if kind == 1:
        return [(1 / 3, 1 / 3, 1 / 3)], [w]
    if kind == 3:
        b = 1.0 - 2.0 * a
        return [(b, a, a), (a, b, a), (a, a, b)], [w] * 3
    a1, a2 = a
    a3 = 1.0 - a1 - a2
    pts = [(a1, a2, a3), (a1, a3, a2), (a2, a1, a3), (a2, a3, a1), (a3, a1, a2), (a3, a2, a1)]
    return pts, [w] * 6


# Symmetric rules on the triangle: barycentric orbits, weights sum to one.
_TRI_ORBITS = {
    1: [(None, 1.0, 1)],
    2: [(1 / 6, 1 / 3, 3)],
    3: [((0.659027622374092, 0.231933368553031), 1 / 6, 6)],
    4: [(0.445948490915965, 0.223381589678011, 3),
        (0.091576213509771, 0.109951743655322, 3)],
    5: [(None, 0.225, 1),
        (0.470142064105115, 0.132394152788506, 3),
        (0.101286507323456, 0.125939180544827, 3)],
    6: [(0.249286745170910, 0.116786275726379, 3),
        (0.063089014491502, 0.050844906370207, 3),
        ((0.053145049844817, 0.310352451033784), 0.082851075618374, 6)],
}
MAX_TRIANGLE_ORDER = max(_TRI_ORBITS)


def _build_reference(order):
    bary, weights = [], []
    for a, w, kind in _TRI_ORBITS[order]:
        p, ww = _orbit(a, w, kind)
        bary += p
        weights += ww
    return np.array(bary), np.array(weights)


_REFERENCE = {k: _build_reference(k) for k in _TRI_ORBITS}


def reference_triangle_rule(order: int):
    """Barycentric points ``(n, 3)`` and weights summing to one."""
    if order < 1:
        order = 1
    if order > MAX_TRIANGLE_ORDER:
        raise UnsupportedOrder(f"triangle rules are tabulated up to order {MAX_TRIANGLE_ORDER}")
    return _REFERENCE[order]


def triangle_quadrature(tri, order: int = 4) -> QuadratureRule:
    tri = np.asarray(tri, dtype=float)
    bary, w = reference_triangle_rule(order)
    return QuadratureRule(bary @ tri, w * abs(polygon_area(tri)))


def polygon_quadrature(poly, order: int = 4) -> QuadratureRule:
    """Fan-triangulate a convex polygon from its vertex centroid."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 3:
        return triangle_quadrature(poly, order)
    c = poly.mean(axis=0)
    rules = [triangle_quadrature(np.array([c, poly[i], poly[(i + 1) % len(poly)]]), order)
             for i in range(len(poly))]
    return QuadratureRule.concatenate(rules)


def cut_volume_quadrature(cg: CutGeometry, order: int = 4) -> QuadratureRule:
    return polygon_quadrature(cg.polygon, order)


def gauss_points(order: int):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree ``order``."""
    n = max(1, order // 2 + 1)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def boundary_quadrature(segment, order: int = 5) -> QuadratureRule:
    seg = np.asarray(segment, dtype=float)
    length = np.linalg.norm(seg[1] - seg[0])
    if length <= 0:
        raise ValueError("segment of zero length")
    t, w = gauss_points(order)
    return QuadratureRule(seg[0] + t[:, None] * (seg[1] - seg[0]), w * length)
