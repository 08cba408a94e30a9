"""Embedded boundary shapes: inside-tests, closest-point projection, normals.

A shape describes a closed curve plus which side of it is the computational
domain.  For the usual hole configuration (``interior_is_domain=False``) the
domain is the complement of the curve interior; for the cantilever-style
configuration the domain is the curve interior.  ``project`` returns the
closest curve point together with the unit normal pointing OUT of the
computational domain (the direction boundary data like fluxes refer to).

Points exactly on the curve count as inside the (closed) domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ProjectionResult:
    point: np.ndarray        # closest point x on the curve
    distance_vec: np.ndarray  # d = x - query
    normal: np.ndarray       # unit normal at x, outward w.r.t. the domain
    bc: str


def _as_points(points) -> tuple[np.ndarray, bool]:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


class Shape:
    """Base: closed curve with a domain side and a boundary-condition rule."""

    interior_is_domain: bool
    bc_rule: Callable[[float, float], str]

    def is_inside(self, points):
        """True where a point lies in the closed computational domain."""
        pts, scalar = _as_points(points)
        in_curve = self._in_closed_curve(pts)
        res = in_curve if self.interior_is_domain else ~self._in_open_curve(pts)
        return bool(res[0]) if scalar else res

    # orientation helper: +1 if domain normals equal curve-outward normals
    @property
    def _normal_sign(self) -> float:
        return 1.0 if self.interior_is_domain else -1.0

    def _bc_at(self, x: float, y: float) -> str:
        return self.bc_rule(x, y)

    # subclasses implement
    def _in_open_curve(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _in_closed_curve(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, point) -> ProjectionResult:
        raise NotImplementedError

    def rotated(self, pivot, angle: float) -> "Shape":
        raise NotImplementedError


def _all_neumann(x: float, y: float) -> str:
    return NEUMANN


@dataclass
class Circle(Shape):
    center: np.ndarray
    radius: float
    interior_is_domain: bool = False
    bc_rule: Callable[[float, float], str] = field(default=_all_neumann)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")

    def _dist2(self, pts):
        rel = pts - self.center
        return np.einsum("ij,ij->i", rel, rel)

    def _in_open_curve(self, pts):
        return self._dist2(pts) < self.radius**2

    def _in_closed_curve(self, pts):
        return self._dist2(pts) <= self.radius**2

    def project(self, point) -> ProjectionResult:
        p = np.asarray(point, dtype=np.float64)
        rel = p - self.center
        dist = float(np.linalg.norm(rel))
        u = rel / dist if dist > 0.0 else np.array([1.0, 0.0])
        x = self.center + self.radius * u
        return ProjectionResult(
            point=x,
            distance_vec=x - p,
            normal=self._normal_sign * u,
            bc=self._bc_at(x[0], x[1]),
        )

    def rotated(self, pivot, angle: float) -> "Circle":
        from .mesh import rotate_points

        c = rotate_points(self.center[None, :], pivot, angle)[0]
        return Circle(c, self.radius, self.interior_is_domain, self.bc_rule)


def _polyline_query(pts: np.ndarray, vx: np.ndarray, vy: np.ndarray):
    return _kernels.polyline_closest(
        np.ascontiguousarray(pts[:, 0]),
        np.ascontiguousarray(pts[:, 1]),
        vx,
        vy,
    )


def _winding(pts: np.ndarray, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    return _kernels.winding_numbers(
        np.ascontiguousarray(pts[:, 0]),
        np.ascontiguousarray(pts[:, 1]),
        vx,
        vy,
    )


class _PolylineShape(Shape):
    """Shared inside-test logic for shapes backed by a closed vertex chain."""

    _vx: np.ndarray
    _vy: np.ndarray

    def _diameter(self) -> float:
        return float(
            max(self._vx.max() - self._vx.min(), self._vy.max() - self._vy.min())
        )

    def _boundary_tol(self) -> float:
        return 1e-12 * max(1.0, self._diameter())

    def _in_open_curve(self, pts):
        wn = _winding(pts, self._vx, self._vy)
        d2, _, _ = _polyline_query(pts, self._vx, self._vy)
        return (wn != 0) & (d2 > self._boundary_tol() ** 2)

    def _in_closed_curve(self, pts):
        wn = _winding(pts, self._vx, self._vy)
        d2, _, _ = _polyline_query(pts, self._vx, self._vy)
        return (wn != 0) | (d2 <= self._boundary_tol() ** 2)


@dataclass
class Polygon(_PolylineShape):
    vertices: np.ndarray  # (m, 2), CCW, implicitly closed
    interior_is_domain: bool = False
    bc_rule: Callable[[float, float], str] = field(default=_all_neumann)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[0] < 3:
            raise ValueError("polygon needs at least 3 vertices")
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        if signed < 0.0:  # enforce CCW so edge normals point out of the polygon
            self.vertices = self.vertices[::-1].copy()
        self._vx = np.ascontiguousarray(self.vertices[:, 0])
        self._vy = np.ascontiguousarray(self.vertices[:, 1])

    def _edge_outward_normal(self, seg: int) -> np.ndarray:
        m = self.vertices.shape[0]
        a = self.vertices[seg]
        b = self.vertices[(seg + 1) % m]
        t = b - a
        n = np.array([t[1], -t[0]])  # right of CCW travel = out of the polygon
        return n / np.linalg.norm(n)

    def _corner_normal(self, vert: int) -> np.ndarray:
        m = self.vertices.shape[0]
        n1 = self._edge_outward_normal((vert - 1) % m)
        n2 = self._edge_outward_normal(vert)
        s = n1 + n2
        norm = np.linalg.norm(s)
        if norm < 1e-14:  # degenerate spike; fall back to one side
            return n2
        return s / norm

    def project(self, point) -> ProjectionResult:
        p = np.asarray(point, dtype=np.float64)
        d2, seg, t = _polyline_query(p[None, :], self._vx, self._vy)
        seg = int(seg[0])
        t = float(t[0])
        m = self.vertices.shape[0]
        a = self.vertices[seg]
        b = self.vertices[(seg + 1) % m]
        x = a + t * (b - a)
        if t <= 0.0:
            n_curve = self._corner_normal(seg)
        elif t >= 1.0:
            n_curve = self._corner_normal((seg + 1) % m)
        else:
            n_curve = self._edge_outward_normal(seg)
        return ProjectionResult(
            point=x,
            distance_vec=x - p,
            normal=self._normal_sign * n_curve,
            bc=self._bc_at(x[0], x[1]),
        )

    def is_simple(self) -> bool:
        """Exhaustive O(m^2) proper-intersection test between non-adjacent edges."""
        v = self.vertices
        m = v.shape[0]

        def seg(i):
            return v[i], v[(i + 1) % m]

        def cross(o, a, b):
            return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

        for i in range(m):
            for j in range(i + 1, m):
                if j == i or (j + 1) % m == i or (i + 1) % m == j:
                    continue
                p1, p2 = seg(i)
                q1, q2 = seg(j)
                d1 = cross(q1, q2, p1)
                d2 = cross(q1, q2, p2)
                d3 = cross(p1, p2, q1)
                d4 = cross(p1, p2, q2)
                if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                    return False
        return True

    def perimeter(self) -> float:
        rolled = np.roll(self.vertices, -1, axis=0)
        return float(np.sum(np.linalg.norm(rolled - self.vertices, axis=1)))

    def rotated(self, pivot, angle: float) -> "Polygon":
        from .mesh import rotate_points

        return Polygon(
            rotate_points(self.vertices, pivot, angle),
            self.interior_is_domain,
            self.bc_rule,
        )


@dataclass
class Parametric(_PolylineShape):
    """Closed parametric curve given by a dense sample table over [-pi, pi).

    ``point_fn`` (when present) evaluates the exact curve at arbitrary theta
    and is used to refine closest-point queries; the table alone drives
    inside-tests.  Self-intersecting traces are handled with the nonzero
    winding rule, so e.g. polar curves whose radius changes sign enclose the
    union of their lobes.
    """

    thetas: np.ndarray
    points: np.ndarray
    center: np.ndarray
    point_fn: Optional[Callable[[float], np.ndarray]] = None
    interior_is_domain: bool = False
    bc_rule: Callable[[float, float], str] = field(default=_all_neumann)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.points = np.asarray(self.points, dtype=np.float64)
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.points.shape[0] < 16:
            raise ValueError("parametric table too coarse")
        self._vx = np.ascontiguousarray(self.points[:, 0])
        self._vy = np.ascontiguousarray(self.points[:, 1])

    def _curve_at(self, theta: float) -> np.ndarray:
        if self.point_fn is not None:
            return np.asarray(self.point_fn(theta), dtype=np.float64)
        # periodic linear interpolation of the table
        m = self.thetas.size
        span = 2.0 * math.pi
        s = (theta - self.thetas[0]) % span
        fi = s / span * m
        i = int(fi) % m
        t = fi - int(fi)
        return self.points[i] + t * (self.points[(i + 1) % m] - self.points[i])

    def project(self, point) -> ProjectionResult:
        p = np.asarray(point, dtype=np.float64)
        d2, seg, t = _polyline_query(p[None, :], self._vx, self._vy)
        seg = int(seg[0])
        m = self.thetas.size
        dth = 2.0 * math.pi / m
        lo = self.thetas[0] + (seg - 1) * dth
        hi = self.thetas[0] + (seg + 2) * dth
        theta = self._golden_min(p, lo, hi)
        x = self._curve_at(theta)
        n_curve = self._tangent_normal(theta)
        # orient by probing: the trace may be CW or self-intersecting, so the
        # travel direction alone does not fix which side is enclosed
        eps = 1e-5 * max(1.0, self._diameter())
        probe = (x + eps * n_curve)[None, :]
        if bool(self._in_open_curve(probe)[0]):
            n_curve = -n_curve
        return ProjectionResult(
            point=x,
            distance_vec=x - p,
            normal=self._normal_sign * n_curve,
            bc=self._bc_at(x[0], x[1]),
        )

    def _golden_min(self, p: np.ndarray, lo: float, hi: float) -> float:
        def g(th):
            q = self._curve_at(th)
            return (q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2

        a, b = lo, hi
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        gc, gd = g(c), g(d)
        while b - a > 1e-10:
            if gc < gd:
                b, d, gd = d, c, gc
                c = b - _GOLDEN * (b - a)
                gc = g(c)
            else:
                a, c, gc = c, d, gd
                d = a + _GOLDEN * (b - a)
                gd = g(d)
        return 0.5 * (a + b)

    def _tangent_normal(self, theta: float) -> np.ndarray:
        delta = 1e-6
        q1 = self._curve_at(theta + delta)
        q0 = self._curve_at(theta - delta)
        t = q1 - q0
        norm = np.linalg.norm(t)
        if norm < 1e-300:
            return np.array([1.0, 0.0])
        return np.array([t[1], -t[0]]) / norm  # right of CCW travel

    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.points - self.center, axis=1)))

    def rotated(self, pivot, angle: float) -> "Parametric":
        from .mesh import rotate_points

        pts = rotate_points(self.points, pivot, angle)
        ctr = rotate_points(self.center[None, :], pivot, angle)[0]
        fn = None
        if self.point_fn is not None:
            base = self.point_fn
            piv = np.asarray(pivot, dtype=np.float64)
            ca, sa = math.cos(angle), math.sin(angle)

            def fn(theta, _base=base, _piv=piv, _ca=ca, _sa=sa):
                q = np.asarray(_base(theta), dtype=np.float64) - _piv
                return np.array(
                    [_ca * q[0] - _sa * q[1] + _piv[0], _sa * q[0] + _ca * q[1] + _piv[1]]
                )

        return Parametric(
            self.thetas, pts, ctr, fn, self.interior_is_domain, self.bc_rule
        )


# ---------------------------------------------------------------------------
# module-level ops
# ---------------------------------------------------------------------------

def is_inside(shape: Shape, point) -> bool:
    return shape.is_inside(point)


def project(shape: Shape, point) -> ProjectionResult:
    return shape.project(point)


def rotate_shape(shape: Shape, pivot, angle: float) -> Shape:
    return shape.rotated(pivot, angle)


def make_star(center, outer_radius: float, inner_radius: float, n_points: int = 5,
              interior_is_domain: bool = False) -> Polygon:
    """Star polygon: 2*n_points vertices alternating radii, first at angle pi/2."""
    if outer_radius <= 0.0 or inner_radius <= 0.0:
        raise ValueError("star radii must be positive")
    if inner_radius >= outer_radius:
        raise ValueError("inner radius must be smaller than outer radius")
    cx, cy = float(center[0]), float(center[1])
    verts = []
    for k in range(2 * n_points):
        r = outer_radius if k % 2 == 0 else inner_radius
        ang = math.pi / 2 + k * math.pi / n_points
        verts.append((cx + r * math.cos(ang), cy + r * math.sin(ang)))
    return Polygon(np.asarray(verts), interior_is_domain)


def make_square(center, side: float, interior_is_domain: bool = False) -> Polygon:
    cx, cy = float(center[0]), float(center[1])
    s = side / 2.0
    verts = np.array(
        [[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]]
    )
    return Polygon(verts, interior_is_domain)


def make_rectangle(xmin: float, ymin: float, xmax: float, ymax: float,
                   interior_is_domain: bool = True) -> Polygon:
    verts = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    return Polygon(verts, interior_is_domain)


def make_flower(samples: int = 8192) -> Parametric:
    """Seven-lobed polar curve r(theta) = 0.05 + 0.24 sin(7 theta) about (0.5, 0.5).

    The radius changes sign, so the trace passes through the center and the
    enclosed region (nonzero winding) is a heavily concave flower.
    """
    if samples < 8192:
        raise ValueError("flower table needs at least 8192 samples")

    def point_fn(theta: float) -> np.ndarray:
        r = 0.05 + 0.24 * math.sin(7.0 * theta)
        return np.array([0.5 + r * math.cos(theta), 0.5 + r * math.sin(theta)])

    thetas = -math.pi + 2.0 * math.pi * np.arange(samples) / samples
    r = 0.05 + 0.24 * np.sin(7.0 * thetas)
    pts = np.column_stack([0.5 + r * np.cos(thetas), 0.5 + r * np.sin(thetas)])
    return Parametric(thetas, pts, np.array([0.5, 0.5]), point_fn)
