"""Hyperboloid-model geometry of the hyperbolic plane.

Points are numpy arrays ``(x, y, t)`` on the future sheet of
``x^2 + y^2 - t^2 = -1``; arrays of shape ``(n, 3)`` are accepted wherever a
single point is. Orientation-preserving isometries are 3x3 matrices that
preserve the Minkowski form ``J = diag(1, 1, -1)``. The Klein chart
``(x/t, y/t)`` is used only for orientation tests and drawing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometry

J = np.diag([1.0, 1.0, -1.0])
ORIGIN = np.array([0.0, 0.0, 1.0])

ORIENTATION_TOL = 1e-12
# re-project onto the hyperboloid after this many compositions
RENORMALIZE_EVERY = 32


def minkowski_inner(u, v):
    """Lorentzian inner product ``u.x*v.x + u.y*v.y - u.t*v.t`` (broadcasts)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2]


def hpoint(x: float, y: float, t: float | None = None) -> np.ndarray:
    """Build a hyperboloid point; ``t`` defaults to the value putting it on the sheet."""
    if t is None:
        t = math.sqrt(1.0 + x * x + y * y)
    return np.array([x, y, t], dtype=float)


def polar_point(r: float, phi: float) -> np.ndarray:
    """Point at hyperbolic distance ``r`` from the origin in direction ``phi``."""
    s = math.sinh(r)
    return np.array([s * math.cos(phi), s * math.sin(phi), math.cosh(r)])


def project(p):
    """Rescale (an array of) points back onto the future sheet."""
    p = np.asarray(p, dtype=float)
    norm = np.sqrt(np.abs(minkowski_inner(p, p)))
    out = p / norm[..., None]
    return np.where(out[..., 2:3] < 0, -out, out)


def lift(u: float, v: float) -> np.ndarray:
    """Inverse of the Klein chart for a point strictly inside the unit disk."""
    w = 1.0 - u * u - v * v
    if w <= 0:
        raise ValueError("chart point is not inside the unit disk")
    s = 1.0 / math.sqrt(w)
    return np.array([u * s, v * s, s])


def norm_residual(p) -> float:
    """Largest ``|<p,p> + 1|`` over the given points."""
    return float(np.max(np.abs(minkowski_inner(p, p) + 1.0)))


def distance(a, b):
    """Hyperbolic distance, i.e. ``arcosh(-<a,b>)``.

    Evaluated as ``2 asinh(|a-b|_L / 2)``, which is the same quantity but keeps
    full precision for nearby points.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    chord2 = np.maximum(minkowski_inner(d, d), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(chord2))


@dataclass(frozen=True)
class IdealPoint:
    """A point of the boundary circle, stored by its angle in ``[0, 2*pi)``."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * math.pi))

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta), 1.0])


@dataclass(frozen=True, eq=False)
class Isometry:
    """Orientation-preserving isometry acting linearly on the hyperboloid."""

    m: np.ndarray

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.m.T

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.m @ other.m)

    def inverse(self) -> "Isometry":
        return Isometry(J @ self.m.T @ J)

    def residual(self) -> float:
        """Entrywise deviation of ``m^T J m`` from ``J``."""
        return float(np.max(np.abs(self.m.T @ J @ self.m - J)))

    def reorthonormalize(self) -> "Isometry":
        return Isometry(lorentz_orthonormalize(self.m))

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(np.eye(3))


def lorentz_orthonormalize(m: np.ndarray) -> np.ndarray:
    """Nearest-in-spirit orientation-preserving isometry to ``m``.

    Split ``m`` as (transvection to the image of the origin) @ (rotation) and
    rebuild both factors exactly. Unlike Gram-Schmidt this stays well defined
    when the entries are large.
    """
    c = project(m[:, 2])
    t = translation_to(c).m
    r = J @ t.T @ J @ m
    phi = math.atan2(r[1, 0] - r[0, 1], r[0, 0] + r[1, 1])
    return t @ rotation(phi).m


def compose(isometries: Iterable[Isometry]) -> Isometry:
    """Product ``g1 @ g2 @ ...``, re-orthonormalized every few factors."""
    acc = np.eye(3)
    for i, g in enumerate(isometries, start=1):
        acc = acc @ g.m
        if i % RENORMALIZE_EVERY == 0:
            acc = lorentz_orthonormalize(acc)
    return Isometry(acc)


def rotation(phi: float) -> Isometry:
    """Rotation by ``phi`` about the origin."""
    c, s = math.cos(phi), math.sin(phi)
    return Isometry(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))


def boost_x(d: float) -> Isometry:
    """Translation by distance ``d`` along the geodesic through the origin and +x."""
    c, s = math.cosh(d), math.sinh(d)
    return Isometry(np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]]))


def translation_to(p) -> Isometry:
    """The transvection through the origin carrying the origin to ``p``."""
    p = np.asarray(p, dtype=float)
    xy = p[:2]
    t = p[2]
    m = np.empty((3, 3))
    m[:2, :2] = np.eye(2) + np.outer(xy, xy) / (1.0 + t)
    m[:2, 2] = xy
    m[2, :2] = xy
    m[2, 2] = t
    return Isometry(m)


def rotation_about(p, phi: float) -> Isometry:
    """Rotation by ``phi`` about the point ``p``."""
    g = translation_to(p)
    return g @ rotation(phi) @ g.inverse()


def half_turn(p) -> Isometry:
    """Point reflection ``x -> -x - 2<x,p> p`` about ``p``."""
    p = np.asarray(p, dtype=float)
    return Isometry(-np.eye(3) - 2.0 * np.outer(p, J @ p))


def chart(p):
    """Klein-chart coordinates of a point, an array of points, or an IdealPoint."""
    if isinstance(p, IdealPoint):
        return np.array([math.cos(p.theta), math.sin(p.theta)])
    p = np.asarray(p, dtype=float)
    return p[..., :2] / p[..., 2:3]


def orientation_det(a, b, c):
    """Signed doubled area of the planar triangle ``abc`` (broadcasts)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )


def orientation(a, b, c) -> int:
    """Sign of the turn ``a -> b -> c`` in the plane; near-collinear counts as 0."""
    d = float(orientation_det(a, b, c))
    if abs(d) < ORIENTATION_TOL:
        return 0
    return 1 if d > 0 else -1


@dataclass(frozen=True, eq=False)
class Polygon:
    """Convex polygon with vertices in counterclockwise (Klein-chart) order.

    ``precise_vertices`` optionally holds the same vertices in extended
    precision, for long orbit computations.
    """

    vertices: np.ndarray
    center: np.ndarray = field(default_factory=lambda: ORIGIN.copy())
    precise_vertices: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.vertices)

    def chart_vertices(self) -> np.ndarray:
        return chart(self.vertices)

    def is_convex_ccw(self) -> bool:
        v = self.chart_vertices()
        n = len(v)
        return all(orientation(v[i], v[(i + 1) % n], v[(i + 2) % n]) > 0 for i in range(n))


def regular_polygon(sides: int, circumradius: float, phase: float = 0.0, about: Isometry | None = None) -> Polygon:
    """Regular polygon centered at the origin (or at ``about(origin)``).

    Vertex ``j`` sits at angle ``phase + 2*pi*j/sides`` before ``about`` is applied.
    """
    verts = np.array(
        [polar_point(circumradius, phase + 2.0 * math.pi * j / sides) for j in range(sides)]
    )
    center = ORIGIN.copy()
    if about is not None:
        verts = about(verts)
        center = about(center)
    return Polygon(verts, center)


def is_hyperbolic_pair(m: int, n: int) -> bool:
    # 1/m + 1/n < 1/2 in integers
    return 2 * (m + n) < m * n


@dataclass(frozen=True, eq=False)
class TableGeometry:
    """Metric data of the (M, N)-tiling and the base M-gon table."""

    M: int
    N: int
    alpha: float
    beta: float
    edge_len: float
    circumradius_M: float
    circumradius_N: float
    inradius_M: float
    inradius_N: float
    table: Polygon

    def circumradius(self, sides: int) -> float:
        return self.circumradius_M if sides == self.M else self.circumradius_N

    def interior_angle(self, sides: int) -> float:
        return self.alpha if sides == self.M else self.beta


def _table_vertices_extended(M: int, N: int) -> np.ndarray:
    """Table vertices in ``np.longdouble``, from cosh(r) = cos(pi/N) / sin(pi/M)."""
    one = np.longdouble(1)
    pi = 4 * np.arctan(one)
    c = np.cos(pi / N) / np.sin(pi / M)
    s = np.sqrt(c * c - one)
    phi = 2 * pi * np.arange(M, dtype=np.longdouble) / M
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.full(M, c)], axis=1)


def mn_geometry(M: int, N: int) -> TableGeometry:
    """Angles and radii of the regular M- and N-gons meeting four at a vertex.

    Raises:
        DegenerateGeometry: if ``1/M + 1/N >= 1/2`` or a polygon has fewer than 3 sides.
    """
    if M < 3 or N < 3:
        raise DegenerateGeometry(f"polygons need at least 3 sides, got ({M}, {N})")
    if not is_hyperbolic_pair(M, N):
        kind = "Euclidean" if 2 * (M + N) == M * N else "spherical"
        raise DegenerateGeometry(f"degenerate ({kind}) pair ({M}, {N}): need 1/M + 1/N < 1/2")
    cm, cn = math.cos(math.pi / M), math.cos(math.pi / N)
    alpha = 2.0 * math.atan2(cm, cn)
    beta = math.pi - alpha
    edge_len = 2.0 * math.acosh(math.sqrt(cm * cm + cn * cn))

    def circ(sides, angle):
        return math.acosh(1.0 / (math.tan(math.pi / sides) * math.tan(angle / 2.0)))

    def inrad(sides, angle):
        return math.acosh(math.cos(angle / 2.0) / math.sin(math.pi / sides))

    r_m = circ(M, alpha)
    table = regular_polygon(M, r_m)
    table = Polygon(table.vertices, table.center, _table_vertices_extended(M, N))
    return TableGeometry(
        M=M,
        N=N,
        alpha=alpha,
        beta=beta,
        edge_len=edge_len,
        circumradius_M=r_m,
        circumradius_N=circ(N, beta),
        inradius_M=inrad(M, alpha),
        inradius_N=inrad(N, beta),
        table=table,
    )


def geodesic_point(a, b, s: float) -> np.ndarray:
    """Point at distance ``s`` from ``a`` along the geodesic towards ``b``.

    Negative ``s`` walks the opposite way, past ``a``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = b + minkowski_inner(a, b) * a
    u = u / math.sqrt(minkowski_inner(u, u))
    return math.cosh(s) * a + math.sinh(s) * u


def vertex_angle(prev, v, nxt) -> float:
    """Interior angle at ``v`` between the geodesics to ``prev`` and ``nxt``."""
    v = np.asarray(v, dtype=float)
    w1 = np.asarray(prev) + minkowski_inner(prev, v) * v
    w2 = np.asarray(nxt) + minkowski_inner(nxt, v) * v
    c = minkowski_inner(w1, w2) / math.sqrt(minkowski_inner(w1, w1) * minkowski_inner(w2, w2))
    return math.acos(max(-1.0, min(1.0, float(c))))


def as_points(points: Sequence) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))
