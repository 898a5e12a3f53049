"""The outer billiard map around a convex table, and what it induces on tiles.

From an exterior point ``x`` the support vertex ``v`` is the one for which the
whole table lies to the left of the ray ``x -> v`` (tested in the Klein
chart, where geodesics are straight). ``T(x)`` is the half-turn of ``x``
about ``v``. The inverse uses the mirrored predicate (table on the right).
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousSupport, CenterMismatch, ImageOutsideAtlas, InsideTable, NotCyclic
from .hyperbolic import (
    IdealPoint,
    Polygon,
    chart,
    distance,
    half_turn,
    minkowski_inner,
)
from .tiling import Atlas, Shape, layer

WEB_TOL = 1e-9
RETURN_TOL = 1e-7  # Klein-chart distance
VERTEX_MATCH_TOL = 1e-7
RENORMALIZE_EVERY = 32


@dataclass(frozen=True)
class OrbitResult:
    period: int | None
    iterations_used: int
    support_sequence: list[int]

    def to_dict(self, point) -> dict:
        return {"point": [float(c) for c in point], "period": self.period, "iterations_used": self.iterations_used}


@dataclass(frozen=True)
class LayerPermutation:
    layer: tuple[int, Shape]
    size: int
    jump: int

    def to_dict(self, M: int, N: int) -> dict:
        k, shape = self.layer
        return {"m": M, "n": N, "layer": k, "shape": shape.value, "size": self.size, "jump": self.jump}


class _TableData:
    """Per-table constants used by the vectorized predicates."""

    def __init__(self, table: Polygon):
        self.vertices = np.asarray(table.vertices, dtype=float)
        self.chart = chart(self.vertices)
        self.n = len(self.vertices)
        self.turns = np.stack([half_turn(v).m for v in self.vertices])
        precise = table.precise_vertices
        ext = (np.asarray(precise) if precise is not None else self.vertices).astype(np.longdouble)
        jv = ext * np.array([1, 1, -1], dtype=np.longdouble)
        self.turns_ext = -np.eye(3, dtype=np.longdouble) - 2 * ext[:, :, None] * jv[:, None, :]


_CACHE: "weakref.WeakKeyDictionary[Polygon, _TableData]" = weakref.WeakKeyDictionary()


def _data(table: Polygon) -> _TableData:
    d = _CACHE.get(table)
    if d is None:
        d = _CACHE[table] = _TableData(table)
    return d


def _support_scores(data: _TableData, xy: np.ndarray) -> np.ndarray:
    """``scores[i, v]`` = min over other vertices w of orient(x_i, v, w)."""
    V = data.chart
    a = V[None, :, :] - xy[:, None, :]  # (n, M, 2): v - x
    det = a[:, :, None, 0] * a[:, None, :, 1] - a[:, :, None, 1] * a[:, None, :, 0]  # (n, v, w)
    idx = np.arange(data.n)
    det[:, idx, idx] = np.inf
    return det.min(axis=2)


def _points_xy(x) -> np.ndarray:
    if isinstance(x, IdealPoint):
        return chart(x)[None, :]
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return chart(x)


def support_vertices(table: Polygon, points, *, clockwise: bool = True, tol: float = WEB_TOL) -> np.ndarray:
    """Vectorized support index for an ``(n, 3)`` array of points.

    Returns -1 where the support is ambiguous and -2 for points inside the table.
    ``clockwise=False`` gives the support used by the inverse map.
    """
    data = _data(table)
    xy = _points_xy(points)
    if clockwise:
        scores = _support_scores(data, xy)
    else:
        # table on the right: all orientations <= 0, i.e. the max over w is negative
        V = data.chart
        a = V[None, :, :] - xy[:, None, :]
        det = a[:, :, None, 0] * a[:, None, :, 1] - a[:, :, None, 1] * a[:, None, :, 0]
        idx = np.arange(data.n)
        det[:, idx, idx] = -np.inf
        scores = -det.max(axis=2)
    best = np.argmax(scores, axis=1)
    top = scores[np.arange(len(scores)), best]
    return np.where(top > tol, best, np.where(top >= -tol, -1, -2))


def _single_support(table, x, clockwise):
    v = int(support_vertices(table, x, clockwise=clockwise)[0])
    if v == -1:
        raise AmbiguousSupport("point lies on a side continuation of the table", iterate=0)
    if v == -2:
        raise InsideTable("point is inside the table")
    return v


def support_vertex(table: Polygon, x) -> int:
    """Index of the vertex the table is seen to the left of, from ``x``.

    Raises:
        AmbiguousSupport: on the clockwise continuation of a side.
        InsideTable: if ``x`` is not strictly outside.
    """
    return _single_support(table, x, True)


def support_vertex_inverse(table: Polygon, x) -> int:
    """Support index for the inverse map (table on the right)."""
    return _single_support(table, x, False)


def step(table: Polygon, x) -> np.ndarray:
    v = support_vertex(table, x)
    return np.asarray(x, dtype=float) @ _data(table).turns[v].T


def step_inverse(table: Polygon, x) -> np.ndarray:
    v = support_vertex_inverse(table, x)
    return np.asarray(x, dtype=float) @ _data(table).turns[v].T


def step_many(table: Polygon, points, *, inverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Apply T (or T^-1) to each row; returns ``(images, support_indices)``.

    Rows with an ambiguous or interior support are returned unchanged and
    flagged by a negative index.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sup = support_vertices(table, pts, clockwise=not inverse)
    turns = _data(table).turns
    safe = np.where(sup >= 0, sup, 0)
    out = np.einsum("nij,nj->ni", turns[safe], pts)
    out[sup < 0] = pts[sup < 0]
    return out, sup


def _renormalize(p: np.ndarray) -> np.ndarray:
    q = np.abs(p[:, 0] ** 2 + p[:, 1] ** 2 - p[:, 2] ** 2)
    return p / np.sqrt(q)[:, None]


def _chart_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.hypot(a[:, 0] / a[:, 2] - b[:, 0] / b[:, 2], a[:, 1] / a[:, 2] - b[:, 1] / b[:, 2])


def orbits(
    table: Polygon, points, max_iter: int, tol: float = RETURN_TOL, *, record: bool = True
) -> list[OrbitResult]:
    """First-return periods of many points, iterated together.

    Iterates run in extended precision and a return means the Klein-chart
    distance to the start is at most ``tol``. With ``record=False`` the
    support sequences are left empty, which is much faster for long orbits.

    Raises:
        AmbiguousSupport: if any iterate lands on the web; ``iterate`` is set.
    """
    start = np.atleast_2d(np.asarray(points, dtype=np.longdouble))
    n = len(start)
    cur = start.copy()
    turns = _data(table).turns_ext
    period = [None] * n
    seqs: list[list[int]] = [[] for _ in range(n)]
    active = np.arange(n)
    it = 0
    while it < max_iter and len(active):
        pts = cur[active]
        sup = support_vertices(table, pts.astype(float))
        bad = sup < 0
        if bad.any():
            i = int(active[np.flatnonzero(bad)[0]])
            kind = "on the web" if sup[bad][0] == -1 else "inside the table"
            raise AmbiguousSupport(f"iterate {it} of point {i} is {kind}", iterate=it)
        nxt = np.einsum("nij,nj->ni", turns[sup], pts)
        it += 1
        if it % RENORMALIZE_EVERY == 0:
            nxt = _renormalize(nxt)
        cur[active] = nxt
        if record:
            for i, s in zip(active.tolist(), sup.tolist()):
                seqs[i].append(s)
        back = _chart_gap(nxt, start[active]) <= tol
        if back.any():
            for i in active[back].tolist():
                period[i] = it
            active = active[~back]
    return [
        OrbitResult(period[i], period[i] if period[i] is not None else it, seqs[i])
        for i in range(n)
    ]


def orbit(table: Polygon, x, max_iter: int, tol: float = RETURN_TOL, *, record: bool = True) -> OrbitResult:
    """Iterate T from ``x`` until it returns within ``tol`` or ``max_iter`` runs out."""
    return orbits(table, x, max_iter, tol, record=record)[0]


def sample_points(atlas: Atlas, count: int, max_rank: int, rng: np.random.Generator) -> tuple[np.ndarray, list[int]]:
    """Random points inside tiles of rank ``1..max_rank``.

    A tile is picked uniformly, then a point is drawn as a uniform barycentric
    mix of the tile's chart vertices and lifted to the hyperboloid. Returns the
    points and the id of the tile each came from.
    """
    pool = [t.id for t in atlas.tiles if t.rank is not None and 1 <= t.rank <= max_rank]
    owners = [pool[i] for i in rng.integers(0, len(pool), size=count)]
    pts = []
    for tid in owners:
        V = chart(atlas.tiles[tid].vertices)
        w = rng.dirichlet(np.ones(len(V)))
        u, v = w @ V
        s = 1.0 / math.sqrt(1.0 - u * u - v * v)
        pts.append((u * s, v * s, s))
    return np.array(pts, dtype=float).reshape(-1, 3), owners


def _match_vertex_sets(src: np.ndarray, dst: np.ndarray, tol: float) -> bool:
    if len(src) != len(dst):
        return False
    d = src[:, None, :] - dst[None, :, :]
    chord = np.sqrt(np.maximum(minkowski_inner(d, d), 0.0))
    return bool(np.all(chord.min(axis=1) <= tol) and np.all(chord.min(axis=0) <= tol))


def tile_images(atlas: Atlas, tile_ids, *, check_vertices: bool = True) -> list[int]:
    """Tile reached by applying T to each tile's center.

    With ``check_vertices`` the image tile's vertex set must equal the
    half-turn image of the source vertex set.

    Raises:
        ImageOutsideAtlas, CenterMismatch
    """
    ids = list(tile_ids)
    if any(i == 0 for i in ids):
        raise InsideTable("the table has no image")
    table = atlas.geometry.table
    centers = np.array([atlas.tiles[i].center for i in ids])
    images, sup = step_many(table, centers)
    if (sup < 0).any():
        bad = ids[int(np.flatnonzero(sup < 0)[0])]
        raise CenterMismatch(f"center of tile {bad} lies on the web")
    hits = atlas.center_index.find_many(images)
    turns = _data(table).turns
    reach = None
    out = []
    for tid, img, s, hit in zip(ids, images, sup.tolist(), hits):
        if hit is None:
            if reach is None:
                reach = max(float(distance(atlas.tiles[0].center, t.center)) for t in atlas.tiles)
            if distance(atlas.tiles[0].center, img) > reach - 1e-6:
                raise ImageOutsideAtlas(f"image of tile {tid} lies beyond the generated ranks")
            raise CenterMismatch(f"image of tile {tid} matches no tile center")
        if check_vertices:
            moved = atlas.tiles[tid].vertices @ turns[s].T
            if not _match_vertex_sets(moved, atlas.tiles[hit].vertices, VERTEX_MATCH_TOL):
                raise CenterMismatch(f"image of tile {tid} does not cover tile {hit}")
        out.append(hit)
    return out


def tile_image(atlas: Atlas, tile_id: int) -> int:
    return tile_images(atlas, [tile_id])[0]


def layer_permutation(atlas: Atlas, k: int, shape: Shape) -> LayerPermutation:
    """The constant index shift that T induces on layer ``(k, shape)``.

    Raises:
        NotCyclic: if the shift is not the same for every tile or is 0.
    """
    ids = layer(atlas, k, shape)
    pos = {tid: i for i, tid in enumerate(ids)}
    images = tile_images(atlas, ids)
    size = len(ids)
    jumps = set()
    for i, img in enumerate(images):
        if img not in pos:
            raise NotCyclic(f"tile {ids[i]} leaves layer {k} of {shape.value}s")
        jumps.add((pos[img] - i) % size)
    if len(jumps) != 1:
        raise NotCyclic(f"layer {k} of {shape.value}s has jumps {sorted(jumps)[:6]}")
    jump = jumps.pop()
    if not 0 < jump < size:
        raise NotCyclic(f"layer {k} of {shape.value}s is fixed by T")
    return LayerPermutation((k, shape), size, jump)


def _ideal_support(data: _TableData, u: float, w: float) -> int:
    """Support vertex for the boundary point with chart ``(u, w)``; ties pick the larger margin."""
    V = data.chart
    n = data.n
    best, best_score = 0, -math.inf
    for i in range(n):
        ax, ay = V[i][0] - u, V[i][1] - w
        score = math.inf
        for j in (i - 1, (i + 1) % n):
            bx, by = V[j][0] - u, V[j][1] - w
            score = min(score, ax * by - ay * bx)
        if score > best_score:
            best, best_score = i, score
    return best


def circle_map(table: Polygon, theta: float) -> float:
    """Image angle of the boundary point ``theta`` under the extension of T."""
    data = _data(table)
    u, w = math.cos(theta), math.sin(theta)
    v = _ideal_support(data, u, w)
    x, y, t = data.turns[v] @ np.array([u, w, 1.0])
    return math.atan2(y, x) % (2.0 * math.pi)


def circle_lift_displacement(table: Polygon, theta: float) -> float:
    """``F(theta) - theta`` for the lift F with displacement in ``[0, 2*pi)``."""
    return (circle_map(table, theta) - theta) % (2.0 * math.pi)


def rotation_number_numeric(table: Polygon, theta0: float, n_iters: int) -> float:
    """Birkhoff average of the lift displacement, in turns."""
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    data = _data(table)
    V = [tuple(p) for p in data.chart.tolist()]
    H = [m.tolist() for m in data.turns]
    n = data.n
    two_pi = 2.0 * math.pi
    theta = theta0 % two_pi
    total = 0.0
    for _ in range(n_iters):
        u, w = math.cos(theta), math.sin(theta)
        best, best_score = 0, -math.inf
        for i in range(n):
            ax, ay = V[i][0] - u, V[i][1] - w
            px, py = V[i - 1][0] - u, V[i - 1][1] - w
            nx, ny = V[(i + 1) % n][0] - u, V[(i + 1) % n][1] - w
            score = min(ax * py - ay * px, ax * ny - ay * nx)
            if score > best_score:
                best, best_score = i, score
        h = H[best]
        x = h[0][0] * u + h[0][1] * w + h[0][2]
        y = h[1][0] * u + h[1][1] * w + h[1][2]
        new = math.atan2(y, x) % two_pi
        total += (new - theta) % two_pi
        theta = new
    return total / (two_pi * n_iters)
