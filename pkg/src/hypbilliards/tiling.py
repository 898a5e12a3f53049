"""Geometric generation of the (M, N)-tiling around an M-gon table.

Each tile is the image of a reference polygon centered at the origin under a
placement isometry. The neighbor across edge ``i`` of a reference polygon is
placed by a fixed isometry, so a breadth-first sweep only needs one matrix
product per (tile, edge). Tiles are deduplicated by their centers.

Nothing here knows about substitution rules or closed forms; the counts
produced by this module serve as the independent reference for them.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import AngularTie, CapExceeded, EmptyLayer, InvalidLabel
from .hyperbolic import (
    ORIGIN,
    TableGeometry,
    boost_x,
    chart,
    minkowski_inner,
    mn_geometry,
    polar_point,
    rotation,
)

DEFAULT_RANK_CAP = 8
DEFAULT_TILE_BUDGET = 10**6
QUANTUM = 1e-5
MATCH_TOL = 1e-6
ANGLE_TOL = 1e-9


class Shape(str, Enum):
    M = "MGon"
    N = "NGon"

    @property
    def other(self) -> "Shape":
        return Shape.N if self is Shape.M else Shape.M


class TypeLabel(str, Enum):
    TABLE = "Table"
    ZERO = "Zero"
    X = "X"
    Y = "Y"
    Z = "Z"


class PointIndex:
    """Lookup of hyperboloid points by quantized coordinates.

    A point whose coordinate sits near a cell boundary is also searched in the
    adjacent cell, so rounding noise never splits one point into two keys.
    """

    # |offset| from the cell center, in cells, beyond which the neighbor cell is also searched
    EDGE = 0.49

    def __init__(self, quantum: float = QUANTUM, tol: float = MATCH_TOL):
        self.quantum = quantum
        self.tol = tol
        self._cells: dict[tuple[int, int, int], list[int]] = {}
        self._points: list[tuple[float, float, float]] = []

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return np.array(self._points, dtype=float).reshape(-1, 3)

    def _probe(self, p, key, frac):
        if frac is None:
            cells = (self._cells.get(tuple(key), ()),)
        else:
            cells = self._neighborhood(key, frac)
        tol2 = self.tol * self.tol
        x, y, t = p
        for cell in cells:
            for idx in cell:
                qx, qy, qt = self._points[idx]
                dx, dy, dt = qx - x, qy - y, qt - t
                if dx * dx + dy * dy - dt * dt <= tol2 and abs(dt) <= self.tol * (1.0 + abs(t)):
                    return idx
        return None

    def _neighborhood(self, key, frac):
        options = []
        for c in range(3):
            if frac[c] > self.EDGE:
                options.append((key[c], key[c] + 1))
            elif frac[c] < -self.EDGE:
                options.append((key[c], key[c] - 1))
            else:
                options.append((key[c],))
        return [
            self._cells.get((a, b, c), ()) for a in options[0] for b in options[1] for c in options[2]
        ]

    def _prepare(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        f = pts / self.quantum
        k = np.rint(f)
        frac = f - k
        near = np.flatnonzero(np.any(np.abs(frac) > self.EDGE, axis=1))
        F = [None] * len(pts)
        for i, row in zip(near.tolist(), frac[near].tolist()):
            F[i] = row
        return pts.tolist(), k.astype(np.int64).tolist(), F

    def find_many(self, pts) -> list[int | None]:
        P, K, F = self._prepare(pts)
        return [self._probe(p, k, f) for p, k, f in zip(P, K, F)]

    def find(self, p) -> int | None:
        return self.find_many(p)[0]

    def _insert(self, p, key) -> int:
        idx = len(self._points)
        self._points.append(tuple(p))
        self._cells.setdefault(tuple(key), []).append(idx)
        return idx

    def add(self, p) -> int:
        P, K, _ = self._prepare(p)
        return self._insert(P[0], K[0])

    def find_or_add_many(self, pts) -> list[tuple[int, bool]]:
        P, K, F = self._prepare(pts)
        out = []
        for p, k, f in zip(P, K, F):
            hit = self._probe(p, k, f)
            out.append((hit, False) if hit is not None else (self._insert(p, k), True))
        return out

    def find_or_add(self, p) -> tuple[int, bool]:
        return self.find_or_add_many(p)[0]


@dataclass(slots=True)
class Tile:
    id: int
    shape: Shape
    center: np.ndarray
    vertices: np.ndarray
    rank: int | None = None
    type_label: TypeLabel | None = None
    vertex_ids: tuple[int, ...] = ()


@dataclass(eq=False)
class Atlas:
    """The generated patch of the tiling together with its side-adjacency graph."""

    geometry: TableGeometry
    max_rank: int
    tiles: list[Tile]
    side_adjacency: list[list[int]]
    layers: dict[tuple[int, Shape], list[int]] = field(default_factory=dict)
    center_index: PointIndex | None = None
    vertex_points: np.ndarray | None = None

    @property
    def M(self) -> int:
        return self.geometry.M

    @property
    def N(self) -> int:
        return self.geometry.N

    def __len__(self) -> int:
        return len(self.tiles)

    def find_tile(self, center) -> int | None:
        return self.center_index.find(center)

    def tiles_of_rank(self, r: int) -> list[int]:
        return [t.id for t in self.tiles if t.rank == r]

    def sides(self, shape: Shape) -> int:
        return self.M if shape is Shape.M else self.N


def layer_of_rank(rank: int) -> tuple[int, Shape]:
    """N-gon layer k is overall rank 2k-1, M-gon layer k is overall rank 2k."""
    if rank < 1:
        raise EmptyLayer("the table is not part of any layer")
    if rank % 2:
        return (rank + 1) // 2, Shape.N
    return rank // 2, Shape.M


def rank_of_layer(k: int, shape: Shape) -> int:
    return 2 * k - 1 if shape is Shape.N else 2 * k


def _reference_vertices(geom: TableGeometry, sides: int) -> np.ndarray:
    r = geom.circumradius(sides)
    return np.array([polar_point(r, 2.0 * math.pi * j / sides) for j in range(sides)])


def _neighbor_placements(geom: TableGeometry, shape: Shape) -> np.ndarray:
    """Placements, relative to a reference ``shape`` polygon, of its edge neighbors.

    The reference polygon of the other shape is turned so one edge midpoint
    faces -x, pushed out by the sum of the two inradii, then turned onto the
    midpoint direction of edge ``i``.
    """
    s = geom.M if shape is Shape.M else geom.N
    o = geom.N if shape is Shape.M else geom.M
    r_s = geom.inradius_M if shape is Shape.M else geom.inradius_N
    r_o = geom.inradius_N if shape is Shape.M else geom.inradius_M
    edge0 = rotation(math.pi / s) @ boost_x(r_s + r_o) @ rotation(math.pi - math.pi / o)
    return np.stack([(rotation(2.0 * math.pi * i / s) @ edge0).m for i in range(s)])


def _layer_order(atlas_tiles: list[Tile], ids: list[int]) -> list[int]:
    angles = [math.atan2(atlas_tiles[i].center[1], atlas_tiles[i].center[0]) % (2.0 * math.pi) for i in ids]
    order = sorted(range(len(ids)), key=lambda j: angles[j])
    srt = [angles[j] for j in order]
    for a, b in zip(srt, srt[1:]):
        if b - a < ANGLE_TOL:
            raise AngularTie(f"two tiles of one layer share the angle {a:.12f}")
    return [ids[j] for j in order]


def index_layers(atlas: Atlas) -> Atlas:
    groups: dict[tuple[int, Shape], list[int]] = defaultdict(list)
    for t in atlas.tiles:
        if t.rank:
            groups[layer_of_rank(t.rank)].append(t.id)
    layers = {key: _layer_order(atlas.tiles, ids) for key, ids in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value))}
    return replace(atlas, layers=layers)


def build_atlas(
    M: int,
    N: int,
    max_rank: int,
    *,
    rank_cap: int = DEFAULT_RANK_CAP,
    tile_budget: int = DEFAULT_TILE_BUDGET,
) -> Atlas:
    """Generate every tile of rank ``<= max_rank`` exactly once.

    Ranks and type labels are assigned before returning.

    Raises:
        DegenerateGeometry: for non-hyperbolic pairs.
        CapExceeded: if ``max_rank > rank_cap`` or the tile count would pass ``tile_budget``.
    """
    geom = mn_geometry(M, N)
    if max_rank < 0:
        raise ValueError("max_rank must be non-negative")
    if max_rank > rank_cap:
        raise CapExceeded(f"max_rank {max_rank} exceeds the configured cap {rank_cap}")

    refs = {Shape.M: _reference_vertices(geom, M), Shape.N: _reference_vertices(geom, N)}
    steps = {Shape.M: _neighbor_placements(geom, Shape.M), Shape.N: _neighbor_placements(geom, Shape.N)}

    placements = [np.eye(3)]
    shapes = [Shape.M]
    adjacency: list[set[int]] = [set()]
    index = PointIndex()
    index.add(ORIGIN)

    frontier = [0]
    for r in range(1, max_rank + 1):
        shape = shapes[frontier[0]]
        nb = steps[shape]
        projected = len(placements) + len(frontier) * len(nb)
        if projected > tile_budget:
            raise CapExceeded(f"rank {r} would push the tile count towards {projected} > {tile_budget}")
        G = np.stack([placements[i] for i in frontier])
        cand = np.einsum("fij,ejk->feik", G, nb)
        new_frontier = []
        F, E = cand.shape[:2]
        hits = index.find_or_add_many(cand[:, :, :, 2].reshape(-1, 3))
        for j, (hit, created) in enumerate(hits):
            tid = frontier[j // E]
            if created:
                placements.append(cand[j // E, j % E])
                shapes.append(shape.other)
                adjacency.append(set())
                new_frontier.append(hit)
            adjacency[tid].add(hit)
            adjacency[hit].add(tid)
        frontier = new_frontier

    P = np.stack(placements)
    vindex = PointIndex()
    shape_arr = np.array([sh is Shape.M for sh in shapes])
    verts = {}
    vids = {}
    for shape, mask in ((Shape.M, shape_arr), (Shape.N, ~shape_arr)):
        ids = np.flatnonzero(mask)
        V = np.einsum("vk,tjk->tvj", refs[shape], P[ids])
        verts[shape] = dict(zip(ids.tolist(), V))
    # vertex ids are assigned in tile order so the numbering is deterministic
    all_verts = [verts[shape][tid] for tid, shape in enumerate(shapes)]
    flat = vindex.find_or_add_many(np.concatenate(all_verts))
    tiles = []
    pos = 0
    for tid, shape in enumerate(shapes):
        V = all_verts[tid]
        ids = tuple(h for h, _ in flat[pos : pos + len(V)])
        pos += len(V)
        tiles.append(Tile(tid, shape, P[tid][:, 2].copy(), V, None, None, ids))

    atlas = Atlas(
        geometry=geom,
        max_rank=max_rank,
        tiles=tiles,
        side_adjacency=[sorted(a) for a in adjacency],
        center_index=index,
        vertex_points=vindex.points,
    )
    return classify_types(index_layers(assign_ranks(atlas)))


def assign_ranks(atlas: Atlas) -> Atlas:
    """Rank = breadth-first side-crossing distance from the table (tile 0)."""
    rank = [None] * len(atlas.tiles)
    rank[0] = 0
    queue = [0]
    for tid in queue:
        for nb in atlas.side_adjacency[tid]:
            if rank[nb] is None:
                rank[nb] = rank[tid] + 1
                queue.append(nb)
    tiles = [Tile(t.id, t.shape, t.center, t.vertices, rank[t.id], t.type_label, t.vertex_ids) for t in atlas.tiles]
    return replace(atlas, tiles=tiles)


def parent_counts(atlas: Atlas, k: int) -> dict[int, int]:
    """Number of N-gons of layer ``k - 1`` sharing at least one vertex with each N-gon of layer ``k``."""
    prev = atlas.layers.get((k - 1, Shape.N), [])
    owners: dict[int, set[int]] = defaultdict(set)
    for tid in prev:
        for v in atlas.tiles[tid].vertex_ids:
            owners[v].add(tid)
    out = {}
    for tid in atlas.layers.get((k, Shape.N), []):
        parents = set()
        for v in atlas.tiles[tid].vertex_ids:
            parents |= owners.get(v, set())
        out[tid] = len(parents)
    return out


def classify_types(atlas: Atlas) -> Atlas:
    """Label N-gons by how many previous-layer N-gons they touch.

    Layer-1 N-gons are ``Zero`` when the table is a triangle and ``Z``
    otherwise (no parents either way). M-gons other than the table carry no label.

    Raises:
        InvalidLabel: on a parent count outside {0, 1, 2}, or 2 parents when M >= 4.
    """
    labels: dict[int, TypeLabel | None] = {0: TypeLabel.TABLE}
    by_count = {0: TypeLabel.Z, 1: TypeLabel.Y, 2: TypeLabel.X}
    n_layers = max((k for k, s in atlas.layers if s is Shape.N), default=0)
    for k in range(1, n_layers + 1):
        if k == 1:
            first = TypeLabel.ZERO if atlas.M == 3 else TypeLabel.Z
            for tid in atlas.layers[(1, Shape.N)]:
                labels[tid] = first
            continue
        for tid, c in parent_counts(atlas, k).items():
            if c not in by_count or (c == 2 and atlas.M >= 4):
                raise InvalidLabel(f"tile {tid} in N-gon layer {k} has {c} parents (M={atlas.M})")
            labels[tid] = by_count[c]
    tiles = [Tile(t.id, t.shape, t.center, t.vertices, t.rank, labels.get(t.id), t.vertex_ids) for t in atlas.tiles]
    return replace(atlas, tiles=tiles)


def layer(atlas: Atlas, k: int, shape: Shape) -> list[int]:
    """Tile ids of layer ``k`` of the given shape, by increasing chart angle."""
    try:
        return atlas.layers[(k, shape)]
    except KeyError:
        raise EmptyLayer(f"layer {k} of {shape.value}s is not generated (max_rank {atlas.max_rank})") from None


def layer_counts(atlas: Atlas) -> dict[tuple[int, Shape], Counter]:
    """Per layer: a Counter of type labels (key ``None`` for unlabeled M-gons)."""
    return {key: Counter(atlas.tiles[i].type_label for i in ids) for key, ids in atlas.layers.items()}


def layer_sizes(atlas: Atlas, shape: Shape) -> list[int]:
    ks = sorted(k for k, s in atlas.layers if s is shape)
    return [len(atlas.layers[(k, shape)]) for k in ks]


def vertex_figure(atlas: Atlas, vertex_id: int) -> list[Shape]:
    """Shapes of the tiles around a vertex, in counterclockwise order."""
    v = chart(atlas.vertex_points[vertex_id])
    around = [t for t in atlas.tiles if vertex_id in t.vertex_ids]
    around.sort(key=lambda t: math.atan2(*(chart(t.center) - v)[::-1]))
    return [t.shape for t in around]


def incident_tiles(atlas: Atlas) -> dict[int, list[int]]:
    out: dict[int, list[int]] = defaultdict(list)
    for t in atlas.tiles:
        for v in t.vertex_ids:
            out[v].append(t.id)
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_point(p) -> str:
    return "[" + ",".join(_fmt(c) for c in p) + "]"


def atlas_to_json(atlas: Atlas) -> str:
    """Serialize the atlas; coordinates are written with 17 significant digits."""
    head = json.dumps({"m": atlas.M, "n": atlas.N, "max_rank": atlas.max_rank})[:-1]
    parts = []
    for t in atlas.tiles:
        fields = [
            f'"id":{t.id}',
            f'"shape":{json.dumps(t.shape.value)}',
            f'"rank":{json.dumps(t.rank)}',
            f'"type":{json.dumps(t.type_label.value if t.type_label else None)}',
            f'"center":{_fmt_point(t.center)}',
            '"vertices":[' + ",".join(_fmt_point(v) for v in t.vertices) + "]",
            f'"neighbors":{json.dumps(atlas.side_adjacency[t.id])}',
        ]
        parts.append("{" + ",".join(fields) + "}")
    return head + ',"tiles":[\n' + ",\n".join(parts) + "\n]}\n"


def atlas_from_json(text: str) -> Atlas:
    """Rebuild an Atlas from :func:`atlas_to_json` output."""
    doc = json.loads(text)
    geom = mn_geometry(doc["m"], doc["n"])
    index = PointIndex()
    vindex = PointIndex()
    tiles = []
    adjacency = []
    for i, rec in enumerate(sorted(doc["tiles"], key=lambda r: r["id"])):
        if rec["id"] != i:
            raise ValueError("tile ids must be 0..n-1")
        center = np.array(rec["center"], dtype=float)
        verts = np.array(rec["vertices"], dtype=float)
        index.add(center)
        vids = tuple(h for h, _ in vindex.find_or_add_many(verts))
        tiles.append(
            Tile(
                id=i,
                shape=Shape(rec["shape"]),
                center=center,
                vertices=verts,
                rank=rec["rank"],
                type_label=TypeLabel(rec["type"]) if rec["type"] else None,
                vertex_ids=vids,
            )
        )
        adjacency.append(list(rec["neighbors"]))
    atlas = Atlas(
        geometry=geom,
        max_rank=doc["max_rank"],
        tiles=tiles,
        side_adjacency=adjacency,
        center_index=index,
        vertex_points=vindex.points,
    )
    return index_layers(atlas)
