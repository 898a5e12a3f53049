from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypbilliards.billiards import (
    LayerPermutation,
    circle_lift_displacement,
    circle_map,
    layer_permutation,
    orbit,
    orbits,
    rotation_number_numeric,
    sample_points,
    step,
    step_inverse,
    step_many,
    support_vertex,
    support_vertex_inverse,
    support_vertices,
    tile_image,
    tile_images,
)
from hypbilliards.errors import AmbiguousSupport, InsideTable
from hypbilliards.hyperbolic import (
    ORIGIN,
    chart,
    distance,
    geodesic_point,
    half_turn,
    minkowski_inner,
    mn_geometry,
    polar_point,
)
from hypbilliards.spectral import closed_form_params, rotation_number_closed
from hypbilliards.tiling import Shape, build_atlas, layer

TABLES = {pair: mn_geometry(*pair).table for pair in [(3, 7), (4, 5), (5, 5), (6, 6)]}


@pytest.fixture(scope="module")
def a37():
    return build_atlas(3, 7, 8)


@pytest.fixture(scope="module")
def a45():
    return build_atlas(4, 5, 8)


def angular_support(table, x, clockwise: bool = True) -> int:
    """The vertex seen furthest clockwise from ``x`` (the table then lies to its left).

    ``clockwise=False`` gives the furthest counterclockwise vertex instead.
    """
    V = chart(np.asarray(table.vertices))
    p = chart(x)
    c = V.mean(axis=0) - p
    sign = 1.0 if clockwise else -1.0
    best, best_ang = None, math.inf
    for i, v in enumerate(V):
        d = v - p
        ang = sign * math.atan2(c[0] * d[1] - c[1] * d[0], c[0] * d[0] + c[1] * d[1])
        if ang < best_ang:
            best, best_ang = i, ang
    return best


exterior = st.builds(polar_point, st.floats(1.2, 5.0), st.floats(-math.pi, math.pi))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(TABLES)), exterior)
def test_support_matches_angular_oracle(pair, x):
    table = TABLES[pair]
    s = support_vertices(table, x)[0]
    if s >= 0:
        assert s == angular_support(table, x)
    s_inv = support_vertices(table, x, clockwise=False)[0]
    if s_inv >= 0:
        assert s_inv == angular_support(table, x, clockwise=False)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(TABLES)), exterior)
def test_step_inverse_undoes_step(pair, x):
    table = TABLES[pair]
    if support_vertices(table, x)[0] < 0:
        return
    y = step(table, x)
    assert minkowski_inner(y, y) == pytest.approx(-1.0, rel=1e-9)
    assert np.allclose(step_inverse(table, y), x, atol=1e-8 * x[2])
    v = support_vertex(table, x)
    assert np.allclose(y, half_turn(table.vertices[v])(x))


def test_web_and_interior_errors():
    table = TABLES[(3, 7)]
    V = table.vertices
    on_ray = geodesic_point(V[0], V[1], -1.0)
    assert support_vertices(table, on_ray)[0] == -1
    with pytest.raises(AmbiguousSupport):
        support_vertex(table, on_ray)
    # the same ray is harmless for the inverse map
    assert support_vertex_inverse(table, on_ray) >= 0
    with pytest.raises(InsideTable):
        step(table, ORIGIN)
    imgs, sup = step_many(table, np.array([ORIGIN, on_ray]))
    assert list(sup) == [-2, -1]
    assert np.array_equal(imgs[0], ORIGIN)


def test_orbit_reports_web_hits():
    table = TABLES[(3, 7)]
    with pytest.raises(AmbiguousSupport) as info:
        orbit(table, geodesic_point(table.vertices[0], table.vertices[1], -0.5), 10)
    assert info.value.iterate == 0


def test_rank_and_shape_preserved(a37, a45):
    for atlas in (a37, a45):
        ids = [t.id for t in atlas.tiles if 1 <= t.rank <= 7]
        for i, j in zip(ids, tile_images(atlas, ids)):
            assert atlas.tiles[j].rank == atlas.tiles[i].rank
            assert atlas.tiles[j].shape is atlas.tiles[i].shape


def test_layer_jumps(a37, a45):
    jumps = {(k, s): layer_permutation(a37, k, s).jump for k, s in [(2, Shape.N), (3, Shape.N), (2, Shape.M)]}
    assert jumps == {(2, Shape.N): 5, (3, Shape.N): 14, (2, Shape.M): 19}
    jumps = {(k, s): layer_permutation(a45, k, s).jump for k, s in [(2, Shape.N), (3, Shape.N), (2, Shape.M)]}
    assert jumps == {(2, Shape.N): 7, (3, Shape.N): 27, (2, Shape.M): 17}
    assert layer_permutation(a45, 2, Shape.N).to_dict(4, 5) == {
        "m": 4, "n": 5, "layer": 2, "shape": "NGon", "size": 20, "jump": 7}


def test_some_layers_split_into_several_cycles(a37, a45):
    # jump and size share a factor here, so T is not transitive on the layer
    perm = layer_permutation(a45, 1, Shape.M)
    assert (perm.size, perm.jump) == (12, 4)
    perm = layer_permutation(a37, 1, Shape.M)
    assert (perm.size, perm.jump) == (15, 6)
    c = a37.tiles[layer(a37, 1, Shape.M)[0]].center
    assert orbit(a37.geometry.table, c, 100).period == 15 // math.gcd(6, 15)


def test_tile_image_single(a37):
    tid = layer(a37, 2, Shape.N)[0]
    assert tile_image(a37, tid) == layer(a37, 2, Shape.N)[5]
    with pytest.raises(InsideTable):
        tile_image(a37, 0)


def test_random_points_periodic(a45):
    rng = np.random.default_rng(3)
    pts, owners = sample_points(a45, 40, 6, rng)
    assert all(1 <= a45.tiles[o].rank <= 6 for o in owners)
    for r in orbits(a45.geometry.table, pts, 100_000):
        assert r.period is not None
        assert len(r.support_sequence) == r.period


def test_sample_points_reproducible(a45):
    p1, o1 = sample_points(a45, 5, 4, np.random.default_rng(9))
    p2, o2 = sample_points(a45, 5, 4, np.random.default_rng(9))
    assert np.array_equal(p1, p2) and o1 == o2
    for p in p1:
        assert minkowski_inner(p, p) == pytest.approx(-1.0)


@pytest.mark.parametrize("pair", sorted(TABLES))
def test_circle_map_symmetry_and_monotone_lift(pair):
    table = TABLES[pair]
    M = pair[0]
    for th in np.linspace(0.01, 2 * math.pi, 37):
        a = (circle_map(table, th + 2 * math.pi / M) - circle_map(table, th) - 2 * math.pi / M) % (2 * math.pi)
        assert min(a, 2 * math.pi - a) < 1e-9
    grid = np.linspace(0, 2 * math.pi, 10_000, endpoint=False)
    lift_vals = np.array([th + circle_lift_displacement(table, th) for th in grid])
    assert np.all(np.diff(lift_vals) > -1e-9)
    assert lift_vals[-1] - lift_vals[0] < 2 * math.pi + 1e-6


def test_circle_map_continuous_at_branch_change():
    table = TABLES[(4, 5)]
    V = chart(np.asarray(table.vertices))
    # the ideal end of a side continuation: both candidate images coincide there
    d = V[0] - V[1]
    s = (-(V[0] @ d) + math.sqrt((V[0] @ d) ** 2 - (d @ d) * (V[0] @ V[0] - 1))) / (d @ d)
    end = V[0] + s * d
    th = math.atan2(end[1], end[0])
    left, right = circle_map(table, th - 1e-9), circle_map(table, th + 1e-9)
    assert abs(left - right) < 1e-6


@pytest.mark.parametrize("pair", [(3, 7), (4, 5)])
def test_rotation_number_numeric(pair):
    rho = rotation_number_closed(closed_form_params(*pair))
    assert abs(rotation_number_numeric(TABLES[pair], 0.1, 100_000) - rho) < 1e-3
    assert rotation_number_numeric(TABLES[pair], 0.1, 100_000) == rotation_number_numeric(TABLES[pair], 0.1, 100_000)


def test_layer_permutation_type():
    p = LayerPermutation((1, Shape.N), 3, 1)
    assert p.to_dict(3, 7)["shape"] == "NGon"


def test_far_tile_centers_return_exactly():
    # rank-6 tiles of (5, 6) sit near t = 1000, where double-precision turns drift past the tolerance
    atlas = build_atlas(5, 6, 6)
    perm = layer_permutation(atlas, 3, Shape.M)
    cycle = perm.size // math.gcd(perm.jump, perm.size)
    ids = layer(atlas, 3, Shape.M)[:40]
    res = orbits(atlas.geometry.table, np.array([atlas.tiles[i].center for i in ids]), 10_000, record=False)
    assert [r.period for r in res] == [cycle] * len(ids)
    assert res[0].support_sequence == []


def test_precise_vertices_agree():
    for pair, table in TABLES.items():
        assert table.precise_vertices.dtype == np.longdouble
        assert np.allclose(table.precise_vertices.astype(float), table.vertices, atol=1e-14)
