from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypbilliards.errors import DegenerateGeometry
from hypbilliards.hyperbolic import (
    J,
    ORIGIN,
    IdealPoint,
    Isometry,
    chart,
    compose,
    distance,
    geodesic_point,
    half_turn,
    is_hyperbolic_pair,
    lift,
    minkowski_inner,
    mn_geometry,
    norm_residual,
    orientation,
    polar_point,
    regular_polygon,
    rotation,
    rotation_about,
    translation_to,
    vertex_angle,
)

radii = st.floats(0.0, 4.0)
angles = st.floats(-math.pi, math.pi)
points = st.builds(polar_point, radii, angles)


def lorentz_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.T @ J @ m - J)))


def test_inner_product_examples():
    assert minkowski_inner(ORIGIN, ORIGIN) == -1.0
    assert minkowski_inner(np.array([1.0, 0, 0]), np.array([1.0, 0, 0])) == 1.0
    for th in np.linspace(0, 2 * math.pi, 7):
        assert minkowski_inner(ORIGIN, np.array([math.cos(th), math.sin(th), 1.0])) == pytest.approx(-1.0)


def test_distance_basics():
    assert distance(ORIGIN, ORIGIN) == 0.0
    p = polar_point(1.3, 0.4)
    assert distance(ORIGIN, p) == pytest.approx(1.3, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(points, points)
def test_distance_symmetric(a, b):
    assert distance(a, b) == pytest.approx(distance(b, a), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(points)
def test_half_turn_doubles_distance_from_origin(p):
    img = half_turn(p)(ORIGIN)
    assert distance(ORIGIN, img) == pytest.approx(2 * distance(ORIGIN, p), abs=1e-8)


@settings(max_examples=200, deadline=None)
@given(points, points)
def test_half_turn_fixes_centre_and_is_involution(p, x):
    h = half_turn(p)
    assert np.allclose(h(p), p, atol=1e-9 * max(1.0, p[2]))
    assert np.max(np.abs((h @ h).m - np.eye(3))) < 1e-9 * max(1.0, p[2] ** 2)
    assert distance(h(x), p) == pytest.approx(distance(x, p), abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(points, angles)
def test_half_turn_negates_orthogonal_complement(p, phi):
    # unit spacelike vector orthogonal to p
    q = translation_to(p)(np.array([math.cos(phi), math.sin(phi), 0.0]))
    assert minkowski_inner(q, p) == pytest.approx(0.0, abs=1e-8)
    assert np.allclose(half_turn(p)(q), -q, atol=1e-8 * max(1.0, p[2] ** 2))


def test_composed_half_turns_stay_lorentzian():
    rng = np.random.default_rng(1)
    V = mn_geometry(4, 5).table.vertices
    turns = [half_turn(V[i]) for i in rng.integers(0, 4, size=100)]
    assert lorentz_residual(turns[0].m) < 1e-9
    total = compose(turns)
    assert lorentz_residual(total.m) / max(1.0, np.abs(total.m).max() ** 2) < 1e-7


def test_orthonormalize_survives_huge_products():
    rng = np.random.default_rng(2)
    turns = [half_turn(polar_point(rng.uniform(0, 1.5), rng.uniform(-3, 3))) for _ in range(100)]
    total = compose(turns)
    assert np.all(np.isfinite(total.m))
    assert lorentz_residual(total.m) / np.abs(total.m).max() ** 2 < 1e-12


@settings(max_examples=100, deadline=None)
@given(points, angles, points)
def test_isometries_preserve_distance(p, phi, x):
    g = rotation_about(p, phi)
    y = polar_point(0.7, 1.1)
    assert distance(g(x), g(y)) == pytest.approx(distance(x, y), abs=1e-7)
    assert norm_residual(g(x)) < 1e-8 * max(1.0, x[2] * p[2] ** 2)
    assert np.allclose((g @ g.inverse()).m, np.eye(3), atol=1e-8 * max(1.0, p[2] ** 4))


def test_translation_to_maps_origin():
    p = polar_point(2.0, 0.3)
    assert np.allclose(translation_to(p)(ORIGIN), p)


def test_chart_examples():
    assert np.allclose(chart(ORIGIN), [0.0, 0.0])
    assert np.allclose(chart(IdealPoint(0.7)), [math.cos(0.7), math.sin(0.7)])
    assert np.allclose(lift(*chart(polar_point(1.2, 2.0))), polar_point(1.2, 2.0))


def test_orientation_examples():
    assert orientation((0, 0), (1, 0), (0, 1)) == 1
    assert orientation((0, 0), (0, 1), (1, 0)) == -1
    assert orientation((0, 0), (1, 1), (2, 2)) == 0


@settings(max_examples=200, deadline=None)
@given(points)
def test_geodesics_through_origin_are_chords(x):
    mid = geodesic_point(ORIGIN, x, 0.5 * distance(ORIGIN, x)) if distance(ORIGIN, x) > 1e-6 else ORIGIN
    o, a, b = chart(ORIGIN), chart(x), chart(mid)
    det = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    assert abs(det) < 1e-9


def test_degenerate_pairs_rejected():
    for m, n in [(3, 6), (4, 4), (6, 3), (3, 5), (3, 3)]:
        assert not is_hyperbolic_pair(m, n)
        with pytest.raises(DegenerateGeometry):
            mn_geometry(m, n)
    with pytest.raises(DegenerateGeometry, match="Euclidean"):
        mn_geometry(3, 6)


@pytest.mark.parametrize("M,N", [(3, 7), (4, 5), (5, 5), (3, 12), (7, 4), (6, 6)])
def test_geometry_formulas(M, N):
    g = mn_geometry(M, N)
    assert g.alpha + g.beta == pytest.approx(math.pi)
    assert math.tan(g.alpha / 2) == pytest.approx(math.cos(math.pi / M) / math.cos(math.pi / N))
    assert math.cosh(g.edge_len / 2) == pytest.approx(math.cos(math.pi / M) / math.sin(g.alpha / 2))
    # both polygons built from their circumradii have the common edge length
    for sides, R, ang in ((M, g.circumradius_M, g.alpha), (N, g.circumradius_N, g.beta)):
        P = regular_polygon(sides, R)
        V = np.asarray(P.vertices)
        assert distance(V[0], V[1]) == pytest.approx(g.edge_len, abs=1e-9)
        assert vertex_angle(V[-1], V[0], V[1]) == pytest.approx(ang, abs=1e-9)
    T = g.table
    assert T.is_convex_ccw()
    assert chart(T.vertices[0])[1] == pytest.approx(0.0, abs=1e-15)
    assert chart(T.vertices[0])[0] > 0


def _angle_for_side(sides: int, edge: float) -> float:
    """Interior angle of the regular polygon with the given side, by bisection on the circumradius."""
    lo, hi = 1e-9, 20.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        V = np.asarray(regular_polygon(sides, mid).vertices)
        if distance(V[0], V[1]) < edge:
            lo = mid
        else:
            hi = mid
    V = np.asarray(regular_polygon(sides, lo).vertices)
    return vertex_angle(V[-1], V[0], V[1])


def test_edge_length_matches_bisection_oracle():
    # four tiles per vertex: find the common side where the two interior angles sum to pi
    lo, hi = 1e-6, 5.0
    for _ in range(80):
        e = 0.5 * (lo + hi)
        if _angle_for_side(3, e) + _angle_for_side(7, e) > math.pi:
            lo = e
        else:
            hi = e
    g = mn_geometry(3, 7)
    assert g.edge_len == pytest.approx(0.5 * (lo + hi), abs=1e-9)
    assert math.cosh(g.edge_len / 2) == pytest.approx(math.sqrt(math.cos(math.pi / 3) ** 2 + math.cos(math.pi / 7) ** 2))
    assert math.cosh(g.edge_len / 2) == pytest.approx(1.030408, abs=1e-5)


def test_isometry_identity_and_rotation():
    r = rotation(math.pi / 2)
    assert np.allclose(r(np.array([1.0, 0.0, 0.0])), [0.0, 1.0, 0.0])
    assert np.allclose((r @ r.inverse()).m, Isometry.identity().m)
