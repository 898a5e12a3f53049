from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hypbilliards.hyperbolic import chart
from hypbilliards.render import RenderOptions, render_svg, web_points
from hypbilliards.tiling import build_atlas

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def a37():
    return build_atlas(3, 7, 8)


def test_table_only():
    svg = render_svg(build_atlas(3, 7, 0))
    root = ET.fromstring(svg.split("\n", 1)[1])
    assert len(root.findall(f".//{SVG}polygon")) == 1
    assert len(root.findall(f".//{SVG}circle")) == 1
    assert root.get("version") == "1.1"


def test_polygon_count_matches_tiles(a37):
    svg = render_svg(a37, RenderOptions(max_rank=4))
    assert svg.count("<polygon") == 1 + 3 + 15 + 12 + 45
    assert svg.count("<polygon") == sum(t.rank <= 4 for t in a37.tiles)


def test_deterministic_with_overlays(a37):
    orbit = np.array([t.center for t in a37.tiles[1:6]])
    opt = RenderOptions(max_rank=3, web_depth=2, orbit=orbit)
    one, two = render_svg(a37, opt), render_svg(a37, opt)
    assert one == two
    assert 'id="orbit"' in one and 'id="web"' in one
    ET.fromstring(one.split("\n", 1)[1])


def _edges(atlas, max_rank):
    segs = []
    for t in atlas.tiles:
        if t.rank <= max_rank:
            c = chart(np.asarray(t.vertices))
            segs.append(np.stack([c, np.roll(c, -1, axis=0)], axis=1))
    return np.concatenate(segs)


def _inside(poly: np.ndarray, p: np.ndarray) -> bool:
    d = np.roll(poly, -1, axis=0) - poly
    w = p - poly
    return bool(np.all(d[:, 0] * w[:, 1] - d[:, 1] * w[:, 0] >= -1e-12))


@pytest.mark.parametrize("pair", [(3, 7), (4, 5)])
def test_web_lies_on_tile_edges(pair):
    atlas = build_atlas(*pair, 8)
    inner = [chart(np.asarray(t.vertices)) for t in atlas.tiles if t.rank < atlas.max_rank]
    pts = web_points(atlas.geometry.table, depth=3, samples=24, reach=3.0)
    covered = [p for p in pts if any(_inside(poly, p) for poly in inner)]
    assert len(covered) > 100
    edges = _edges(atlas, atlas.max_rank)
    a, b = edges[:, 0], edges[:, 1]
    d = b - a
    for p in covered:
        s = np.clip(((p - a) * d).sum(axis=1) / (d * d).sum(axis=1), 0.0, 1.0)
        gap = np.sqrt((((a + s[:, None] * d) - p) ** 2).sum(axis=1)).min()
        assert gap <= 1e-6
