"""SVG pictures in the Klein chart, where every geodesic is a straight chord."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .billiards import step_many
from .hyperbolic import chart, geodesic_point
from .tiling import Atlas, TypeLabel

RANK_FILLS = (
    "#f4d35e", "#ee964b", "#f95738", "#6a4c93", "#1982c4",
    "#8ac926", "#ffca3a", "#ff595e", "#52a675", "#4267ac",
)
TYPE_STROKES = {
    TypeLabel.TABLE: "#000000",
    TypeLabel.ZERO: "#444444",
    TypeLabel.X: "#b00020",
    TypeLabel.Y: "#0b5394",
    TypeLabel.Z: "#38761d",
    None: "#777777",
}
WEB_STROKE = "#d62728"
ORBIT_STROKE = "#111111"


@dataclass(frozen=True)
class RenderOptions:
    size: int = 800
    max_rank: int | None = None
    web_depth: int = 0
    web_samples: int = 64
    web_reach: float = 6.0
    stroke_width: float = 0.6
    orbit: np.ndarray | None = field(default=None, compare=False)


def _xy(p) -> tuple[float, float]:
    u, v = chart(np.asarray(p, dtype=float))
    return float(u), float(v)


def _coord(u: float, v: float, size: int) -> str:
    h = size / 2
    # flip y so the picture has the usual orientation
    return f"{h + u * (h - 2):.3f},{h - v * (h - 2):.3f}"


def _ray_samples(start, away, count: int, reach: float) -> np.ndarray:
    ds = np.linspace(reach / count, reach, count)
    return np.array([geodesic_point(start, away, -d) for d in ds])


def _runs(xy: np.ndarray, word: np.ndarray, alive: np.ndarray) -> list[np.ndarray]:
    runs, start = [], 0
    for i in range(1, len(xy) + 1):
        if i == len(xy) or not (alive[i] and alive[i - 1]) or not np.array_equal(word[i], word[i - 1]):
            keep = [r for r in range(start, i) if alive[r]]
            if len(keep) >= 2:
                runs.append(xy[keep])
            start = i
    return runs


def web_segments(table, depth: int, samples: int = 64, reach: float = 6.0) -> list[np.ndarray]:
    """Pieces of the web as chart polylines.

    Clockwise side continuations are the rays where T is undefined; they are
    pulled back with T^-1. The counterclockwise ones are pushed forward with T.
    A polyline is split wherever neighbouring samples take different branches,
    so each drawn piece is the image of a straight chord under one isometry.
    """
    V = np.asarray(table.vertices, dtype=float)
    n = len(V)
    out: list[np.ndarray] = []
    for inverse in (True, False):
        for j in range(n):
            nxt = V[(j + 1) % n]
            start, away = (V[j], nxt) if inverse else (nxt, V[j])
            pts = _ray_samples(start, away, samples, reach)
            word = np.zeros((len(pts), 0), dtype=int)
            alive = np.ones(len(pts), dtype=bool)
            for d in range(depth + 1):
                if d:
                    pts, sup = step_many(table, pts, inverse=inverse)
                    alive &= sup >= 0
                    word = np.column_stack([word, sup])
                out.extend(_runs(chart(pts), word, alive))
    return out


def web_points(table, depth: int, samples: int = 64, reach: float = 6.0) -> np.ndarray:
    """All sampled web points (chart coordinates) from :func:`web_segments`."""
    segs = web_segments(table, depth, samples, reach)
    return np.concatenate(segs) if segs else np.zeros((0, 2))


def render_svg(atlas: Atlas, options: RenderOptions | None = None) -> str:
    """Render tiles up to ``options.max_rank`` plus optional orbit and web overlay.

    Output depends only on the inputs, so repeated calls give identical text.
    """
    opt = options or RenderOptions()
    size = opt.size
    h = size / 2
    limit = atlas.max_rank if opt.max_rank is None else opt.max_rank
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<title>({atlas.M},{atlas.N}) tiling, ranks 0..{limit}</title>',
        f'<circle cx="{h:.3f}" cy="{h:.3f}" r="{h - 2:.3f}" fill="white" stroke="black" stroke-width="1"/>',
        '<g id="tiles">',
    ]
    for t in atlas.tiles:
        if t.rank > limit:
            continue
        pts = " ".join(_coord(*_xy(v), size) for v in t.vertices)
        fill = RANK_FILLS[t.rank % len(RANK_FILLS)]
        stroke = TYPE_STROKES[t.type_label]
        lines.append(
            f'<polygon data-id="{t.id}" data-rank="{t.rank}" points="{pts}" fill="{fill}" '
            f'fill-opacity="0.55" stroke="{stroke}" stroke-width="{opt.stroke_width}"/>'
        )
    lines.append("</g>")
    if opt.web_depth > 0:
        lines.append('<g id="web">')
        for seg in web_segments(atlas.geometry.table, opt.web_depth, opt.web_samples, opt.web_reach):
            pts = " ".join(_coord(u, v, size) for u, v in seg)
            lines.append(f'<polyline points="{pts}" fill="none" stroke="{WEB_STROKE}" stroke-width="1.2"/>')
        lines.append("</g>")
    if opt.orbit is not None and len(opt.orbit):
        pts = " ".join(_coord(u, v, size) for u, v in chart(np.asarray(opt.orbit, dtype=float)))
        lines.append(
            f'<polyline id="orbit" points="{pts}" fill="none" stroke="{ORBIT_STROKE}" stroke-width="1"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
