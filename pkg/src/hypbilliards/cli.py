"""Command-line entry point: ``hypbilliards <subcommand> --m M --n N [...]``.

Exit codes: 0 success, 1 invalid arguments or degenerate pair, 2 verification mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .billiards import (
    layer_permutation,
    orbits,
    rotation_number_numeric,
    sample_points,
    step_many,
)
from .errors import BilliardsError, DegenerateGeometry
from .hyperbolic import lift, mn_geometry
from .render import RenderOptions, render_svg
from .spectral import REPORT_FIELDS, closed_form_params, closed_form_report, exact_counts, growth_model, rotation_number_closed
from .tiling import DEFAULT_RANK_CAP, Shape, atlas_to_json, build_atlas, layer_counts, layer_of_rank
from .verify import verify_all

SUBCOMMANDS = ("build", "counts", "perm", "rotation", "orbit", "render", "verify")
FORMATS = ("json", "csv", "text")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    m: int
    n: int
    max_rank: int = 6
    k_max: int | None = None
    iters: int = 100_000
    theta0: float = 0.1
    seed: int = 0
    format: str = "json"
    out: str | None = None
    point: tuple[float, ...] | None = None
    count: int = 1
    rank_cap: int = DEFAULT_RANK_CAP
    web_depth: int = 0

    def validate(self) -> "CliConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.m < 3 or self.n < 3:
            raise UsageError("--m and --n must be at least 3")
        if self.max_rank < 0:
            raise UsageError("--max-rank must be non-negative")
        if self.k_max is not None and self.k_max < 1:
            raise UsageError("--k-max must be at least 1")
        if self.iters < 1 or self.count < 1:
            raise UsageError("--iters and --count must be positive")
        if self.web_depth < 0:
            raise UsageError("--web-depth must be non-negative")
        if self.format not in FORMATS:
            raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
        if self.point is not None and len(self.point) not in (2, 3):
            raise UsageError("--point takes 2 (Klein chart) or 3 (hyperboloid) comma-separated numbers")
        if not math.isfinite(self.theta0):
            raise UsageError("--theta0 must be finite")
        return self

    @property
    def layers(self) -> int:
        """Layer depth: ``--k-max`` if given, else as many full layers as ``--max-rank`` holds."""
        return self.k_max if self.k_max is not None else max(1, self.max_rank // 2)


def _point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(c) for c in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--m", type=int, required=True, help="sides of the table polygon")
    common.add_argument("--n", type=int, required=True, help="sides of the other polygon")
    common.add_argument("--max-rank", type=int, default=6)
    common.add_argument("--rank-cap", type=int, default=DEFAULT_RANK_CAP)
    common.add_argument("--k-max", type=int, default=None)
    common.add_argument("--iters", type=int, default=100_000)
    common.add_argument("--theta0", type=float, default=0.1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", default="json", choices=FORMATS)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    parser = _Parser(prog="hypbilliards", description="Outer billiards in hyperbolic (M,N)-tilings.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("build", parents=[common], help="emit the atlas as JSON")
    sub.add_parser("counts", parents=[common], help="layer sizes, type labels and closed forms")
    sub.add_parser("perm", parents=[common], help="jump of the map on each layer")
    sub.add_parser("rotation", parents=[common], help="numeric and closed-form rotation number")
    p = sub.add_parser("orbit", parents=[common], help="period of a given or random point")
    p.add_argument("--point", type=_point, default=None, help="u,v (Klein chart) or x,y,t")
    p.add_argument("--count", type=int, default=1, help="random points when --point is absent")
    p = sub.add_parser("render", parents=[common], help="SVG picture in the Klein chart")
    p.add_argument("--web-depth", type=int, default=0)
    p.add_argument("--point", type=_point, default=None, help="draw the orbit of this point")
    sub.add_parser("verify", parents=[common], help="full cross-check report")
    return parser


def parse_config(argv: list[str]) -> CliConfig:
    ns = build_parser().parse_args(argv)
    return CliConfig(
        subcommand=ns.subcommand,
        m=ns.m,
        n=ns.n,
        max_rank=ns.max_rank,
        k_max=ns.k_max,
        iters=ns.iters,
        theta0=ns.theta0,
        seed=ns.seed,
        format=ns.format,
        out=ns.out,
        point=getattr(ns, "point", None),
        count=getattr(ns, "count", 1),
        rank_cap=ns.rank_cap,
        web_depth=getattr(ns, "web_depth", 0),
    ).validate()


def _num(x):
    if isinstance(x, float):
        return round(x, 12) if math.isfinite(x) else None
    return x


def _table(rows: list[dict], fields, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{f: _num(r.get(f)) for f in fields} for r in rows], indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({f: "" if r.get(f) is None else _num(r.get(f)) for f in fields})
        return buf.getvalue()
    cells = [[str(f) for f in fields]] + [["-" if r.get(f) is None else f"{_num(r.get(f))}" for f in fields] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(fields))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in cells) + "\n"


def _atlas(cfg: CliConfig, max_rank: int | None = None):
    return build_atlas(cfg.m, cfg.n, cfg.max_rank if max_rank is None else max_rank, rank_cap=cfg.rank_cap)


def _cmd_build(cfg: CliConfig) -> tuple[str, int]:
    return atlas_to_json(_atlas(cfg)) + "\n", 0


COUNT_FIELDS = ("layer", "shape", "size", "recurrence", "X", "Y", "Z", "Zero")


def _cmd_counts(cfg: CliConfig) -> tuple[str, int]:
    k_max = cfg.layers
    atlas = _atlas(cfg, max(cfg.max_rank, 2 * k_max))
    model = growth_model(cfg.m, cfg.n)
    counts = layer_counts(atlas)
    rows = []
    for k in range(1, k_max + 1):
        ex = exact_counts(model, k)
        for shape, expected in ((Shape.N, ex.q), (Shape.M, ex.l)):
            c = counts.get((k, shape))
            if c is None:
                continue
            row = {"layer": k, "shape": shape.value, "size": sum(c.values()), "recurrence": expected}
            row.update({lab.value: n for lab, n in c.items() if lab is not None})
            rows.append(row)
    forms = closed_form_report(cfg.m, cfg.n, k_max)
    if cfg.format == "json":
        doc = {"m": cfg.m, "n": cfg.n, "max_rank": atlas.max_rank,
               "layers": json.loads(_table(rows, COUNT_FIELDS, "json")),
               "closed_forms": json.loads(_table(forms, REPORT_FIELDS, "json"))}
        return json.dumps(doc, indent=2) + "\n", 0
    return _table(rows, COUNT_FIELDS, cfg.format) + "\n" + _table(forms, REPORT_FIELDS, cfg.format), 0


PERM_FIELDS = ("m", "n", "layer", "shape", "size", "jump")


def _cmd_perm(cfg: CliConfig) -> tuple[str, int]:
    atlas = _atlas(cfg)
    rows = []
    # images of the outermost rank may leave the atlas
    for r in range(1, atlas.max_rank):
        rows.append(layer_permutation(atlas, *layer_of_rank(r)).to_dict(cfg.m, cfg.n))
    return _table(rows, PERM_FIELDS, cfg.format), 0


ROTATION_FIELDS = ("family", "m", "n", "rho_closed", "rho_numeric", "difference", "theta0", "iters")


def _cmd_rotation(cfg: CliConfig) -> tuple[str, int]:
    params = closed_form_params(cfg.m, cfg.n)
    closed = rotation_number_closed(params)
    numeric = rotation_number_numeric(mn_geometry(cfg.m, cfg.n).table, cfg.theta0, cfg.iters)
    row = {"family": params.family.value, "m": cfg.m, "n": cfg.n, "rho_closed": closed,
           "rho_numeric": numeric, "difference": abs(numeric - closed), "theta0": cfg.theta0, "iters": cfg.iters}
    if cfg.format == "json":
        return json.dumps({k: _num(v) for k, v in row.items()}, indent=2) + "\n", 0
    return _table([row], ROTATION_FIELDS, cfg.format), 0


def _orbit_points(cfg: CliConfig, atlas) -> np.ndarray:
    if cfg.point is None:
        pts, _ = sample_points(atlas, cfg.count, max(1, atlas.max_rank), np.random.default_rng(cfg.seed))
        return pts
    if len(cfg.point) == 2:
        u, v = cfg.point
        if u * u + v * v >= 1:
            raise UsageError("--point must lie inside the unit disk")
        return lift(u, v)[None, :]
    x, y, t = cfg.point
    if t <= 0 or abs(x * x + y * y - t * t + 1) > 1e-6:
        raise UsageError("--point x,y,t must lie on the upper hyperboloid sheet")
    return np.array([[x, y, t]])


ORBIT_FIELDS = ("x", "y", "t", "period", "iterations_used")


def _cmd_orbit(cfg: CliConfig) -> tuple[str, int]:
    atlas = _atlas(cfg)
    pts = _orbit_points(cfg, atlas)
    res = orbits(atlas.geometry.table, pts, cfg.iters, record=False)
    docs = [r.to_dict(p) for r, p in zip(res, pts)]
    if cfg.format == "json":
        return json.dumps(docs[0] if len(docs) == 1 else docs, indent=2) + "\n", 0
    rows = [{"x": d["point"][0], "y": d["point"][1], "t": d["point"][2], "period": d["period"],
             "iterations_used": d["iterations_used"]} for d in docs]
    return _table(rows, ORBIT_FIELDS, cfg.format), 0


def _cmd_render(cfg: CliConfig) -> tuple[str, int]:
    atlas = _atlas(cfg)
    path = None
    if cfg.point is not None:
        start = _orbit_points(cfg, atlas)
        res = orbits(atlas.geometry.table, start, cfg.iters, record=False)[0]
        steps = res.period if res.period is not None else min(cfg.iters, 1000)
        path = [start[0]]
        cur = start
        for _ in range(steps):
            cur, _sup = step_many(atlas.geometry.table, cur)
            path.append(cur[0])
        path = np.array(path)
    return render_svg(atlas, RenderOptions(web_depth=cfg.web_depth, orbit=path)), 0


def _cmd_verify(cfg: CliConfig) -> tuple[str, int]:
    k_max = cfg.k_max if cfg.k_max is not None else 3
    rep = verify_all(cfg.m, cfg.n, k_max, seed=cfg.seed, iters=cfg.iters)
    cycles = {(f["layer"], f["shape"]): f["jump"] for f in rep.findings if f.get("kind") == "cycles"}
    model = growth_model(cfg.m, cfg.n)
    counts = [exact_counts(model, k).q for k in range(1, k_max + 1)]
    jumps = [None if cfg.m == 3 and k == 1 else cycles.get((k, Shape.N.value)) for k in range(1, k_max + 1)]
    code = 0 if rep.passed else 2
    if cfg.format == "text":
        return rep.summary() + f"\ncounts: {counts}\njumps: {jumps}\n", code
    if cfg.format == "csv":
        rows = [c.to_dict() for c in rep.checks]
        return _table(rows, ("name", "expected", "observed", "tolerance", "pass"), "csv"), code
    doc = rep.to_dict()
    doc["counts"] = counts
    doc["jumps"] = jumps
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", code


_COMMANDS = {
    "build": _cmd_build,
    "counts": _cmd_counts,
    "perm": _cmd_perm,
    "rotation": _cmd_rotation,
    "orbit": _cmd_orbit,
    "render": _cmd_render,
    "verify": _cmd_verify,
}


def run(argv: list[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else list(argv))
        mn_geometry(cfg.m, cfg.n)
        text, code = _COMMANDS[cfg.subcommand](cfg)
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DegenerateGeometry as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BilliardsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
