"""Outer billiards around a regular polygon of a hyperbolic (M,N)-tiling.

Modules: ``hyperbolic`` (hyperboloid-model geometry), ``tiling`` (tile
generation, ranks, layers, type labels), ``billiards`` (the outer billiard
map, orbits, layer permutations, rotation numbers), ``spectral`` (substitution
rules, growth recurrences, closed forms), ``verify`` (cross-check reports),
``render`` (SVG) and ``cli``.
"""
from __future__ import annotations

from .billiards import (
    circle_map,
    layer_permutation,
    orbit,
    orbits,
    rotation_number_numeric,
    step,
    step_inverse,
    support_vertex,
    support_vertex_inverse,
    tile_image,
)
from .errors import (
    AmbiguousSupport,
    AngularTie,
    BilliardsError,
    CapExceeded,
    CenterMismatch,
    DegenerateGeometry,
    EmptyLayer,
    ImageOutsideAtlas,
    InsideTable,
    InvalidLabel,
    LayerOutOfRange,
    NotCyclic,
)
from .hyperbolic import Isometry, Polygon, distance, half_turn, mn_geometry
from .render import RenderOptions, render_svg
from .spectral import (
    Family,
    closed_form_params,
    closed_forms,
    exact_counts,
    growth_model,
    rotation_number_closed,
    rules_for,
)
from .tiling import Atlas, Shape, TypeLabel, atlas_from_json, atlas_to_json, build_atlas, layer
from .verify import VerifyReport, verify_all, verify_counts, verify_dynamics, verify_reduction

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSupport", "AngularTie", "Atlas", "BilliardsError", "CapExceeded", "CenterMismatch",
    "DegenerateGeometry", "EmptyLayer", "Family", "ImageOutsideAtlas", "InsideTable", "InvalidLabel",
    "Isometry", "LayerOutOfRange", "NotCyclic", "Polygon", "RenderOptions", "Shape", "TypeLabel",
    "VerifyReport", "atlas_from_json", "atlas_to_json", "build_atlas", "circle_map", "closed_form_params",
    "closed_forms", "distance", "exact_counts", "growth_model", "half_turn", "layer", "layer_permutation",
    "mn_geometry", "orbit", "orbits", "render_svg", "rotation_number_closed", "rotation_number_numeric",
    "rules_for", "step", "step_inverse", "support_vertex", "support_vertex_inverse", "tile_image",
    "verify_all", "verify_counts", "verify_dynamics", "verify_reduction",
]
