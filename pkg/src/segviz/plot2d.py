"""Panel selection, facet layout, and deterministic SVG rendering for
polygon atlases.

Output is plain SVG 1.1 assembled with fixed number formatting (three
decimals) and fixed element ordering, so the same inputs always produce
identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Sequence
from xml.sax.saxutils import escape, quoteattr

from .atlas import PolygonAtlas, RegionShape, RegionRef, SUBCORTICAL_VIEWS
from .colors import RGBA, ColorScale, map_value, normalize_hex
from .errors import SegvizError

#: Documented guard: the subcortical panel set is fixed.
MSG_SUBCORTICAL_HEMI = "no option to show only a single hemisphere for subcortical atlases"
MSG_SUBCORTICAL_POSITION = "no position option for subcortical atlases"

#: Default panel order for a dispersed cortical plot.
DISPERSED_ORDER = (
    ("left", "lateral"),
    ("left", "medial"),
    ("right", "medial"),
    ("right", "lateral"),
)

PANEL_W = 240.0
PANEL_H = 200.0
PANEL_GAP = 8.0
MARGIN = 16.0
CONTENT_PAD = 6.0
FACET_GAP = 12.0
FACET_TITLE_H = 22.0
TITLE_H = 28.0
LEGEND_BAR_W = 256.0
LEGEND_BAR_H = 14.0
LEGEND_ROW_H = 18.0
SWATCH = 12.0


class Panel(NamedTuple):
    hemi: str | None  # None on subcortical panels: all hemispheres shown
    view: str
    row: int
    col: int


@dataclass(frozen=True)
class PanelLayout:
    panels: tuple[Panel, ...]
    facets: tuple[str, ...] = ()
    facet_cols: int = 1
    panel_size: tuple[float, float] = (PANEL_W, PANEL_H)


@dataclass(frozen=True)
class RenderSpec2D:
    stroke: RGBA | None = None
    stroke_width: float = 1.0
    legend: str = "none"  # none | discrete | gradient-bar
    title: str = ""
    background: str = "#FFFFFF"

    def __post_init__(self):
        if self.legend not in ("none", "discrete", "gradient-bar"):
            raise SegvizError(f"unknown legend kind {self.legend!r}")
        if not math.isfinite(self.stroke_width) or self.stroke_width < 0:
            raise SegvizError("stroke width must be finite and >= 0")
        object.__setattr__(self, "background", normalize_hex(self.background))


def select_panels(
    atlas: PolygonAtlas,
    hemisphere: str | None = None,
    view: str | None = None,
    position: str | None = None,
) -> PanelLayout:
    """Choose and arrange atlas panels.

    Cortical atlases offer any combination of hemisphere and view, either
    dispersed on one row or stacked by hemisphere.  Subcortical atlases
    show their slice views on one row; hemisphere and position options are
    rejected.
    """
    if atlas.kind == "subcortical":
        if hemisphere is not None:
            raise SegvizError(MSG_SUBCORTICAL_HEMI)
        if position is not None:
            raise SegvizError(MSG_SUBCORTICAL_POSITION)
        present = {shape.view for shape in atlas.regions}
        views = [v for v in ("coronal", "sagittal", "axial") if v in present]
        if view is not None:
            if view not in SUBCORTICAL_VIEWS:
                raise SegvizError(f"unknown view {view!r}")
            if view not in present:
                raise SegvizError(f"view {view!r} not present in atlas {atlas.name!r}")
            views = [view]
        panels = tuple(Panel(None, v, 0, i) for i, v in enumerate(views))
        return PanelLayout(panels)

    position = position or "dispersed"
    if position not in ("dispersed", "stacked"):
        raise SegvizError(f"unknown position {position!r}")
    if hemisphere is not None and hemisphere not in ("left", "right"):
        raise SegvizError(f"unknown hemisphere {hemisphere!r}")
    if view is not None and view not in ("lateral", "medial"):
        raise SegvizError(f"unknown view {view!r}")

    def keep(hemi: str, v: str) -> bool:
        return (hemisphere is None or hemi == hemisphere) and (view is None or v == view)

    if position == "dispersed":
        kept = [(h, v) for h, v in DISPERSED_ORDER if keep(h, v)]
        panels = tuple(Panel(h, v, 0, i) for i, (h, v) in enumerate(kept))
    else:
        grid = []
        for row, hemi in enumerate(("left", "right")):
            for col, v in enumerate(("lateral", "medial")):
                if keep(hemi, v):
                    grid.append((hemi, v, row, col))
        rows = sorted({r for _, _, r, _ in grid})
        cols = sorted({c for _, _, _, c in grid})
        panels = tuple(
            Panel(h, v, rows.index(r), cols.index(c)) for h, v, r, c in grid
        )
    if not panels:
        raise SegvizError("selection leaves no panels")
    return PanelLayout(panels)


def layout_facets(layout: PanelLayout, groups: Sequence[str], ncol: int) -> PanelLayout:
    """Replicate the panel grid once per group, row-major with ncol columns."""
    if not groups:
        raise SegvizError("faceting needs at least one group")
    if ncol < 1:
        raise SegvizError("facet ncol must be >= 1")
    return replace(layout, facets=tuple(groups), facet_cols=ncol)


# --- SVG assembly -------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.3f}"


def _point_in_ring(x: float, y: float, ring) -> bool:
    inside = False
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) / (y1 - y0) * (x1 - x0)
            if xi > x:
                inside = not inside
    return inside


def _panel_shapes(atlas: PolygonAtlas, panel: Panel) -> list[RegionShape]:
    shapes = [
        s
        for s in atlas.regions
        if s.view == panel.view and (panel.hemi is None or s.hemi == panel.hemi)
    ]
    shapes.sort(key=lambda s: (s.label, s.hemi, s.piece, s.ring_role))
    return shapes


def _panel_transform(shapes: list[RegionShape], pw: float, ph: float):
    points = [pt for s in shapes for pt in s.ring]
    if not points:
        return lambda x, y: (0.0, 0.0)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    bw = x1 - x0 or 1.0
    bh = y1 - y0 or 1.0
    inner_w = pw - 2 * CONTENT_PAD
    inner_h = ph - 2 * CONTENT_PAD
    s = min(inner_w / bw, inner_h / bh)
    ox = (pw - s * bw) / 2.0
    oy = (ph - s * bh) / 2.0

    def to_panel(x: float, y: float) -> tuple[float, float]:
        return ox + (x - x0) * s, ph - (oy + (y - y0) * s)

    return to_panel


def _path_d(rings, to_panel) -> str:
    parts = []
    for ring in rings:
        coords = [to_panel(x, y) for x, y in ring]
        head = coords[0]
        parts.append(
            "M" + _fmt(head[0]) + "," + _fmt(head[1])
            + "".join(f"L{_fmt(x)},{_fmt(y)}" for x, y in coords[1:])
            + "Z"
        )
    return "".join(parts)


def _group_paths(shapes: list[RegionShape]):
    """One path per outer ring; contained same-label holes ride along."""
    outers = [s for s in shapes if s.ring_role == "outer"]
    holes = [s for s in shapes if s.ring_role == "hole"]
    used: set[int] = set()
    grouped: list[tuple[RegionShape, list[RegionShape]]] = []
    for outer in outers:
        mine = []
        for i, hole in enumerate(holes):
            if i in used or hole.label != outer.label or hole.hemi != outer.hemi:
                continue
            hx, hy = hole.ring[0]
            if _point_in_ring(hx, hy, outer.ring):
                mine.append(hole)
                used.add(i)
        grouped.append((outer, mine))
    for i, hole in enumerate(holes):
        if i not in used:
            grouped.append((hole, []))  # orphan hole still renders deterministically
    return grouped


def _fill_attrs(color: RGBA) -> str:
    attrs = f' fill="#{color[0]:02X}{color[1]:02X}{color[2]:02X}"'
    if color[3] != 255:
        attrs += f' fill-opacity="{_fmt(color[3] / 255.0)}"'
    return attrs


def _stroke_attrs(spec: RenderSpec2D) -> str:
    if spec.stroke is None:
        return ' stroke="none"'
    r, g, b, a = spec.stroke
    attrs = f' stroke="#{r:02X}{g:02X}{b:02X}" stroke-width="{_fmt(spec.stroke_width)}"'
    if a != 255:
        attrs += f' stroke-opacity="{_fmt(a / 255.0)}"'
    return attrs


def render_svg(
    atlas: PolygonAtlas,
    layout: PanelLayout,
    fills: Mapping,
    spec: RenderSpec2D = RenderSpec2D(),
    scale: ColorScale | None = None,
) -> bytes:
    """Render the laid-out atlas to deterministic SVG bytes.

    ``fills`` maps region references to RGBA; with facets it may instead
    map group names to per-group fill maps.  Elements are emitted in
    (facet, panel, label, piece) order; paths use the even-odd fill rule so
    hole rings cut out.
    """
    facets = layout.facets or ("",)
    per_facet: list[Mapping[RegionRef, RGBA]] = []
    if layout.facets and all(group in fills for group in layout.facets):
        per_facet = [fills[group] for group in facets]
    else:
        per_facet = [fills for _ in facets]

    pw, ph = layout.panel_size
    grid_rows = max((p.row for p in layout.panels), default=-1) + 1
    grid_cols = max((p.col for p in layout.panels), default=-1) + 1
    facet_w = grid_cols * pw + max(grid_cols - 1, 0) * PANEL_GAP
    facet_title_h = FACET_TITLE_H if layout.facets else 0.0
    facet_h = grid_rows * ph + max(grid_rows - 1, 0) * PANEL_GAP + facet_title_h

    n_facets = len(facets)
    fcols = min(layout.facet_cols, n_facets) if layout.facets else 1
    frows = math.ceil(n_facets / fcols)

    title_h = TITLE_H if spec.title else 0.0
    if spec.legend == "discrete":
        entries = sorted((scale.discrete_map or {}).items()) if scale else []
        legend_h = len(entries) * LEGEND_ROW_H + 8.0
    elif spec.legend == "gradient-bar":
        legend_h = LEGEND_BAR_H + 26.0
    else:
        legend_h = 0.0

    width = 2 * MARGIN + fcols * facet_w + (fcols - 1) * FACET_GAP
    height = 2 * MARGIN + title_h + frows * facet_h + (frows - 1) * FACET_GAP + legend_h

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    out.append(f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="{spec.background}"/>')
    if spec.title:
        out.append(
            f'<text x="{_fmt(width / 2)}" y="{_fmt(MARGIN + 14)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{escape(spec.title)}</text>'
        )

    transforms = {
        (panel.hemi, panel.view): _panel_transform(_panel_shapes(atlas, panel), pw, ph)
        for panel in layout.panels
    }

    stroke = _stroke_attrs(spec)
    for fi, group in enumerate(facets):
        frow, fcol = divmod(fi, fcols)
        fx = MARGIN + fcol * (facet_w + FACET_GAP)
        fy = MARGIN + title_h + frow * (facet_h + FACET_GAP)
        if layout.facets:
            out.append(
                f'<text x="{_fmt(fx + facet_w / 2)}" y="{_fmt(fy + 15)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="13">{escape(group)}</text>'
            )
        facet_fills = per_facet[fi]
        for panel in layout.panels:
            px = fx + panel.col * (pw + PANEL_GAP)
            py = fy + facet_title_h + panel.row * (ph + PANEL_GAP)
            out.append(f'<g transform="translate({_fmt(px)},{_fmt(py)})">')
            shapes = _panel_shapes(atlas, panel)
            to_panel = transforms[(panel.hemi, panel.view)]
            for lead, holes in _group_paths(shapes):
                ref = lead.ref
                if ref not in facet_fills:
                    raise SegvizError(
                        f"fills missing region {ref.label!r} ({ref.hemi})"
                    )
                d = _path_d([lead.ring] + [h.ring for h in holes], to_panel)
                out.append(
                    f'<path d="{d}" fill-rule="evenodd"{_fill_attrs(facet_fills[ref])}{stroke}/>'
                )
            out.append("</g>")

    if spec.legend != "none":
        if scale is None:
            raise SegvizError("legend rendering requires a color scale")
        legend_y = height - legend_h - MARGIN / 2
        out.extend(_legend_elements(spec.legend, scale, MARGIN, legend_y))

    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def _legend_elements(kind: str, scale: ColorScale, x: float, y: float) -> list[str]:
    parts: list[str] = []
    if kind == "discrete":
        if scale.mode != "discrete":
            raise SegvizError("discrete legend requires a discrete scale")
        for i, (area, color) in enumerate(sorted(scale.discrete_map.items())):
            row_y = y + i * LEGEND_ROW_H
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(row_y)}" width="{_fmt(SWATCH)}" '
                f'height="{_fmt(SWATCH)}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{_fmt(x + SWATCH + 6)}" y="{_fmt(row_y + SWATCH - 2)}" '
                f'font-family="sans-serif" font-size="11">{escape(area)}</text>'
            )
        return parts
    if scale.mode != "gradient":
        raise SegvizError("gradient-bar legend requires a gradient scale")
    lo = scale.stops[0][0]
    hi = scale.stops[-1][0]
    step = LEGEND_BAR_W / 256.0
    for k in range(256):
        value = lo + (hi - lo) * k / 255.0
        r, g, b, _ = map_value(scale, value)
        parts.append(
            f'<rect x="{_fmt(x + k * step)}" y="{_fmt(y)}" width="{_fmt(step + 0.05)}" '
            f'height="{_fmt(LEGEND_BAR_H)}" fill="#{r:02X}{g:02X}{b:02X}"/>'
        )
    label_y = y + LEGEND_BAR_H + 14
    parts.append(
        f'<text x="{_fmt(x)}" y="{_fmt(label_y)}" font-family="sans-serif" '
        f'font-size="11">{_trim_number(lo)}</text>'
    )
    parts.append(
        f'<text x="{_fmt(x + LEGEND_BAR_W)}" y="{_fmt(label_y)}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{_trim_number(hi)}</text>'
    )
    return parts


def _trim_number(value: float) -> str:
    as_int = int(value)
    return str(as_int) if value == as_int else repr(float(value))
