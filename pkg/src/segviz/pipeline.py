"""Automation for deriving 2D polygon atlases from annotated 3D surfaces:
label-image rendering, contour tracing, ring simplification, and assembly.

Contours follow pixel boundaries (vertices on the pixel-corner lattice,
y up), so a traced ring encloses exactly the pixels of its 4-connected
component; diagonal saddle configurations stay disconnected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atlas import (
    MeshRegion,
    PolygonAtlas,
    RegionShape,
    SurfaceSet,
    signed_area,
    validate_polygon_atlas,
)
from .errors import SegvizError
from .render3d import Camera, camera_preset, mesh_bounds, project_points, _triangle_coverage

Ring = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LabelRaster:
    """Per-pixel region ids; ``cells[y, x]`` with y increasing upward, 0 = background."""

    width: int
    height: int
    cells: np.ndarray
    legend: tuple[str, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SegvizError("raster dimensions must be >= 1")

    def mask(self, region_id: int) -> np.ndarray:
        return self.cells == region_id


def render_label_raster(
    regions: list[MeshRegion],
    camera: str | Camera,
    width: int,
    height: int,
) -> LabelRaster:
    """Z-buffer the region meshes writing region ids (1-based, list order).

    No lighting, no translucency: the nearest face at each pixel center
    decides the id.
    """
    if isinstance(camera, str):
        camera = camera_preset(camera, mesh_bounds([r.mesh for r in regions]))
    cells = np.zeros((height, width), dtype=np.int32)
    zbuf = np.full((height, width), np.inf)
    for region_id, region in enumerate(regions, start=1):
        if len(region.mesh.vertices) == 0:
            continue
        screen = project_points(region.mesh.vertices, camera, width, height)
        for face in region.mesh.faces:
            cover = _triangle_coverage(
                screen[face[0]], screen[face[1]], screen[face[2]], width, height
            )
            if cover is None:
                continue
            rows, cols, depth = cover
            closer = depth < zbuf[rows, cols]
            rows, cols, depth = rows[closer], cols[closer], depth[closer]
            zbuf[rows, cols] = depth
            cells[rows, cols] = region_id
    return LabelRaster(width, height, np.flipud(cells), tuple(r.label for r in regions))


# --- contour tracing ----------------------------------------------------------

_LEFT_TURN = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}


def _boundary_edges(mask: np.ndarray) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Directed pixel-boundary edges with the inside on the left."""
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    inside = padded[1:-1, 1:-1]
    below = padded[:-2, 1:-1]
    above = padded[2:, 1:-1]
    left = padded[1:-1, :-2]
    right = padded[1:-1, 2:]

    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(start: tuple[int, int], end: tuple[int, int]) -> None:
        edges.setdefault(start, []).append(end)

    for y, x in zip(*np.nonzero(inside & ~below)):
        add((int(x), int(y)), (int(x) + 1, int(y)))
    for y, x in zip(*np.nonzero(inside & ~above)):
        add((int(x) + 1, int(y) + 1), (int(x), int(y) + 1))
    for y, x in zip(*np.nonzero(inside & ~left)):
        add((int(x), int(y) + 1), (int(x), int(y)))
    for y, x in zip(*np.nonzero(inside & ~right)):
        add((int(x) + 1, int(y)), (int(x) + 1, int(y) + 1))
    return edges


def _walk_rings(edges: dict[tuple[int, int], list[tuple[int, int]]]) -> list[list[tuple[int, int]]]:
    for outs in edges.values():
        outs.sort()
    used: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    order = sorted(edges)
    rings: list[list[tuple[int, int]]] = []
    for start in order:
        for first_end in edges[start]:
            first = (start, first_end)
            if first in used:
                continue
            ring: list[tuple[int, int]] = []
            edge = first
            while True:
                a, b = edge
                ring.append(a)
                used.add(edge)
                incoming = (b[0] - a[0], b[1] - a[1])
                candidates = edges.get(b, [])
                if len(candidates) == 1:
                    nxt = (b, candidates[0])
                else:
                    # saddle point: take the left turn to keep 4-connected
                    # components on separate rings
                    turn = _LEFT_TURN[incoming]
                    target = (b[0] + turn[0], b[1] + turn[1])
                    nxt = (b, target if target in candidates else candidates[0])
                if nxt == first:
                    break
                edge = nxt
            rings.append(_drop_collinear(ring))
    return rings


def _drop_collinear(ring: list[tuple[int, int]]) -> list[tuple[int, int]]:
    n = len(ring)
    kept = []
    for i, point in enumerate(ring):
        prev = ring[i - 1]
        nxt = ring[(i + 1) % n]
        cross = (point[0] - prev[0]) * (nxt[1] - point[1]) - (point[1] - prev[1]) * (
            nxt[0] - point[0]
        )
        if cross != 0:
            kept.append(point)
    return kept


def trace_region_contours(raster: LabelRaster, region_id: int) -> list[tuple[Ring, str]]:
    """Extract boundary rings of one region id from a label raster.

    Returns (ring, role) pairs: one counter-clockwise outer ring per
    4-connected component plus clockwise hole rings, vertices in pixel
    units on the corner lattice (y up).  Absent ids yield an empty list.
    """
    mask = raster.mask(region_id)
    if not mask.any():
        return []
    rings = _walk_rings(_boundary_edges(mask))
    result: list[tuple[Ring, str]] = []
    for points in rings:
        ring = tuple((float(x), float(y)) for x, y in points)
        role = "outer" if signed_area(ring) > 0 else "hole"
        result.append((ring, role))
    return result


# --- simplification -----------------------------------------------------------


def _perp_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    norm = math.hypot(ab[0], ab[1])
    if norm == 0.0:
        return np.hypot(points[:, 0] - a[0], points[:, 1] - a[1])
    cross = ab[0] * (points[:, 1] - a[1]) - ab[1] * (points[:, 0] - a[0])
    return np.abs(cross) / norm


def _dp_open(points: np.ndarray, epsilon: float) -> list[int]:
    """Douglas-Peucker on an open polyline; returns kept indices."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        interior = points[i + 1 : j]
        dist = _perp_distances(interior, points[i], points[j])
        k = int(np.argmax(dist))
        if dist[k] > epsilon:
            split = i + 1 + k
            keep[split] = True
            stack.append((i, split))
            stack.append((split, j))
    return [int(i) for i in np.flatnonzero(keep)]


def simplify_ring(ring: Ring, epsilon: float = 1.0) -> Ring:
    """Closed-curve Douglas-Peucker simplification.

    The ring is anchored at its two mutually farthest vertices and each arc
    is simplified with perpendicular-distance threshold ``epsilon``;
    orientation is preserved and the result keeps at least 3 vertices.
    """
    if len(ring) < 3:
        raise SegvizError("ring must have at least 3 vertices")
    if epsilon < 0:
        raise SegvizError("epsilon must be >= 0")
    points = np.asarray(ring, dtype=np.float64)
    n = len(points)
    diffs = points[:, None, :] - points[None, :, :]
    dist2 = (diffs**2).sum(axis=2)
    i0, i1 = np.unravel_index(int(np.argmax(dist2)), dist2.shape)
    if i0 > i1:
        i0, i1 = i1, i0

    arc1 = points[i0 : i1 + 1]
    arc2 = np.concatenate([points[i1:], points[: i0 + 1]])
    kept1 = [i0 + k for k in _dp_open(arc1, epsilon)]
    kept2 = [(i1 + k) % n for k in _dp_open(arc2, epsilon)]
    indices = kept1[:-1] + kept2[:-1]

    if len(indices) < 3:
        # both arcs collapsed; re-add the point farthest from the anchor line
        anchors = points[[i0, i1]]
        others = [i for i in range(n) if i not in (i0, i1)]
        dist = _perp_distances(points[others], anchors[0], anchors[1])
        extra = others[int(np.argmax(dist))]
        indices = sorted({i0, i1, extra})
        start = indices.index(i0)
        indices = indices[start:] + indices[:start]
    return tuple((float(points[i][0]), float(points[i][1])) for i in indices)


# --- atlas assembly -----------------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    atlas: PolygonAtlas
    invisible: tuple[tuple[str, str, str], ...]  # (hemi, view, label) with no pixels


def build_polygon_atlas(
    surface_sets: list[SurfaceSet],
    *,
    name: str = "traced",
    size: int = 512,
    epsilon: float = 1.0,
    views: tuple[str, ...] = ("lateral", "medial"),
) -> PipelineResult:
    """Trace a 2D polygon atlas from annotated surface geometry.

    For each hemisphere and view the regions are z-buffered into a label
    raster from the matching camera preset, traced, simplified, and
    normalized to the unit panel box.  Regions invisible in a view are
    reported, not fatal.
    """
    shapes: list[RegionShape] = []
    invisible: list[tuple[str, str, str]] = []
    for surface_set in surface_sets:
        for view in views:
            preset = f"{surface_set.hemi} {view}"
            raster = render_label_raster(list(surface_set.regions), preset, size, size)
            for region_id, region in enumerate(surface_set.regions, start=1):
                rings = trace_region_contours(raster, region_id)
                if not rings:
                    invisible.append((surface_set.hemi, view, region.label))
                    continue
                ordered = [rr for rr in rings if rr[1] == "outer"] + [
                    rr for rr in rings if rr[1] == "hole"
                ]
                for piece, (ring, role) in enumerate(ordered):
                    simplified = simplify_ring(ring, epsilon)
                    normalized = tuple(
                        (x / raster.width, y / raster.height) for x, y in simplified
                    )
                    shapes.append(
                        RegionShape(
                            label=region.label,
                            area=region.area,
                            hemi=surface_set.hemi,
                            view=view,
                            piece=piece,
                            color=region.color,
                            ring=normalized,
                            ring_role=role,
                        )
                    )
    atlas = validate_polygon_atlas(
        PolygonAtlas(name=name, kind="cortical", regions=tuple(shapes))
    )
    return PipelineResult(atlas, tuple(invisible))


def rasterize_rings(rings: list[Ring], width: int, height: int) -> np.ndarray:
    """Even-odd fill of rings sampled at pixel centers; y up, pixel units.

    Used to measure how faithfully traced-and-simplified polygons
    reproduce their source label raster.
    """
    diff = np.zeros((height, width + 1), dtype=np.int64)
    centers_y = np.arange(height) + 0.5
    for ring in rings:
        n = len(ring)
        for i in range(n):
            x0, y0 = ring[i]
            x1, y1 = ring[(i + 1) % n]
            if y0 == y1:
                continue
            lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
            sel = (centers_y >= lo) & (centers_y < hi)
            if not sel.any():
                continue
            t = (centers_y[sel] - y0) / (y1 - y0)
            xi = x0 + t * (x1 - x0)
            k = np.clip(np.ceil(xi - 0.5).astype(np.int64), 0, width)
            rows = np.flatnonzero(sel)
            np.add.at(diff, (rows, np.zeros_like(k)), 1)
            np.subtract.at(diff, (rows, k), 1)
    counts = np.cumsum(diff[:, :-1], axis=1)
    return counts % 2 == 1
