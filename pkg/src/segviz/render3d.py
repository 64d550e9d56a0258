"""Scene assembly, camera presets, software rasterization, and the
``gscene/1`` export format consumed by the interactive viewer.

Rendering is orthographic with a z-buffer for opaque geometry and a
back-to-front painter's pass for translucent geometry.  All constants
(headlight shading, ambient 0.25, preset eye distance 2.5x the half
diagonal) are fixed so identical scenes produce identical pixels.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .atlas import MeshAtlas, RegionRef, TriMesh
from .colors import RGBA, normalize_hex, parse_rgba_hex, rgba_hex, round_half_up
from .errors import FormatError, SegvizError
from .meshops import GlassBrain

SCENE_FORMAT = "gscene/1"

AMBIENT = 0.25
EYE_DISTANCE_FACTOR = 2.5

#: Unit view direction and up vector per named preset.
CAMERA_PRESETS: dict[str, tuple[tuple[float, float, float], tuple[float, float, float]]] = {
    "left lateral": ((-1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "right lateral": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "left medial": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "right medial": ((-1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "anterior": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    "posterior": ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0)),
    "superior": ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    "inferior": ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),
}

AXIS_COLORS = ((255, 0, 0), (0, 255, 0), (0, 0, 255))  # x, y, z lines


@dataclass(frozen=True)
class Camera:
    """Orthographic camera; ``scale`` is the viewport half-height in world units."""

    eye: tuple[float, float, float]
    center: tuple[float, float, float]
    up: tuple[float, float, float]
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "eye", tuple(float(c) for c in self.eye))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "up", tuple(float(c) for c in self.up))
        object.__setattr__(self, "scale", float(self.scale))
        if self.eye == self.center:
            raise SegvizError("degenerate camera: eye equals center")
        forward = np.subtract(self.center, self.eye)
        if np.linalg.norm(np.cross(forward, self.up)) == 0.0:
            raise SegvizError("degenerate camera: up parallel to view direction")
        if not self.scale > 0:
            raise SegvizError("camera scale must be positive")


@dataclass(frozen=True)
class SceneItem:
    label: str
    hover: tuple[str, ...]
    color: RGBA
    opacity: float
    mesh: TriMesh


@dataclass(frozen=True)
class Scene:
    items: tuple[SceneItem, ...]
    camera: Camera
    show_axes: bool = True
    background: str = "#FFFFFF"

    def __post_init__(self):
        object.__setattr__(self, "background", normalize_hex(self.background))
        labels = [item.label for item in self.items]
        if len(set(labels)) != len(labels):
            raise SegvizError("scene item labels must be unique")
        for item in self.items:
            if not 0.0 <= item.opacity <= 1.0:
                raise SegvizError(f"item {item.label!r}: opacity outside [0, 1]")


def mesh_bounds(meshes: list[TriMesh]) -> tuple[np.ndarray, np.ndarray]:
    """Joint bounding box; empty geometry falls back to the unit cube."""
    populated = [m for m in meshes if len(m.vertices)]
    if not populated:
        return np.full(3, -0.5), np.full(3, 0.5)
    lo = np.min([m.vertices.min(axis=0) for m in populated], axis=0)
    hi = np.max([m.vertices.max(axis=0) for m in populated], axis=0)
    return lo, hi


def scene_bounds(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    return mesh_bounds([item.mesh for item in scene.items])


def camera_preset(name: str, bounds: tuple[np.ndarray, np.ndarray]) -> Camera:
    """Named axis-aligned camera for the given scene bounding box.

    The eye sits at 2.5 half-diagonals from the box center along the
    preset direction; the orthographic scale equals the half diagonal so
    the whole box fits the viewport.
    """
    if name not in CAMERA_PRESETS:
        raise SegvizError(
            f"unknown preset {name!r} (expected one of {', '.join(CAMERA_PRESETS)})"
        )
    direction, up = CAMERA_PRESETS[name]
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    center = (lo + hi) / 2.0
    half_diagonal = float(np.linalg.norm(hi - lo)) / 2.0
    if half_diagonal == 0.0:
        half_diagonal = 1.0
    eye = center + EYE_DISTANCE_FACTOR * half_diagonal * np.asarray(direction)
    return Camera(tuple(eye), tuple(center), up, half_diagonal)


def _format_value(value: float) -> str:
    as_int = int(value)
    return str(as_int) if value == as_int else repr(float(value))


def build_scene(
    atlas: MeshAtlas,
    surface: str,
    *,
    hemisphere: str | None = None,
    fills: dict[RegionRef, RGBA],
    records: dict[RegionRef, dict] | None = None,
    value_column: str | None = None,
    hover_column: str | None = None,
    na_alpha: float = 1.0,
    glass: GlassBrain | None = None,
    camera: Camera | str | None = None,
    background: str = "#FFFFFF",
    show_axes: bool = True,
) -> Scene:
    """Assemble a renderable scene from a mesh atlas and resolved fills.

    One item per region of the selected surface.  Regions whose
    ``value_column`` record is missing count as NA and take ``na_alpha``;
    glass-brain meshes are appended last with their own opacity.  ``camera``
    may be a preset name (resolved against the item bounds) or a Camera;
    the default is the left lateral preset.
    """
    sets = atlas.surface_sets(surface, hemisphere)
    if not sets:
        raise SegvizError(f"surface {surface!r} (hemisphere {hemisphere!r}) not in atlas")
    items: list[SceneItem] = []
    for surface_set in sets:
        for region in surface_set.regions:
            ref = RegionRef(region.label, region.area, surface_set.hemi)
            if ref not in fills:
                raise SegvizError(f"fills missing region {region.label!r} ({surface_set.hemi})")
            color = fills[ref]
            record = (records or {}).get(ref, {})
            is_na = (
                records is not None
                and value_column is not None
                and record.get(value_column) is None
            )
            if is_na:
                color = (color[0], color[1], color[2], round_half_up(na_alpha * 255))
                opacity = na_alpha
            else:
                opacity = color[3] / 255.0
            hover = [region.area]
            if hover_column is not None and record.get(hover_column) is not None:
                hover.append(f"{hover_column}: {_format_value(record[hover_column])}")
            items.append(
                SceneItem(
                    label=f"{surface_set.hemi}:{region.label}",
                    hover=tuple(hover),
                    color=color,
                    opacity=opacity,
                    mesh=region.mesh,
                )
            )
    if glass is not None:
        from .colors import hex_to_rgb

        rgb = hex_to_rgb(glass.color)
        for hemi, mesh in glass.meshes:
            items.append(
                SceneItem(
                    label=f"glass:{hemi}",
                    hover=(f"glass {hemi}",),
                    color=(*rgb, round_half_up(glass.opacity * 255)),
                    opacity=glass.opacity,
                    mesh=mesh,
                )
            )
    if camera is None:
        camera = "left lateral"
    if isinstance(camera, str):
        camera = camera_preset(camera, mesh_bounds([i.mesh for i in items]))
    return Scene(tuple(items), camera, show_axes=show_axes, background=background)


# --- rasterization -----------------------------------------------------------


def _camera_frame(camera: Camera) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    eye = np.asarray(camera.eye)
    forward = np.asarray(camera.center) - eye
    norm = np.linalg.norm(forward)
    if norm == 0.0:
        raise SegvizError("degenerate camera: eye equals center")
    f = forward / norm
    right = np.cross(f, np.asarray(camera.up))
    norm = np.linalg.norm(right)
    if norm == 0.0:
        raise SegvizError("degenerate camera: up parallel to view direction")
    right /= norm
    up = np.cross(right, f)
    return eye, f, right, up


def project_points(
    points: np.ndarray, camera: Camera, width: int, height: int
) -> np.ndarray:
    """World points to (screen x, screen y, view depth); y grows downward."""
    eye, f, right, up = _camera_frame(camera)
    d = points - eye
    x = d @ right
    y = d @ up
    z = d @ f
    half_h = camera.scale
    half_w = camera.scale * width / height
    sx = (x / half_w + 1.0) / 2.0 * width
    sy = (1.0 - y / half_h) / 2.0 * height
    return np.column_stack([sx, sy, z])


def _triangle_coverage(
    p0: np.ndarray, p1: np.ndarray, p2: np.ndarray, width: int, height: int
):
    """Pixel rows, columns, and interpolated depths covered by one triangle.

    Pixel centers sit at integer + 0.5; coverage is inclusive of edges
    (barycentric weights all on the triangle's side).
    """
    x0, y0, z0 = p0
    x1, y1, z1 = p1
    x2, y2, z2 = p2
    area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area == 0.0:
        return None
    ix0 = max(0, math.ceil(min(x0, x1, x2) - 0.5))
    ix1 = min(width - 1, math.floor(max(x0, x1, x2) - 0.5))
    iy0 = max(0, math.ceil(min(y0, y1, y2) - 0.5))
    iy1 = min(height - 1, math.floor(max(y0, y1, y2) - 0.5))
    if ix0 > ix1 or iy0 > iy1:
        return None
    px = np.arange(ix0, ix1 + 1) + 0.5
    py = np.arange(iy0, iy1 + 1) + 0.5
    gx, gy = np.meshgrid(px, py)
    w0 = (x2 - x1) * (gy - y1) - (y2 - y1) * (gx - x1)
    w1 = (x0 - x2) * (gy - y2) - (y0 - y2) * (gx - x2)
    w2 = (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0)
    if area > 0:
        mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    else:
        mask = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
    if not mask.any():
        return None
    rows, cols = np.nonzero(mask)
    depth = (w0[mask] * z0 + w1[mask] * z1 + w2[mask] * z2) / area
    return rows + iy0, cols + ix0, depth


def _shade(color: RGBA, normal: np.ndarray, light: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(normal)
    lambert = abs(float(normal @ light)) / norm if norm > 0 else 0.0
    intensity = AMBIENT + (1.0 - AMBIENT) * lambert
    return np.array(
        [round_half_up(color[0] * intensity),
         round_half_up(color[1] * intensity),
         round_half_up(color[2] * intensity)],
        dtype=np.float64,
    )


def rasterize_scene(scene: Scene, width: int, height: int) -> np.ndarray:
    """Render to an RGB uint8 image of shape (height, width, 3).

    Opaque items use a strictly-less z-buffer; translucent items are
    composited afterwards back to front by face centroid depth (painter's
    pass, tested against the opaque depth buffer).
    """
    if width < 1 or height < 1:
        raise SegvizError("image dimensions must be >= 1")
    from .colors import hex_to_rgb

    eye, f, right, up = _camera_frame(scene.camera)
    light = (np.asarray(scene.camera.eye) - np.asarray(scene.camera.center))
    light = light / np.linalg.norm(light)

    frame = np.empty((height, width, 3), dtype=np.float64)
    frame[:] = hex_to_rgb(scene.background)
    zbuf = np.full((height, width), np.inf)

    projected = [
        project_points(item.mesh.vertices, scene.camera, width, height)
        if len(item.mesh.vertices)
        else np.zeros((0, 3))
        for item in scene.items
    ]

    # Opaque pass: z-buffered, draw order breaks exact depth ties.
    for item, screen in zip(scene.items, projected):
        if item.opacity < 1.0:
            continue
        world = item.mesh.vertices
        for face in item.mesh.faces:
            cover = _triangle_coverage(
                screen[face[0]], screen[face[1]], screen[face[2]], width, height
            )
            if cover is None:
                continue
            rows, cols, depth = cover
            normal = np.cross(world[face[1]] - world[face[0]], world[face[2]] - world[face[0]])
            shaded = _shade(item.color, normal, light)
            closer = depth < zbuf[rows, cols]
            rows, cols, depth = rows[closer], cols[closer], depth[closer]
            zbuf[rows, cols] = depth
            frame[rows, cols] = shaded

    # Translucent pass: back-to-front painter's compositing.
    translucent: list[tuple[float, int, int]] = []  # (centroid depth, item idx, face idx)
    for idx, (item, screen) in enumerate(zip(scene.items, projected)):
        if item.opacity >= 1.0:
            continue
        for fidx, face in enumerate(item.mesh.faces):
            centroid = (screen[face[0], 2] + screen[face[1], 2] + screen[face[2], 2]) / 3.0
            translucent.append((float(centroid), idx, fidx))
    translucent.sort(key=lambda t: (-t[0], t[1], t[2]))
    for _, idx, fidx in translucent:
        item = scene.items[idx]
        if item.opacity <= 0.0:
            continue
        screen = projected[idx]
        face = item.mesh.faces[fidx]
        cover = _triangle_coverage(
            screen[face[0]], screen[face[1]], screen[face[2]], width, height
        )
        if cover is None:
            continue
        rows, cols, depth = cover
        visible = depth < zbuf[rows, cols]
        rows, cols = rows[visible], cols[visible]
        if len(rows) == 0:
            continue
        world = item.mesh.vertices
        normal = np.cross(world[face[1]] - world[face[0]], world[face[2]] - world[face[0]])
        shaded = _shade(item.color, normal, light)
        alpha = item.opacity
        frame[rows, cols] = shaded * alpha + frame[rows, cols] * (1.0 - alpha)

    if scene.show_axes:
        _draw_axes(frame, scene, width, height)
    return np.clip(np.floor(frame + 0.5), 0, 255).astype(np.uint8)


def _draw_axes(frame: np.ndarray, scene: Scene, width: int, height: int) -> None:
    lo, hi = scene_bounds(scene)
    center = (lo + hi) / 2.0
    length = float(np.linalg.norm(hi - lo)) / 2.0 or 1.0
    for axis in range(3):
        tip = center.copy()
        tip[axis] += length
        ends = project_points(np.vstack([center, tip]), scene.camera, width, height)
        _draw_line(frame, ends[0], ends[1], AXIS_COLORS[axis], width, height)


def _draw_line(frame, a, b, color, width, height) -> None:
    x0, y0 = int(round(a[0])), int(round(a[1]))
    x1, y1 = int(round(b[0])), int(round(b[1]))
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < width and 0 <= y0 < height:
            frame[y0, x0] = color
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def encode_png(image: np.ndarray) -> bytes:
    """Deterministic PNG bytes for an RGB uint8 image."""
    buffer = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


# --- gscene/1 export ---------------------------------------------------------


def scene_document(scene: Scene) -> dict:
    return {
        "format": SCENE_FORMAT,
        "background": scene.background,
        "show_axes": scene.show_axes,
        "camera": {
            "eye": list(scene.camera.eye),
            "center": list(scene.camera.center),
            "up": list(scene.camera.up),
            "scale": scene.camera.scale,
        },
        "items": [
            {
                "label": item.label,
                "hover": list(item.hover),
                "color": rgba_hex(item.color),
                "opacity": item.opacity,
                "mesh": {
                    "vertices": [[float(c) for c in v] for v in item.mesh.vertices],
                    "faces": [[int(c) for c in f] for f in item.mesh.faces],
                },
            }
            for item in scene.items
        ],
    }


def export_scene(scene: Scene) -> bytes:
    """Canonical UTF-8 JSON bytes in the gscene/1 format."""
    return json.dumps(scene_document(scene), sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )


def parse_scene(data: bytes) -> Scene:
    """Parse a gscene/1 document back into a structurally equal scene."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"gscene document is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != SCENE_FORMAT:
        raise FormatError(f"unknown format tag {doc.get('format')!r}" if isinstance(doc, dict) else "gscene document must be a JSON object")
    cam = doc["camera"]
    camera = Camera(tuple(cam["eye"]), tuple(cam["center"]), tuple(cam["up"]), cam["scale"])
    items = []
    for raw in doc.get("items", []):
        items.append(
            SceneItem(
                label=str(raw["label"]),
                hover=tuple(str(line) for line in raw.get("hover", [])),
                color=parse_rgba_hex(raw["color"]),
                opacity=float(raw["opacity"]),
                mesh=TriMesh(raw["mesh"]["vertices"], raw["mesh"]["faces"]),
            )
        )
    return Scene(
        tuple(items),
        camera,
        show_axes=bool(doc.get("show_axes", True)),
        background=str(doc.get("background", "#FFFFFF")),
    )
