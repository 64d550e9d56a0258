"""Atlas domain model: polygon atlases, mesh atlases, validation, and the
canonical JSON document formats ``gatlas-poly/1`` and ``gatlas-mesh/1``.

Atlas values are immutable after validation and safe to share across
concurrent renders.  Serialization is canonical: sorted keys, shortest
round-trip float formatting, no whitespace, so equal atlases always produce
identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .colors import normalize_hex
from .errors import FormatError, ValidationError

POLY_FORMAT = "gatlas-poly/1"
MESH_FORMAT = "gatlas-mesh/1"

KINDS = ("cortical", "subcortical")
HEMIS = ("left", "right", "midline")
CORTICAL_VIEWS = ("lateral", "medial")
SUBCORTICAL_VIEWS = ("axial", "sagittal", "coronal")

#: Surfaces a cortical mesh atlas must carry for each hemisphere.  The
#: semi-inflated surface is the white surface smoothed for 10 iterations.
CORTICAL_SURFACES = ("white", "semi_inflated", "inflated")
MESH_HEMIS = ("left", "right", "subcort")


def views_for_kind(kind: str) -> tuple[str, ...]:
    return CORTICAL_VIEWS if kind == "cortical" else SUBCORTICAL_VIEWS


def signed_area(ring: Sequence[tuple[float, float]]) -> float:
    """Shoelace signed area of an implicitly closed ring (y up: CCW > 0)."""
    total = 0.0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


@dataclass(frozen=True)
class RegionRef:
    """Identity of one anatomical region: the join/fill key used throughout."""

    label: str
    area: str
    hemi: str


@dataclass(frozen=True)
class RegionShape:
    """One ring of one region in one panel (hemisphere + view)."""

    label: str
    area: str
    hemi: str
    view: str
    piece: int
    color: str
    ring: tuple[tuple[float, float], ...]
    ring_role: str = "outer"

    @property
    def ref(self) -> RegionRef:
        return RegionRef(self.label, self.area, self.hemi)


@dataclass(frozen=True)
class PolygonAtlas:
    name: str
    kind: str
    regions: tuple[RegionShape, ...]

    def region_refs(self) -> list[RegionRef]:
        """Distinct regions in first-appearance order."""
        seen: dict[RegionRef, None] = {}
        for shape in self.regions:
            seen.setdefault(shape.ref, None)
        return list(seen)


class TriMesh:
    """Triangle mesh: N x 3 vertex coordinates plus M x 3 vertex indices.

    Coordinates are arbitrary Cartesian plot units, not a radiological
    coordinate system.
    """

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f

    def __eq__(self, other):
        if not isinstance(other, TriMesh):
            return NotImplemented
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.faces, other.faces
        )

    def __repr__(self):
        return f"TriMesh({len(self.vertices)} vertices, {len(self.faces)} faces)"

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            zero = np.zeros(3)
            return zero, zero
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(frozen=True)
class MeshRegion:
    label: str
    annot: str
    area: str
    color: str
    mesh: TriMesh


@dataclass(frozen=True)
class SurfaceSet:
    surface: str
    hemi: str
    regions: tuple[MeshRegion, ...]


@dataclass(frozen=True)
class MeshAtlas:
    name: str
    kind: str
    surfaces: tuple[SurfaceSet, ...]

    def surface_sets(self, surface: str, hemisphere: str | None = None) -> list[SurfaceSet]:
        sets = [s for s in self.surfaces if s.surface == surface]
        if hemisphere is not None:
            sets = [s for s in sets if s.hemi == hemisphere]
        return sets

    def region_refs(self, surface: str, hemisphere: str | None = None) -> list[RegionRef]:
        return [
            RegionRef(r.label, r.area, s.hemi)
            for s in self.surface_sets(surface, hemisphere)
            for r in s.regions
        ]


def _require(candidate: dict, key: str, context: str):
    if key not in candidate:
        raise ValidationError(f"{context}: missing field {key!r}")
    return candidate[key]


def _check_enum(value, allowed: Iterable[str], what: str, context: str) -> str:
    if value not in tuple(allowed):
        raise ValidationError(f"{context}: {what} {value!r} invalid (expected one of {', '.join(allowed)})")
    return value


def _clean_ring(raw, context: str) -> tuple[tuple[float, float], ...]:
    points: list[tuple[float, float]] = []
    for pt in raw:
        if len(pt) != 2:
            raise ValidationError(f"{context}: ring vertex must be an [x, y] pair")
        x, y = float(pt[0]), float(pt[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"{context}: ring coordinates must be finite")
        if points and points[-1] == (x, y):
            continue  # coincident consecutive vertices
        points.append((x, y))
    if len(points) > 1 and points[0] == points[-1]:
        points.pop()  # rings are stored open; closure is implicit
    if len(points) < 3:
        raise ValidationError(f"{context}: ring has fewer than 3 distinct vertices")
    return tuple(points)


def validate_polygon_atlas(candidate: dict | PolygonAtlas) -> PolygonAtlas:
    """Validate a raw polygon atlas document (or re-validate an atlas).

    Rings with the wrong orientation for their role are reoriented rather
    than rejected; everything else that breaks an invariant is an error.
    """
    if isinstance(candidate, PolygonAtlas):
        candidate = polygon_atlas_document(candidate)
    if not isinstance(candidate, dict):
        raise ValidationError("polygon atlas document must be an object")
    fmt = candidate.get("format", POLY_FORMAT)
    if fmt != POLY_FORMAT:
        raise ValidationError(f"expected format {POLY_FORMAT!r}, got {fmt!r}")
    name = str(_require(candidate, "name", "atlas"))
    if not name:
        raise ValidationError("atlas: name must be nonempty")
    kind = _check_enum(_require(candidate, "kind", "atlas"), KINDS, "kind", "atlas")
    views = views_for_kind(kind)

    regions: list[RegionShape] = []
    seen: set[tuple[str, str, str, int]] = set()
    for i, raw in enumerate(candidate.get("regions", [])):
        context = f"region {i}"
        label = str(_require(raw, "label", context))
        context = f"region {i} ({label})"
        area = str(raw.get("area", label))
        hemi = _check_enum(_require(raw, "hemi", context), HEMIS, "hemi", context)
        view = _check_enum(_require(raw, "view", context), views, "view", context)
        piece = int(raw.get("piece", 0))
        if piece < 0:
            raise ValidationError(f"{context}: piece must be non-negative")
        color = normalize_hex(str(_require(raw, "color", context)))
        role = _check_enum(raw.get("ring_role", "outer"), ("outer", "hole"), "ring_role", context)
        ring = _clean_ring(_require(raw, "ring", context), context)

        key = (label, hemi, view, piece)
        if key in seen:
            raise ValidationError(f"{context}: duplicate (label, hemi, view, piece) tuple {key}")
        seen.add(key)

        area2 = signed_area(ring)
        if area2 == 0.0:
            raise ValidationError(f"{context}: ring has zero area")
        wants_ccw = role == "outer"
        if (area2 > 0) != wants_ccw:
            ring = (ring[0],) + tuple(reversed(ring[1:]))
        regions.append(RegionShape(label, area, hemi, view, piece, color, ring, role))
    return PolygonAtlas(name=name, kind=kind, regions=tuple(regions))


def _validate_trimesh(raw: dict, context: str) -> TriMesh:
    vertices = np.asarray(_require(raw, "vertices", context), dtype=np.float64)
    faces_raw = _require(raw, "faces", context)
    faces = np.asarray(faces_raw, dtype=np.int64)
    if vertices.size == 0:
        vertices = vertices.reshape(0, 3)
    if faces.size == 0:
        faces = faces.reshape(0, 3)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise ValidationError(f"{context}: vertices must be an N x 3 array")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise ValidationError(f"{context}: faces must be an M x 3 array")
    if not np.all(np.isfinite(vertices)):
        raise ValidationError(f"{context}: vertex coordinates must be finite")
    n = len(vertices)
    if faces.size and (faces.min() < 0 or faces.max() >= n):
        raise ValidationError(f"{context}: face index out of range (vertex count {n})")
    if faces.size:
        degenerate = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        )
        if degenerate.any():
            raise ValidationError(f"{context}: degenerate face (repeated vertex index)")
    return TriMesh(vertices, faces)


def validate_mesh_atlas(candidate: dict | MeshAtlas) -> MeshAtlas:
    """Validate a raw mesh atlas document (or re-validate an atlas)."""
    if isinstance(candidate, MeshAtlas):
        candidate = mesh_atlas_document(candidate)
    if not isinstance(candidate, dict):
        raise ValidationError("mesh atlas document must be an object")
    fmt = candidate.get("format", MESH_FORMAT)
    if fmt != MESH_FORMAT:
        raise ValidationError(f"expected format {MESH_FORMAT!r}, got {fmt!r}")
    name = str(_require(candidate, "name", "atlas"))
    if not name:
        raise ValidationError("atlas: name must be nonempty")
    kind = _check_enum(_require(candidate, "kind", "atlas"), KINDS, "kind", "atlas")

    sets: list[SurfaceSet] = []
    seen: set[tuple[str, str]] = set()
    for i, raw_set in enumerate(candidate.get("surfaces", [])):
        context = f"surface set {i}"
        surface = _check_enum(
            _require(raw_set, "surface", context),
            CORTICAL_SURFACES + ("subcortical",),
            "surface",
            context,
        )
        hemi = _check_enum(_require(raw_set, "hemi", context), MESH_HEMIS, "hemi", context)
        key = (surface, hemi)
        if key in seen:
            raise ValidationError(f"{context}: duplicate (surface, hemi) pair {key}")
        seen.add(key)

        regions: list[MeshRegion] = []
        labels: set[str] = set()
        for j, raw_region in enumerate(raw_set.get("regions", [])):
            rcontext = f"{surface}/{hemi} region {j}"
            label = str(_require(raw_region, "label", rcontext))
            rcontext = f"{surface}/{hemi} region {label!r}"
            if label in labels:
                raise ValidationError(f"{rcontext}: duplicate label within surface set")
            labels.add(label)
            annot = str(raw_region.get("annot", label))
            area = str(raw_region.get("area", label))
            color = normalize_hex(str(_require(raw_region, "color", rcontext)))
            mesh = _validate_trimesh(_require(raw_region, "mesh", rcontext), rcontext)
            regions.append(MeshRegion(label, annot, area, color, mesh))
        sets.append(SurfaceSet(surface, hemi, tuple(regions)))

    pairs = {(s.surface, s.hemi) for s in sets}
    if kind == "cortical":
        wanted = {(s, h) for s in CORTICAL_SURFACES for h in ("left", "right")}
        missing = wanted - pairs
        extra = pairs - wanted
        if missing:
            raise ValidationError(
                "cortical atlas missing required surface sets: "
                + ", ".join(f"{s}/{h}" for s, h in sorted(missing))
            )
        if extra:
            raise ValidationError(
                "cortical atlas carries unexpected surface sets: "
                + ", ".join(f"{s}/{h}" for s, h in sorted(extra))
            )
    else:
        if pairs != {("subcortical", "subcort")}:
            raise ValidationError(
                "subcortical atlas must carry exactly one surface set subcortical/subcort"
            )
    return MeshAtlas(name=name, kind=kind, surfaces=tuple(sets))


def polygon_atlas_document(atlas: PolygonAtlas) -> dict[str, Any]:
    return {
        "format": POLY_FORMAT,
        "name": atlas.name,
        "kind": atlas.kind,
        "regions": [
            {
                "label": r.label,
                "area": r.area,
                "hemi": r.hemi,
                "view": r.view,
                "piece": r.piece,
                "color": r.color,
                "ring_role": r.ring_role,
                "ring": [[float(x), float(y)] for x, y in r.ring],
            }
            for r in atlas.regions
        ],
    }


def mesh_atlas_document(atlas: MeshAtlas) -> dict[str, Any]:
    return {
        "format": MESH_FORMAT,
        "name": atlas.name,
        "kind": atlas.kind,
        "surfaces": [
            {
                "surface": s.surface,
                "hemi": s.hemi,
                "regions": [
                    {
                        "label": r.label,
                        "annot": r.annot,
                        "area": r.area,
                        "color": r.color,
                        "mesh": {
                            "vertices": [[float(c) for c in v] for v in r.mesh.vertices],
                            "faces": [[int(c) for c in f] for f in r.mesh.faces],
                        },
                    }
                    for r in s.regions
                ],
            }
            for s in atlas.surfaces
        ],
    }


def serialize_atlas(atlas: PolygonAtlas | MeshAtlas) -> bytes:
    """Canonical UTF-8 JSON bytes for an atlas; deterministic per atlas."""
    if isinstance(atlas, PolygonAtlas):
        doc = polygon_atlas_document(atlas)
    elif isinstance(atlas, MeshAtlas):
        doc = mesh_atlas_document(atlas)
    else:
        raise TypeError(f"not an atlas: {type(atlas).__name__}")
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parse_atlas(data: bytes) -> PolygonAtlas | MeshAtlas:
    """Parse and validate an atlas document, dispatching on its format tag.

    Syntax errors report the decoder offset (equals the byte offset for
    ASCII documents).
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"atlas document is not valid UTF-8 at byte {e.start}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"syntax error at offset {e.pos}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError("atlas document must be a JSON object")
    fmt = doc.get("format")
    if fmt == POLY_FORMAT:
        return validate_polygon_atlas(doc)
    if fmt == MESH_FORMAT:
        return validate_mesh_atlas(doc)
    raise FormatError(f"unknown format tag {fmt!r}")
