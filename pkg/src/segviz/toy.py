"""Synthetic toy atlases and geometry generators.

The real parcellation datasets are licensed and not shipped; these
generators produce small, fully deterministic stand-ins with the same
structure so plots, joins, and pipelines can be exercised end to end.
"""

from __future__ import annotations

import colorsys
import math

import numpy as np

from .atlas import (
    MeshAtlas,
    MeshRegion,
    PolygonAtlas,
    RegionShape,
    SurfaceSet,
    TriMesh,
    validate_mesh_atlas,
    validate_polygon_atlas,
)
from .fsio import ColorTableEntry, RawAnnotation, RawSurface, pack_code
from .meshops import INFLATED_ITERATIONS, SEMI_INFLATED_ITERATIONS, inflate_mesh, split_by_annot
from .stats import StatTable

#: 17 + 17 display names; the first four left areas match the usual mock data.
LEFT_AREAS = (
    "transverse temporal", "insula", "pre central", "superior parietal",
    "superior temporal", "inferior temporal", "middle temporal",
    "superior frontal", "caudal middle frontal", "rostral middle frontal",
    "lateral occipital", "supramarginal", "postcentral", "paracentral",
    "precuneus", "lingual", "cuneus",
)
RIGHT_AREAS = (
    "fusiform", "entorhinal", "parahippocampal", "temporal pole",
    "frontal pole", "pars opercularis", "pars orbitalis", "pars triangularis",
    "lateral orbitofrontal", "medial orbitofrontal",
    "rostral anterior cingulate", "caudal anterior cingulate",
    "posterior cingulate", "isthmus cingulate", "pericalcarine",
    "inferior parietal", "banks superior temporal",
)

SUBCORTICAL_AREAS = (
    "thalamus", "caudate", "putamen", "pallidum",
    "hippocampus", "amygdala", "accumbens", "brain stem",
)


def _auto_color(index: int) -> str:
    """Deterministic distinct colors via a golden-angle hue walk."""
    hue = (index * 0.61803398875) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.85)
    return "#{:02X}{:02X}{:02X}".format(round(r * 255), round(g * 255), round(b * 255))


def _square(col: int, row: int) -> tuple[tuple[float, float], ...]:
    x, y = col * 1.0, row * 1.0
    return ((x, y), (x + 0.9, y), (x + 0.9, y + 0.9), (x, y + 0.9))


def toy_polygon_atlas(name: str = "toy_cortical") -> PolygonAtlas:
    """34-region cortical polygon atlas: 17 areas per hemisphere.

    Each area has one square piece in one view (lateral for the first nine
    per hemisphere, medial for the rest), laid out on a small grid.
    """
    shapes = []
    index = 0
    for hemi, areas in (("left", LEFT_AREAS), ("right", RIGHT_AREAS)):
        prefix = "lh_" if hemi == "left" else "rh_"
        for i, area in enumerate(areas):
            view = "lateral" if i < 9 else "medial"
            slot = i if i < 9 else i - 9
            shapes.append(
                RegionShape(
                    label=prefix + area.replace(" ", ""),
                    area=area,
                    hemi=hemi,
                    view=view,
                    piece=0,
                    color=_auto_color(index),
                    ring=_square(slot % 3, slot // 3),
                    ring_role="outer",
                )
            )
            index += 1
    return validate_polygon_atlas(PolygonAtlas(name, "cortical", tuple(shapes)))


def toy_subcortical_polygon_atlas(name: str = "toy_subcortical") -> PolygonAtlas:
    """Subcortical polygon atlas: 8 structures in axial and sagittal views."""
    shapes = []
    for i, area in enumerate(SUBCORTICAL_AREAS):
        hemi = "midline" if area == "brain stem" else "left"
        label = ("Brain-Stem" if area == "brain stem"
                 else "Left-" + area.title().replace(" ", ""))
        for view in ("axial", "sagittal"):
            shapes.append(
                RegionShape(
                    label=label,
                    area=area,
                    hemi=hemi,
                    view=view,
                    piece=0,
                    color=_auto_color(40 + i),
                    ring=_square(i % 4, i // 4),
                    ring_role="outer",
                )
            )
    return validate_polygon_atlas(PolygonAtlas(name, "subcortical", tuple(shapes)))


def icosphere(subdivisions: int = 0, radius: float = 1.0) -> TriMesh:
    """Unit icosahedron subdivided ``subdivisions`` times (12, 42, 162, 642
    ... vertices), projected onto a sphere of the given radius."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=np.float64) for v in vertices]

    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                points.append((points[a] + points[b]) / 2.0)
                cache[key] = len(points) - 1
            return cache[key]

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = next_faces

    array = np.array(points)
    array = array / np.linalg.norm(array, axis=1, keepdims=True) * radius
    return TriMesh(array, np.array(faces, dtype=np.int64))


def hemisphere_mesh(mesh: TriMesh, hemi: str) -> TriMesh:
    """Faces of a mesh whose centroid lies on one side of the x = 0 plane."""
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    keep = centroids[:, 0] < 0 if hemi == "left" else centroids[:, 0] >= 0
    faces = mesh.faces[keep]
    used, compact = np.unique(faces.ravel(), return_inverse=True)
    return TriMesh(mesh.vertices[used], compact.reshape(-1, 3))


def banded_annotation(surface: RawSurface, band_names: list[str]) -> RawAnnotation:
    """Label vertices into horizontal (z) bands, one structure per band."""
    z = surface.vertices[:, 2].astype(np.float64)
    lo, hi = float(z.min()), float(z.max())
    n = len(band_names)
    table = []
    for i, band in enumerate(band_names):
        r, g, b = (40 * (i + 1)) % 256, (90 * (i + 1)) % 256, (160 * (i + 1)) % 256
        if pack_code(r, g, b) == 0:
            r = 1
        table.append(ColorTableEntry(band, r, g, b, pack_code(r, g, b)))
    span = (hi - lo) or 1.0
    index = np.minimum(((z - lo) / span * n).astype(int), n - 1)
    labels = tuple((i, table[band].code) for i, band in enumerate(index))
    return RawAnnotation(labels, tuple(table))


def _surface_triple(base: TriMesh, semi_iterations: int) -> dict[str, TriMesh]:
    return {
        "white": base,
        "semi_inflated": inflate_mesh(base, semi_iterations),
        "inflated": inflate_mesh(base, INFLATED_ITERATIONS),
    }


def toy_mesh_atlas(
    name: str = "toy_cortical_3d",
    subdivisions: int = 2,
    bands: int = 2,
    semi_iterations: int = SEMI_INFLATED_ITERATIONS,
) -> MeshAtlas:
    """Cortical mesh atlas built from two icosphere hemispheres.

    Each hemisphere surface is labeled into z bands, smoothed into the
    white / semi-inflated / inflated triple, and split per band, mirroring
    how a converted atlas is assembled.
    """
    sphere = icosphere(subdivisions)
    band_names = [f"band{k}" for k in range(bands)]
    sets = []
    for hemi in ("left", "right"):
        prefix = "lh_" if hemi == "left" else "rh_"
        shell = hemisphere_mesh(sphere, hemi)
        annot = banded_annotation(RawSurface("", shell.vertices, shell.faces), [prefix + b for b in band_names])
        for surface_name, geometry in _surface_triple(shell, semi_iterations).items():
            raw = RawSurface("", geometry.vertices, geometry.faces)
            regions = split_by_annot(raw, annot)
            sets.append(SurfaceSet(surface_name, hemi, tuple(regions)))
    return validate_mesh_atlas(MeshAtlas(name, "cortical", tuple(sets)))


def toy_subcortical_mesh_atlas(name: str = "toy_subcortical_3d") -> MeshAtlas:
    """Subcortical mesh atlas: three small blobs on one surface set."""
    blob = icosphere(1, radius=0.4)
    offsets = {
        "Left-Thalamus": (-0.8, 0.0, 0.0),
        "Right-Thalamus": (0.8, 0.0, 0.0),
        "Brain-Stem": (0.0, -0.4, -0.8),
    }
    regions = []
    for i, (label, offset) in enumerate(offsets.items()):
        mesh = TriMesh(blob.vertices + np.asarray(offset), blob.faces)
        area = label.replace("-", " ").lower()
        regions.append(
            MeshRegion(label=label, annot=label, area=area, color=_auto_color(60 + i), mesh=mesh)
        )
    atlas = MeshAtlas(name, "subcortical", (SurfaceSet("subcortical", "subcort", tuple(regions)),))
    return validate_mesh_atlas(atlas)


#: Mock analysis results over four left-hemisphere areas, fixed values.
MOCK_AREAS = ("transverse temporal", "insula", "pre central", "superior parietal")
MOCK_VALUES = (0.03, 0.12, 0.26, 0.41)


def mock_area_stats(grouped: bool = False) -> StatTable:
    """Four-region mock table; with ``grouped`` a Young/Old pair of blocks."""
    if not grouped:
        rows = tuple({"area": a, "p": p} for a, p in zip(MOCK_AREAS, MOCK_VALUES))
        return StatTable(rows, ("area",), ("p",))
    rows = []
    for gi, group in enumerate(("Young", "Old")):
        for ai, area in enumerate(MOCK_AREAS):
            rows.append({"area": area, "AgeG": group, "p": round(0.05 + 0.04 * (ai + 4 * gi), 2)})
    return StatTable(tuple(rows), ("area", "AgeG"), ("p",))
