"""Mesh operations for building atlases from raw surfaces: per-region
extraction from annotations, iterative inflation, and glass brains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atlas import MeshAtlas, MeshRegion, TriMesh
from .colors import normalize_hex
from .errors import SegvizError, ValidationError
from .fsio import RawAnnotation, RawSurface

GLASS_COLOR = "#AAAAAA"
GLASS_OPACITY = 0.3

#: Smoothing iterations for the shipped surface triple.
SEMI_INFLATED_ITERATIONS = 10
INFLATED_ITERATIONS = 60


def split_by_annot(surface: RawSurface, annotation: RawAnnotation) -> list[MeshRegion]:
    """Split a labeled surface into one compact submesh per structure.

    A face belongs to a structure when at least two of its vertices carry
    that label; a face whose three labels all differ goes to the label of
    its lowest vertex index.  Structures come out in color-table order.
    """
    n = len(surface.vertices)
    labels = np.zeros(n, dtype=np.int64)
    for vertex, code in annotation.vertex_labels:
        if not 0 <= vertex < n:
            raise ValidationError(f"annotation vertex {vertex} outside surface range {n}")
        labels[vertex] = code

    known = annotation.codes()
    missing = sorted(set(labels[labels != 0].tolist()) - known)
    if missing:
        raise ValidationError(
            f"vertex label code {missing[0]} absent from color table"
        )

    faces = surface.faces.astype(np.int64)
    if len(faces) == 0:
        return []
    l0, l1, l2 = labels[faces[:, 0]], labels[faces[:, 1]], labels[faces[:, 2]]
    tie = labels[faces.min(axis=1)]
    face_label = np.where(
        (l0 == l1) | (l0 == l2), l0, np.where(l1 == l2, l1, tie)
    )

    regions: list[MeshRegion] = []
    vertices = surface.vertices.astype(np.float64)
    for entry in annotation.color_table:
        mask = face_label == entry.code
        if not mask.any():
            continue
        for channel in (entry.r, entry.g, entry.b):
            if not 0 <= channel <= 255:
                raise ValidationError(f"structure {entry.name!r}: color channel out of range")
        sub = faces[mask]
        used, compact = np.unique(sub.ravel(), return_inverse=True)
        mesh = TriMesh(vertices[used], compact.reshape(-1, 3))
        regions.append(
            MeshRegion(
                label=entry.name,
                annot=entry.name,
                area=entry.name.replace("_", " "),
                color="#{:02X}{:02X}{:02X}".format(entry.r, entry.g, entry.b),
                mesh=mesh,
            )
        )
    return regions


def _edge_arrays(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = mesh.faces
    half = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    undirected = np.concatenate([half, half[:, ::-1]])
    edges = np.unique(undirected, axis=0)
    degree = np.bincount(edges[:, 0], minlength=len(mesh.vertices))
    return edges[:, 0], edges[:, 1], degree


def inflate_mesh(
    mesh: TriMesh,
    iterations: int = SEMI_INFLATED_ITERATIONS,
    lam: float = 0.5,
    *,
    rescale: bool = True,
) -> TriMesh:
    """Uniform Laplacian smoothing with post-hoc size restoration.

    Each iteration moves every vertex by ``lam * (edge-neighbor mean -
    vertex)``, all vertices updated simultaneously from the previous
    positions.  After the final iteration the mesh is uniformly rescaled
    about its centroid so the bounding-box diagonal matches the input
    (Laplacian smoothing shrinks; ``rescale=False`` skips the correction).
    Topology is untouched.
    """
    if iterations < 0:
        raise SegvizError("iterations must be >= 0")
    if not 0.0 < lam <= 1.0:
        raise SegvizError("lambda must be in (0, 1]")
    if iterations == 0:
        return TriMesh(mesh.vertices.copy(), mesh.faces.copy())

    src, dst, degree = _edge_arrays(mesh)
    if (degree == 0).any():
        isolated = int(np.flatnonzero(degree == 0)[0])
        raise SegvizError(f"vertex {isolated} has no neighbors")

    v = mesh.vertices.copy()
    inv_degree = (1.0 / degree)[:, None]
    for _ in range(iterations):
        acc = np.zeros_like(v)
        np.add.at(acc, src, v[dst])
        v += lam * (acc * inv_degree - v)

    if rescale:
        lo_in, hi_in = mesh.bounds()
        diag_in = float(np.linalg.norm(hi_in - lo_in))
        diag_out = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
        if diag_in > 0 and diag_out > 0:
            centroid = v.mean(axis=0)
            v = centroid + (v - centroid) * (diag_in / diag_out)
    return TriMesh(v, mesh.faces.copy())


def merge_meshes(meshes: list[TriMesh]) -> TriMesh:
    """Concatenate meshes into one, offsetting face indices."""
    if not meshes:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    vertices = []
    faces = []
    offset = 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        faces.append(mesh.faces + offset)
        offset += len(mesh.vertices)
    return TriMesh(np.concatenate(vertices), np.concatenate(faces))


@dataclass(frozen=True)
class GlassBrain:
    """Translucent whole-hemisphere reference meshes."""

    meshes: tuple[tuple[str, TriMesh], ...]
    color: str = GLASS_COLOR
    opacity: float = GLASS_OPACITY

    def __post_init__(self):
        if not 0.0 <= self.opacity <= 1.0:
            raise SegvizError("glass brain opacity must be within [0, 1]")
        object.__setattr__(self, "color", normalize_hex(self.color))


def make_glassbrain(
    atlas: MeshAtlas,
    hemisphere: str = "both",
    color: str = GLASS_COLOR,
    opacity: float = GLASS_OPACITY,
) -> GlassBrain:
    """Merge semi-inflated hemisphere meshes into a translucent reference."""
    if hemisphere not in ("left", "right", "both"):
        raise SegvizError(f"unknown hemisphere {hemisphere!r} (expected left, right, or both)")
    wanted = ["left", "right"] if hemisphere == "both" else [hemisphere]
    merged: list[tuple[str, TriMesh]] = []
    for hemi in wanted:
        sets = atlas.surface_sets("semi_inflated", hemi)
        if not sets:
            raise SegvizError(f"hemisphere {hemi!r} not present in atlas {atlas.name!r}")
        merged.append((hemi, merge_meshes([r.mesh for s in sets for r in s.regions])))
    return GlassBrain(tuple(merged), color=color, opacity=opacity)
