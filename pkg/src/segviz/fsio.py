"""Binary readers and writers for the triangle-surface and annotation
formats consumed by the atlas-creation pipeline.

Both layouts are big-endian regardless of host.  Surfaces: 3-byte magic
``FF FF FE``, a creator comment terminated by two newline bytes, int32
vertex/face counts, then float32 vertices and int32 faces.  Annotations:
an int32 pair count, (vertex, code) int32 pairs, and an optional version-2
color table tagged with int32 ``-2``.  A color code packs channels as
``r + g*2**8 + b*2**16``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import FormatError

SURFACE_MAGIC = b"\xff\xff\xfe"
COLOR_TABLE_TAG = -2
COLOR_TABLE_VERSION = 2


def pack_code(r: int, g: int, b: int) -> int:
    """Pack 8-bit channels into an annotation color code."""
    return r + (g << 8) + (b << 16)


class ColorTableEntry(NamedTuple):
    name: str
    r: int
    g: int
    b: int
    code: int


@dataclass
class RawSurface:
    """Vertices and faces straight from a surface file."""

    comment: str
    vertices: np.ndarray  # N x 3 float32
    faces: np.ndarray  # M x 3 int32

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float32).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)

    def __eq__(self, other):
        if not isinstance(other, RawSurface):
            return NotImplemented
        return (
            self.comment == other.comment
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.faces, other.faces)
        )


@dataclass(frozen=True)
class RawAnnotation:
    """Per-vertex color codes plus the structure color table."""

    vertex_labels: tuple[tuple[int, int], ...]
    color_table: tuple[ColorTableEntry, ...]

    def codes(self) -> set[int]:
        return {entry.code for entry in self.color_table}


class _Cursor:
    """Sequential big-endian reader with offset-aware truncation errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(
                f"truncated payload: need {n} bytes for {what} at byte {self.offset}, "
                f"have {len(self.data) - self.offset}"
            )
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def int32(self, what: str) -> int:
        return struct.unpack(">i", self.take(4, what))[0]

    def exhausted(self) -> bool:
        return self.offset == len(self.data)


def read_surface(data: bytes) -> RawSurface:
    """Parse a binary triangle surface; rejects quad and unknown magics."""
    if data[:3] != SURFACE_MAGIC:
        raise FormatError(f"bad magic {data[:3].hex()} (expected {SURFACE_MAGIC.hex()})")
    end = data.find(b"\n\n", 3)
    if end < 0:
        raise FormatError("truncated payload: comment terminator not found")
    try:
        comment = data[3:end].decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError("comment is not valid UTF-8") from None
    cur = _Cursor(data)
    cur.offset = end + 2
    n_vertices = cur.int32("vertex count")
    n_faces = cur.int32("face count")
    if n_vertices < 0 or n_faces < 0:
        raise FormatError("negative vertex or face count")
    vertex_bytes = cur.take(12 * n_vertices, "vertices")
    face_bytes = cur.take(12 * n_faces, "faces")
    if not cur.exhausted():
        raise FormatError(f"trailing bytes after faces at byte {cur.offset}")
    vertices = np.frombuffer(vertex_bytes, dtype=">f4").reshape(n_vertices, 3)
    faces = np.frombuffer(face_bytes, dtype=">i4").reshape(n_faces, 3)
    if n_faces and (faces.min() < 0 or faces.max() >= n_vertices):
        raise FormatError(f"face index out of range (vertex count {n_vertices})")
    return RawSurface(comment, vertices.astype(np.float32), faces.astype(np.int32))


def write_surface(surface: RawSurface) -> bytes:
    """Emit the binary surface layout, big-endian throughout."""
    if "\n\n" in surface.comment:
        raise ValueError("surface comment must not contain a blank line")
    parts = [
        SURFACE_MAGIC,
        surface.comment.encode("utf-8"),
        b"\n\n",
        struct.pack(">ii", len(surface.vertices), len(surface.faces)),
        surface.vertices.astype(">f4").tobytes(),
        surface.faces.astype(">i4").tobytes(),
    ]
    return b"".join(parts)


def read_annot(data: bytes) -> RawAnnotation:
    """Parse an annotation payload: vertex codes plus optional color table."""
    cur = _Cursor(data)
    count = cur.int32("pair count")
    if count < 0:
        raise FormatError("negative pair count")
    pair_bytes = cur.take(8 * count, "vertex/code pairs")
    pairs = np.frombuffer(pair_bytes, dtype=">i4").reshape(count, 2)
    vertex_labels = tuple((int(v), int(c)) for v, c in pairs)

    table: list[ColorTableEntry] = []
    if not cur.exhausted():
        tag = cur.int32("color table tag")
        if tag > 0:
            raise FormatError(
                f"legacy positive-count color table (tag {tag}) is not supported"
            )
        if tag != COLOR_TABLE_TAG:
            raise FormatError(f"unknown color table tag {tag}")
        version = cur.int32("color table version")
        if version != COLOR_TABLE_VERSION:
            raise FormatError(f"unsupported color table version {version}")
        n_entries = cur.int32("color table entry count")
        if n_entries < 0:
            raise FormatError("negative color table entry count")
        for i in range(n_entries):
            name_len = cur.int32(f"entry {i} name length")
            if name_len < 0:
                raise FormatError(f"entry {i}: negative name length")
            try:
                name = cur.take(name_len, f"entry {i} name").decode("utf-8")
            except UnicodeDecodeError:
                raise FormatError(f"entry {i}: name is not valid UTF-8") from None
            r = cur.int32(f"entry {i} red")
            g = cur.int32(f"entry {i} green")
            b = cur.int32(f"entry {i} blue")
            cur.int32(f"entry {i} flag")  # reserved, always 0 on write
            table.append(ColorTableEntry(name, r, g, b, pack_code(r, g, b)))
        if not cur.exhausted():
            raise FormatError(f"trailing bytes after color table at byte {cur.offset}")

    known = {entry.code for entry in table}
    for vertex, code in vertex_labels:
        if code != 0 and code not in known:
            raise FormatError(
                f"vertex {vertex} references code {code} absent from color table"
            )
    return RawAnnotation(vertex_labels, tuple(table))


def write_annot(annotation: RawAnnotation) -> bytes:
    """Emit the annotation layout; inverse of :func:`read_annot`."""
    parts = [struct.pack(">i", len(annotation.vertex_labels))]
    for vertex, code in annotation.vertex_labels:
        parts.append(struct.pack(">ii", vertex, code))
    if annotation.color_table:
        parts.append(
            struct.pack(
                ">iii", COLOR_TABLE_TAG, COLOR_TABLE_VERSION, len(annotation.color_table)
            )
        )
        for entry in annotation.color_table:
            if entry.code != pack_code(entry.r, entry.g, entry.b):
                raise ValueError(
                    f"entry {entry.name!r}: code {entry.code} does not match channels"
                )
            encoded = entry.name.encode("utf-8")
            parts.append(struct.pack(">i", len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack(">iiii", entry.r, entry.g, entry.b, 0))
    return b"".join(parts)
