"""Statistics ingestion and the statistics-to-region join engine.

Tables are long format: one region observation per row, string-typed key
columns plus numeric value columns.  Joins keep the atlas on the left so
every region is present in the result; regions without data render in the
NA color downstream.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .atlas import MeshAtlas, PolygonAtlas, RegionRef
from .errors import FormatError, JoinError

#: Key columns the join engine understands; others (ids, groups) ride along.
JOINABLE_KEYS = ("label", "area", "hemi")

Row = dict[str, object]


@dataclass(frozen=True)
class StatTable:
    """Long-format table: declared string key columns + numeric value columns."""

    rows: tuple[Row, ...]
    key_columns: tuple[str, ...]
    value_columns: tuple[str, ...]

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]


def read_stat_table(data: bytes | str, key_columns: list[str] | tuple[str, ...]) -> StatTable:
    """Parse comma- or tab-separated text with a header row.

    Declared key columns stay strings; every remaining column is parsed as
    numeric, with empty cells becoming missing values.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if not text.strip():
        raise FormatError("stats file is empty (no header row)")
    delimiter = "\t" if "\t" in text.splitlines()[0] else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    keys = tuple(key_columns)
    for key in keys:
        if key not in header:
            raise FormatError(f"missing declared key column {key!r}")
    value_columns = tuple(h for h in header if h not in keys)

    rows: list[Row] = []
    for lineno, cells in enumerate(reader, start=1):
        if not cells:
            continue
        if len(cells) != len(header):
            raise FormatError(
                f"row {lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        row: Row = {}
        for name, cell in zip(header, cells):
            cell = cell.strip()
            if name in keys:
                row[name] = cell
            elif cell == "":
                row[name] = None
            else:
                try:
                    value = float(cell)
                except ValueError:
                    raise FormatError(
                        f"row {lineno}, column {name}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise FormatError(
                        f"row {lineno}, column {name}: value must be finite"
                    )
                row[name] = value
        rows.append(row)
    return StatTable(tuple(rows), keys, value_columns)


def pivot_wide_to_long(
    table: StatTable,
    id_columns: list[str] | tuple[str, ...],
    key_name: str,
    value_name: str,
) -> StatTable:
    """Reshape a wide table to long format.

    Emits one row per (input row x measure column), walking measures in
    input column order and rows in input order, so the measure blocks come
    out contiguous.
    """
    ids = tuple(id_columns)
    for column in ids:
        if column not in table.key_columns:
            raise JoinError(f"id column {column!r} not present in table")
    measures = table.value_columns
    rows: list[Row] = []
    for measure in measures:
        for row in table.rows:
            out: Row = {column: row[column] for column in ids}
            out[key_name] = measure
            out[value_name] = row[measure]
            rows.append(out)
    return StatTable(tuple(rows), ids + (key_name,), (value_name,))


def split_groups(stats: StatTable, group_column: str) -> list[tuple[str, StatTable]]:
    """Split a table into per-group sub-tables, first-appearance order."""
    if group_column not in stats.key_columns:
        raise JoinError(f"group column {group_column!r} not present in table")
    remaining = tuple(k for k in stats.key_columns if k != group_column)
    order: list[str] = []
    buckets: dict[str, list[Row]] = {}
    for row in stats.rows:
        group = str(row[group_column])
        if group not in buckets:
            order.append(group)
            buckets[group] = []
        buckets[group].append({k: v for k, v in row.items() if k != group_column})
    return [
        (group, StatTable(tuple(buckets[group]), remaining, stats.value_columns))
        for group in order
    ]


@dataclass(frozen=True)
class JoinResult:
    """Outcome of joining one stats table into an atlas.

    ``pairs`` covers every atlas region exactly once; regions without a
    matching row carry all-missing records.  ``unmatched_rows`` lists input
    rows that matched no region (diagnostic, fatal only in strict mode).
    """

    pairs: tuple[tuple[RegionRef, Row], ...]
    unmatched_rows: tuple[Row, ...]
    matched_count: int

    def records(self) -> dict[RegionRef, Row]:
        return dict(self.pairs)


def _atlas_refs(atlas, surface, hemisphere) -> list[RegionRef]:
    if isinstance(atlas, PolygonAtlas):
        return atlas.region_refs()
    if isinstance(atlas, MeshAtlas):
        if surface is None:
            if atlas.kind == "subcortical":
                surface = "subcortical"
            else:
                raise JoinError("joining a cortical mesh atlas requires a surface selection")
        refs = atlas.region_refs(surface, hemisphere)
        if not refs:
            raise JoinError(f"no regions for surface {surface!r}")
        return refs
    raise TypeError(f"not an atlas: {type(atlas).__name__}")


def join_stats(
    atlas,
    stats: StatTable,
    *,
    surface: str | None = None,
    hemisphere: str | None = None,
    strict: bool = False,
) -> JoinResult:
    """Left-join a stats table into an atlas by shared key columns.

    Join keys are the declared key columns intersected with
    ``("label", "area", "hemi")``; ``label`` wins over ``area`` when both
    are declared.  Matching is exact string equality after trimming
    surrounding whitespace.
    """
    refs = _atlas_refs(atlas, surface, hemisphere)
    shared = [k for k in stats.key_columns if k in JOINABLE_KEYS]
    if not shared:
        raise JoinError(
            "no shared key columns: stats must declare at least one of "
            + ", ".join(JOINABLE_KEYS)
        )
    if "label" in shared and "area" in shared:
        shared.remove("area")

    def region_key(ref: RegionRef) -> tuple[str, ...]:
        return tuple(getattr(ref, k).strip() for k in shared)

    def row_key(row: Row) -> tuple[str, ...]:
        return tuple(str(row[k]).strip() for k in shared)

    by_key: dict[tuple[str, ...], list[RegionRef]] = {}
    for ref in refs:
        by_key.setdefault(region_key(ref), []).append(ref)

    assigned: dict[RegionRef, Row] = {}
    unmatched: list[Row] = []
    for row in stats.rows:
        targets = by_key.get(row_key(row), [])
        if not targets:
            unmatched.append(row)
            continue
        record: Row = {name: row[name] for name in stats.value_columns}
        for ref in targets:
            if ref in assigned:
                raise JoinError(
                    f"duplicate stat rows for region {ref.label!r} ({ref.hemi})"
                )
            assigned[ref] = record

    if strict and unmatched:
        sample = ", ".join(str(row_key(r)) for r in unmatched[:5])
        raise JoinError(f"{len(unmatched)} stats rows matched no region: {sample}")
    if stats.rows and not assigned:
        raise JoinError("no stats rows matched any atlas region")

    missing: Row = {name: None for name in stats.value_columns}
    pairs = tuple((ref, assigned.get(ref, dict(missing))) for ref in refs)
    return JoinResult(pairs, tuple(unmatched), len(assigned))
