"""Command-line entry point wiring the toolkit together.

Exit codes: 0 success, 1 user error (one-line message, no traceback),
2 internal error.  Diagnostics go to stderr; artifacts only to paths named
by ``--out`` flags, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import atlas as atlasmod
from . import render3d
from .colors import ColorScale, brain_palette, make_gradient, parse_color, resolve_fill
from .errors import SegvizError
from .meshops import GLASS_COLOR, GLASS_OPACITY, INFLATED_ITERATIONS, inflate_mesh, make_glassbrain, split_by_annot
from .pipeline import build_polygon_atlas
from .plot2d import RenderSpec2D, layout_facets, render_svg, select_panels
from .stats import StatTable, join_stats, pivot_wide_to_long, read_stat_table, split_groups
from .fsio import RawSurface, read_annot, read_surface


class _UsageError(SegvizError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise _UsageError(f"{message}\n{self.format_usage()}".rstrip())


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as e:
        raise SegvizError(f"cannot read {path}: {e.strerror}") from None


def _write(path: str, data: bytes) -> None:
    try:
        with open(path, "wb") as handle:
            handle.write(data)
    except OSError as e:
        raise SegvizError(f"cannot write {path}: {e.strerror}") from None


def _load_atlas(path: str):
    return atlasmod.parse_atlas(_read(path))


def _split_csv(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _parse_palette(spec: str):
    """``name=breakpoint,...`` mapping or a plain comma-separated color list."""
    if "=" in spec:
        mapping = {}
        for part in _split_csv(spec):
            name, _, number = part.partition("=")
            if not number:
                raise SegvizError(f"palette entry {part!r} needs the form color=breakpoint")
            try:
                mapping[name.strip()] = float(number)
            except ValueError:
                raise SegvizError(f"palette breakpoint {number!r} is not numeric") from None
        return mapping
    return _split_csv(spec)


def _add_stats_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stats", help="CSV/TSV statistics file")
    parser.add_argument("--key-cols", default="area",
                        help="comma-separated key columns (default: area)")
    parser.add_argument("--group-col", help="group column for faceting")
    parser.add_argument("--strict", action="store_true",
                        help="fail when any stats row matches no region")
    parser.add_argument("--wide", action="store_true",
                        help="input is wide; pivot to long before joining")
    parser.add_argument("--id-cols", default="id", help="wide mode: id columns")
    parser.add_argument("--key-name", default="label", help="wide mode: name for the measure column")
    parser.add_argument("--value-name", default="value", help="wide mode: name for the value column")


def _add_scale_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--palette",
                        help='gradient: "#ff0000,#00ff00" or "red=0,white=0.5,blue=1"')
    parser.add_argument("--na-color", default=None, help="fill for regions without data")
    parser.add_argument("--na-alpha", type=float, default=1.0, help="opacity for NA fills")


def _load_stats(args) -> StatTable | None:
    if not args.stats:
        return None
    if args.wide:
        wide = read_stat_table(_read(args.stats), _split_csv(args.id_cols))
        return pivot_wide_to_long(wide, _split_csv(args.id_cols), args.key_name, args.value_name)
    keys = _split_csv(args.key_cols)
    if args.group_col and args.group_col not in keys:
        keys.append(args.group_col)
    return read_stat_table(_read(args.stats), keys)


def _build_scale(args, stats: StatTable | None, atlas, value: str | None) -> ColorScale:
    na_color = parse_color(args.na_color) if args.na_color else None
    kwargs = {"na_alpha": args.na_alpha}
    if na_color:
        kwargs["na_color"] = na_color
    if stats is None:
        return brain_palette(atlas, **kwargs)
    if value is None:
        raise SegvizError("--value is required when --stats is given")
    if value not in stats.value_columns:
        raise SegvizError(f"value column {value!r} not in stats (have {', '.join(stats.value_columns)})")
    palette = _parse_palette(args.palette) if args.palette else ["firebrick", "goldenrod"]
    if isinstance(palette, dict):
        return make_gradient(palette, **kwargs)
    values = [row[value] for row in stats.rows if row[value] is not None]
    if not values:
        raise SegvizError(f"value column {value!r} has no data")
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return make_gradient(palette, (lo, hi), **kwargs)


def _cmd_plot2d(args) -> int:
    atlas = _load_atlas(args.atlas)
    if not isinstance(atlas, atlasmod.PolygonAtlas):
        raise SegvizError(f"{args.atlas} is a mesh atlas; plot2d needs a polygon atlas")
    layout = select_panels(atlas, args.hemisphere, args.view, args.position)
    stats = _load_stats(args)
    scale = _build_scale(args, stats, atlas, args.value)

    stroke = None
    if args.stroke:
        from .colors import hex_to_rgb

        stroke = (*hex_to_rgb(parse_color(args.stroke)), 255)
    spec = RenderSpec2D(
        stroke=stroke,
        stroke_width=args.stroke_width,
        legend=args.legend,
        title=args.title,
        background=parse_color(args.background),
    )

    if stats is not None and args.group_col:
        groups = split_groups(stats, args.group_col)
        layout = layout_facets(layout, [g for g, _ in groups],
                               args.facet_ncol or len(groups))
        fills = {
            group: resolve_fill(join_stats(atlas, table, strict=args.strict), args.value, scale)
            for group, table in groups
        }
    else:
        table = stats if stats is not None else StatTable((), ("area",), ())
        join = join_stats(atlas, table, strict=args.strict)
        fills = resolve_fill(join, args.value, scale)
    _write(args.out, render_svg(atlas, layout, fills, spec, scale))
    return 0


def _cmd_plot3d(args) -> int:
    atlas = _load_atlas(args.atlas)
    if not isinstance(atlas, atlasmod.MeshAtlas):
        raise SegvizError(f"{args.atlas} is a polygon atlas; plot3d needs a mesh atlas")
    if not args.out and not args.out_scene:
        raise SegvizError("nothing to do: give --out (PNG) and/or --out-scene (gscene)")
    surface = args.surface or ("subcortical" if atlas.kind == "subcortical" else "semi_inflated")
    stats = _load_stats(args)
    scale = _build_scale(args, stats, atlas, args.value)
    table = stats if stats is not None else StatTable((), ("area",), ())
    join = join_stats(atlas, table, surface=surface, hemisphere=args.hemisphere,
                      strict=args.strict)
    fills = resolve_fill(join, args.value, scale)

    glass = None
    if args.glass:
        glass_source = atlas
        if args.glass_atlas:
            glass_source = _load_atlas(args.glass_atlas)
            if not isinstance(glass_source, atlasmod.MeshAtlas):
                raise SegvizError(f"{args.glass_atlas} is not a mesh atlas")
        if glass_source.kind != "cortical":
            raise SegvizError("glass brains need a cortical mesh atlas; give --glass-atlas")
        glass = make_glassbrain(glass_source, args.glass,
                                color=parse_color(args.glass_color), opacity=args.glass_opacity)

    scene = render3d.build_scene(
        atlas,
        surface,
        hemisphere=args.hemisphere,
        fills=fills,
        records=join.records(),
        value_column=args.value,
        hover_column=args.hover,
        na_alpha=args.na_alpha,
        glass=glass,
        camera=args.camera,
        background=parse_color(args.background),
        show_axes=not args.no_axes,
    )
    if args.out:
        image = render3d.rasterize_scene(scene, args.width, args.height)
        _write(args.out, render3d.encode_png(image))
    if args.out_scene:
        _write(args.out_scene, render3d.export_scene(scene))
    return 0


def _hemi_from_path(path: str) -> str:
    base = os.path.basename(path)
    if base.startswith("lh."):
        return "left"
    if base.startswith("rh."):
        return "right"
    raise SegvizError(f"cannot infer hemisphere from {base!r} (expected lh.* or rh.*)")


def _cmd_convert(args) -> int:
    if len(args.surface) != len(args.annot):
        raise SegvizError("--surface and --annot must be given in matching pairs")
    by_hemi: dict[str, tuple[str, str]] = {}
    for surface_path, annot_path in zip(args.surface, args.annot):
        hemi = _hemi_from_path(surface_path)
        if hemi in by_hemi:
            raise SegvizError(f"duplicate {hemi} hemisphere input {surface_path!r}")
        by_hemi[hemi] = (surface_path, annot_path)
    if set(by_hemi) != {"left", "right"}:
        raise SegvizError(
            "a cortical mesh atlas needs both hemispheres; "
            "give --surface/--annot for lh.* and rh.*"
        )

    sets = []
    for hemi in ("left", "right"):
        surface_path, annot_path = by_hemi[hemi]
        surface = read_surface(_read(surface_path))
        annotation = read_annot(_read(annot_path))
        base = atlasmod.TriMesh(surface.vertices, surface.faces)
        for surface_name, iterations in (
            ("white", 0),
            ("semi_inflated", args.inflate_iters),
            ("inflated", INFLATED_ITERATIONS),
        ):
            geometry = inflate_mesh(base, iterations) if iterations else base
            raw = RawSurface(surface.comment, geometry.vertices, geometry.faces)
            regions = split_by_annot(raw, annotation)
            sets.append(atlasmod.SurfaceSet(surface_name, hemi, tuple(regions)))
    atlas = atlasmod.validate_mesh_atlas(
        atlasmod.MeshAtlas(args.name, "cortical", tuple(sets))
    )
    _write(args.out, atlasmod.serialize_atlas(atlas))
    return 0


def _cmd_make_atlas_2d(args) -> int:
    atlas = _load_atlas(args.mesh_atlas)
    if not isinstance(atlas, atlasmod.MeshAtlas):
        raise SegvizError(f"{args.mesh_atlas} is not a mesh atlas")
    if atlas.kind != "cortical":
        raise SegvizError("make-atlas-2d needs a cortical mesh atlas")
    sets = atlas.surface_sets(args.surface)
    if not sets:
        raise SegvizError(f"surface {args.surface!r} not in atlas")
    result = build_polygon_atlas(
        sets, name=args.name or atlas.name + "_2d", size=args.size, epsilon=args.epsilon
    )
    for hemi, view, label in result.invisible:
        print(f"note: region {label!r} invisible in {hemi} {view}", file=sys.stderr)
    _write(args.out, atlasmod.serialize_atlas(result.atlas))
    return 0


def _cmd_inspect(args) -> int:
    atlas = _load_atlas(args.atlas)
    print(f"name: {atlas.name}")
    print(f"kind: {atlas.kind}")
    if isinstance(atlas, atlasmod.PolygonAtlas):
        print("type: polygon")
        print(f"regions: {len(atlas.region_refs())}")
        print(f"shapes: {len(atlas.regions)}")
        hemis = sorted({s.hemi for s in atlas.regions})
        views = sorted({s.view for s in atlas.regions})
        print(f"hemispheres: {', '.join(hemis)}")
        print(f"views: {', '.join(views)}")
    else:
        print("type: mesh")
        names = sorted({s.surface for s in atlas.surfaces})
        print(f"surfaces: {', '.join(names)}")
        for surface_set in sorted(atlas.surfaces, key=lambda s: (s.surface, s.hemi)):
            print(f"surface {surface_set.surface}/{surface_set.hemi}: "
                  f"{len(surface_set.regions)} regions")
    return 0


def _cmd_join_check(args) -> int:
    atlas = _load_atlas(args.atlas)
    stats = _load_stats(args)
    if stats is None:
        raise SegvizError("join-check requires --stats")
    surface = args.surface
    if isinstance(atlas, atlasmod.MeshAtlas) and surface is None:
        surface = "subcortical" if atlas.kind == "subcortical" else "semi_inflated"

    def report(prefix: str, table: StatTable) -> None:
        join = join_stats(atlas, table, surface=surface, strict=args.strict)
        total = len(join.pairs)
        print(f"{prefix}matched regions: {join.matched_count} of {total}")
        print(f"{prefix}unmatched rows: {len(join.unmatched_rows)}")
        for row in join.unmatched_rows[:10]:
            print(f"{prefix}  unmatched: {row}")

    if args.group_col:
        for group, table in split_groups(stats, args.group_col):
            print(f"group {group}:")
            report("  ", table)
    else:
        report("", stats)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="segviz", description="Brain parcellation atlas visualization toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p2 = sub.add_parser("plot2d", help="render a polygon atlas choropleth to SVG")
    p2.add_argument("--atlas", required=True, help="gatlas-poly/1 file")
    _add_stats_flags(p2)
    _add_scale_flags(p2)
    p2.add_argument("--value", help="value column used for the fill gradient")
    p2.add_argument("--hemisphere", choices=["left", "right"])
    p2.add_argument("--view")
    p2.add_argument("--position", choices=["dispersed", "stacked"])
    p2.add_argument("--facet-ncol", type=int, default=None)
    p2.add_argument("--stroke", help="outline color (name or hex)")
    p2.add_argument("--stroke-width", type=float, default=1.0)
    p2.add_argument("--legend", choices=["none", "discrete", "gradient-bar"], default="none")
    p2.add_argument("--title", default="")
    p2.add_argument("--background", default="#FFFFFF")
    p2.add_argument("--out", required=True, help="output SVG path")
    p2.set_defaults(func=_cmd_plot2d)

    p3 = sub.add_parser("plot3d", help="render a mesh atlas to PNG and/or a gscene file")
    p3.add_argument("--atlas", required=True, help="gatlas-mesh/1 file")
    _add_stats_flags(p3)
    _add_scale_flags(p3)
    p3.add_argument("--value", help="value column used for region colors")
    p3.add_argument("--hover", help="value column shown in hover text")
    p3.add_argument("--surface", help="surface to plot (default: semi_inflated)")
    p3.add_argument("--hemisphere", choices=["left", "right"])
    p3.add_argument("--glass", choices=["left", "right", "both"],
                    help="add a translucent glass brain")
    p3.add_argument("--glass-atlas", help="cortical mesh atlas supplying glass geometry")
    p3.add_argument("--glass-color", default=GLASS_COLOR)
    p3.add_argument("--glass-opacity", type=float, default=GLASS_OPACITY)
    p3.add_argument("--camera", default="left lateral",
                    help='camera preset, e.g. "right lateral"')
    p3.add_argument("--no-axes", action="store_true", help="remove the axis lines")
    p3.add_argument("--width", type=int, default=800)
    p3.add_argument("--height", type=int, default=600)
    p3.add_argument("--background", default="#FFFFFF")
    p3.add_argument("--out", help="output PNG path")
    p3.add_argument("--out-scene", help="output gscene/1 path")
    p3.set_defaults(func=_cmd_plot3d)

    pc = sub.add_parser("convert", help="build a mesh atlas from binary surfaces + annotations")
    pc.add_argument("--surface", action="append", required=True,
                    help="surface file (lh.* or rh.*); repeat for both hemispheres")
    pc.add_argument("--annot", action="append", required=True,
                    help="annotation file matching each --surface")
    pc.add_argument("--inflate-iters", type=int, default=10,
                    help="smoothing iterations for the semi-inflated surface")
    pc.add_argument("--name", default="converted")
    pc.add_argument("--out", required=True, help="output gatlas-mesh/1 path")
    pc.set_defaults(func=_cmd_convert)

    pm = sub.add_parser("make-atlas-2d", help="trace a polygon atlas from a mesh atlas")
    pm.add_argument("--mesh-atlas", required=True)
    pm.add_argument("--surface", default="semi_inflated")
    pm.add_argument("--size", type=int, default=512)
    pm.add_argument("--epsilon", type=float, default=1.0)
    pm.add_argument("--name")
    pm.add_argument("--out", required=True, help="output gatlas-poly/1 path")
    pm.set_defaults(func=_cmd_make_atlas_2d)

    pi = sub.add_parser("inspect", help="print an atlas summary")
    pi.add_argument("--atlas", required=True)
    pi.set_defaults(func=_cmd_inspect)

    pj = sub.add_parser("join-check", help="report join diagnostics without rendering")
    pj.add_argument("--atlas", required=True)
    _add_stats_flags(pj)
    pj.add_argument("--surface", help="surface selection for mesh atlases")
    pj.set_defaults(func=_cmd_join_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SegvizError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - internal failure contract
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
