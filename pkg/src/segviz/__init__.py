"""segviz: brain parcellation atlas visualization toolkit.

Canonical 2D polygon and 3D mesh atlas formats, a statistics-to-region
join engine, deterministic SVG choropleths, a software-rasterized 3D
scene renderer with camera presets and glass brains, and a pipeline that
traces 2D atlases from annotated surfaces.
"""

from .atlas import (
    MeshAtlas,
    MeshRegion,
    PolygonAtlas,
    RegionRef,
    RegionShape,
    SurfaceSet,
    TriMesh,
    parse_atlas,
    serialize_atlas,
    validate_mesh_atlas,
    validate_polygon_atlas,
)
from .colors import ColorScale, brain_palette, make_gradient, map_value, resolve_fill
from .errors import FormatError, JoinError, SegvizError, ValidationError
from .fsio import RawAnnotation, RawSurface, read_annot, read_surface, write_annot, write_surface
from .meshops import GlassBrain, inflate_mesh, make_glassbrain, split_by_annot
from .pipeline import build_polygon_atlas, simplify_ring, trace_region_contours
from .plot2d import PanelLayout, RenderSpec2D, layout_facets, render_svg, select_panels
from .render3d import (
    Camera,
    Scene,
    SceneItem,
    build_scene,
    camera_preset,
    export_scene,
    parse_scene,
    rasterize_scene,
)
from .stats import JoinResult, StatTable, join_stats, pivot_wide_to_long, read_stat_table, split_groups

__version__ = "0.1.0"
