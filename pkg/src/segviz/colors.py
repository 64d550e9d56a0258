"""Color scales: discrete atlas palettes, breakpoint gradients, and NA handling.

Gradients interpolate channel-wise in 8-bit sRGB with half-up rounding so
rendered output is reproducible byte-for-byte.  Recognized color names come
from the standard SVG/X11 keyword table.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import SegvizError

#: Fill used for regions that carry no data.
DEFAULT_NA_COLOR = "#BEBEBE"

RGBA = tuple[int, int, int, int]

_HEX_RE = re.compile(r"^#?([0-9a-fA-F]{6})$")

#: SVG 1.1 / X11 color keywords.
COLOR_NAMES = {
    "aliceblue": "#F0F8FF", "antiquewhite": "#FAEBD7", "aqua": "#00FFFF", "aquamarine": "#7FFFD4",
    "azure": "#F0FFFF", "beige": "#F5F5DC", "bisque": "#FFE4C4", "black": "#000000",
    "blanchedalmond": "#FFEBCD", "blue": "#0000FF", "blueviolet": "#8A2BE2", "brown": "#A52A2A",
    "burlywood": "#DEB887", "cadetblue": "#5F9EA0", "chartreuse": "#7FFF00", "chocolate": "#D2691E",
    "coral": "#FF7F50", "cornflowerblue": "#6495ED", "cornsilk": "#FFF8DC", "crimson": "#DC143C",
    "cyan": "#00FFFF", "darkblue": "#00008B", "darkcyan": "#008B8B", "darkgoldenrod": "#B8860B",
    "darkgray": "#A9A9A9", "darkgreen": "#006400", "darkgrey": "#A9A9A9", "darkkhaki": "#BDB76B",
    "darkmagenta": "#8B008B", "darkolivegreen": "#556B2F", "darkorange": "#FF8C00", "darkorchid": "#9932CC",
    "darkred": "#8B0000", "darksalmon": "#E9967A", "darkseagreen": "#8FBC8F", "darkslateblue": "#483D8B",
    "darkslategray": "#2F4F4F", "darkslategrey": "#2F4F4F", "darkturquoise": "#00CED1", "darkviolet": "#9400D3",
    "deeppink": "#FF1493", "deepskyblue": "#00BFFF", "dimgray": "#696969", "dimgrey": "#696969",
    "dodgerblue": "#1E90FF", "firebrick": "#B22222", "floralwhite": "#FFFAF0", "forestgreen": "#228B22",
    "fuchsia": "#FF00FF", "gainsboro": "#DCDCDC", "ghostwhite": "#F8F8FF", "gold": "#FFD700",
    "goldenrod": "#DAA520", "gray": "#808080", "green": "#008000", "greenyellow": "#ADFF2F",
    "grey": "#808080", "honeydew": "#F0FFF0", "hotpink": "#FF69B4", "indianred": "#CD5C5C",
    "indigo": "#4B0082", "ivory": "#FFFFF0", "khaki": "#F0E68C", "lavender": "#E6E6FA",
    "lavenderblush": "#FFF0F5", "lawngreen": "#7CFC00", "lemonchiffon": "#FFFACD", "lightblue": "#ADD8E6",
    "lightcoral": "#F08080", "lightcyan": "#E0FFFF", "lightgoldenrodyellow": "#FAFAD2", "lightgray": "#D3D3D3",
    "lightgreen": "#90EE90", "lightgrey": "#D3D3D3", "lightpink": "#FFB6C1", "lightsalmon": "#FFA07A",
    "lightseagreen": "#20B2AA", "lightskyblue": "#87CEFA", "lightslategray": "#778899", "lightslategrey": "#778899",
    "lightsteelblue": "#B0C4DE", "lightyellow": "#FFFFE0", "lime": "#00FF00", "limegreen": "#32CD32",
    "linen": "#FAF0E6", "magenta": "#FF00FF", "maroon": "#800000", "mediumaquamarine": "#66CDAA",
    "mediumblue": "#0000CD", "mediumorchid": "#BA55D3", "mediumpurple": "#9370DB", "mediumseagreen": "#3CB371",
    "mediumslateblue": "#7B68EE", "mediumspringgreen": "#00FA9A", "mediumturquoise": "#48D1CC", "mediumvioletred": "#C71585",
    "midnightblue": "#191970", "mintcream": "#F5FFFA", "mistyrose": "#FFE4E1", "moccasin": "#FFE4B5",
    "navajowhite": "#FFDEAD", "navy": "#000080", "oldlace": "#FDF5E6", "olive": "#808000",
    "olivedrab": "#6B8E23", "orange": "#FFA500", "orangered": "#FF4500", "orchid": "#DA70D6",
    "palegoldenrod": "#EEE8AA", "palegreen": "#98FB98", "paleturquoise": "#AFEEEE", "palevioletred": "#DB7093",
    "papayawhip": "#FFEFD5", "peachpuff": "#FFDAB9", "peru": "#CD853F", "pink": "#FFC0CB",
    "plum": "#DDA0DD", "powderblue": "#B0E0E6", "purple": "#800080", "rebeccapurple": "#663399",
    "red": "#FF0000", "rosybrown": "#BC8F8F", "royalblue": "#4169E1", "saddlebrown": "#8B4513",
    "salmon": "#FA8072", "sandybrown": "#F4A460", "seagreen": "#2E8B57", "seashell": "#FFF5EE",
    "sienna": "#A0522D", "silver": "#C0C0C0", "skyblue": "#87CEEB", "slateblue": "#6A5ACD",
    "slategray": "#708090", "slategrey": "#708090", "snow": "#FFFAFA", "springgreen": "#00FF7F",
    "steelblue": "#4682B4", "tan": "#D2B48C", "teal": "#008080", "thistle": "#D8BFD8",
    "tomato": "#FF6347", "turquoise": "#40E0D0", "violet": "#EE82EE", "wheat": "#F5DEB3",
    "white": "#FFFFFF", "whitesmoke": "#F5F5F5", "yellow": "#FFFF00", "yellowgreen": "#9ACD32",
}


def round_half_up(x: float) -> int:
    """Round to nearest integer, ties away from zero for positive input."""
    return math.floor(x + 0.5)


def normalize_hex(value: str) -> str:
    """Normalize a 6-digit hex color to uppercase ``#RRGGBB``."""
    m = _HEX_RE.match(value.strip())
    if m is None:
        raise SegvizError(f"malformed color {value!r} (expected #RRGGBB)")
    return "#" + m.group(1).upper()


def parse_color(spec: str) -> str:
    """Resolve a hex string or SVG/X11 color name to ``#RRGGBB``.

    Unknown names are errors; fuzzy matching is deliberately not attempted.
    """
    s = spec.strip()
    if _HEX_RE.match(s):
        return normalize_hex(s)
    try:
        return COLOR_NAMES[s.lower()]
    except KeyError:
        raise SegvizError(f"unknown color name {spec!r}") from None


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    c = normalize_hex(color)
    return int(c[1:3], 16), int(c[3:5], 16), int(c[5:7], 16)


def rgba_hex(color: RGBA) -> str:
    """Format an RGBA tuple as ``#RRGGBBAA``."""
    return "#{:02X}{:02X}{:02X}{:02X}".format(*color)


def parse_rgba_hex(value: str) -> RGBA:
    s = value.strip().lstrip("#")
    if not re.fullmatch(r"[0-9a-fA-F]{8}", s):
        raise SegvizError(f"malformed RGBA color {value!r} (expected #RRGGBBAA)")
    return (int(s[0:2], 16), int(s[2:4], 16), int(s[4:6], 16), int(s[6:8], 16))


@dataclass(frozen=True)
class ColorScale:
    """Mapping from region values to colors.

    ``discrete`` mode maps area names to fixed colors; ``gradient`` mode
    interpolates between ascending breakpoint stops.  Regions without data
    always resolve to ``na_color`` at ``na_alpha`` opacity.
    """

    mode: str
    discrete_map: Mapping[str, str] = field(default_factory=dict)
    stops: tuple[tuple[float, str], ...] = ()
    na_color: str = DEFAULT_NA_COLOR
    na_alpha: float = 1.0

    def __post_init__(self):
        if self.mode not in ("discrete", "gradient"):
            raise SegvizError(f"unknown scale mode {self.mode!r}")
        if not 0.0 <= self.na_alpha <= 1.0:
            raise SegvizError("na_alpha must be within [0, 1]")
        object.__setattr__(self, "na_color", normalize_hex(self.na_color))
        if self.mode == "discrete":
            if not self.discrete_map:
                raise SegvizError("discrete scale needs a nonempty area-to-color map")
            object.__setattr__(
                self,
                "discrete_map",
                {k: normalize_hex(v) for k, v in self.discrete_map.items()},
            )
        else:
            if len(self.stops) < 2:
                raise SegvizError("gradient scale needs at least 2 stops")
            pos = [p for p, _ in self.stops]
            if any(b <= a for a, b in zip(pos, pos[1:])):
                raise SegvizError("gradient breakpoints must be strictly ascending")
            object.__setattr__(
                self, "stops", tuple((float(p), normalize_hex(c)) for p, c in self.stops)
            )

    @property
    def na_rgba(self) -> RGBA:
        return (*hex_to_rgb(self.na_color), round_half_up(self.na_alpha * 255))


def brain_palette(atlas, *, na_color: str = DEFAULT_NA_COLOR, na_alpha: float = 1.0) -> ColorScale:
    """Discrete scale mapping each area name to its atlas-native color."""
    mapping: dict[str, str] = {}
    if hasattr(atlas, "surfaces"):
        regions = [r for s in atlas.surfaces for r in s.regions]
    else:
        regions = list(atlas.regions)
    for region in regions:
        color = normalize_hex(region.color)
        seen = mapping.get(region.area)
        if seen is not None and seen != color:
            raise SegvizError(
                f"area {region.area!r} has conflicting colors {seen} and {color}"
            )
        mapping[region.area] = color
    if not mapping:
        raise SegvizError("atlas has no regions to build a palette from")
    return ColorScale("discrete", discrete_map=mapping, na_color=na_color, na_alpha=na_alpha)


def make_gradient(
    palette: Sequence[str] | Mapping[str, float],
    data_range: tuple[float, float] | None = None,
    *,
    na_color: str = DEFAULT_NA_COLOR,
    na_alpha: float = 1.0,
) -> ColorScale:
    """Build a gradient scale from a color list or named breakpoints.

    A plain color sequence is spaced evenly over ``data_range``; a mapping of
    color to breakpoint is used exactly as given and ``data_range`` is
    ignored, which lets callers pin the scale minimum and maximum.
    """
    if isinstance(palette, Mapping):
        stops = [(float(bp), parse_color(color)) for color, bp in palette.items()]
    else:
        colors = [parse_color(c) for c in palette]
        if len(colors) < 2:
            raise SegvizError("gradient palette needs at least 2 colors")
        if data_range is None:
            raise SegvizError("data_range is required for an evenly spaced palette")
        lo, hi = float(data_range[0]), float(data_range[1])
        if not lo < hi:
            raise SegvizError("data_range must satisfy lo < hi")
        n = len(colors)
        stops = [(lo + k * (hi - lo) / (n - 1), colors[k]) for k in range(n)]
    return ColorScale("gradient", stops=tuple(stops), na_color=na_color, na_alpha=na_alpha)


def map_value(scale: ColorScale, value: float | None) -> RGBA:
    """Map one value through a gradient scale; missing values get the NA color.

    Values outside the stop range clamp to the nearest endpoint.  Between
    stops each 8-bit channel is interpolated linearly and rounded half-up.
    """
    if scale.mode != "gradient":
        raise SegvizError("map_value requires a gradient scale")
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return scale.na_rgba
    v = float(value)
    positions = [p for p, _ in scale.stops]
    colors = [hex_to_rgb(c) for _, c in scale.stops]
    if v <= positions[0]:
        return (*colors[0], 255)
    if v >= positions[-1]:
        return (*colors[-1], 255)
    i = bisect_right(positions, v) - 1
    p0, p1 = positions[i], positions[i + 1]
    c0, c1 = colors[i], colors[i + 1]
    t = (v - p0) / (p1 - p0)
    channels = tuple(round_half_up(a + (b - a) * t) for a, b in zip(c0, c1))
    return (*channels, 255)


def resolve_fill(join, value_column: str | None, scale: ColorScale) -> dict:
    """Apply a scale to every region of a join result.

    Returns a region-reference to RGBA map covering all regions.  Gradient
    scales read ``value_column`` from each region's record; discrete scales
    look regions up by area name and fall back to the NA color.
    """
    fills = {}
    for ref, record in join.pairs:
        if scale.mode == "discrete":
            color = scale.discrete_map.get(ref.area)
            fills[ref] = (*hex_to_rgb(color), 255) if color is not None else scale.na_rgba
        else:
            if value_column is None:
                raise SegvizError("value_column is required for gradient scales")
            if value_column not in record:
                raise SegvizError(f"value column {value_column!r} absent from joined data")
            fills[ref] = map_value(scale, record[value_column])
    return fills
