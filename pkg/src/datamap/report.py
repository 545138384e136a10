"""Tables and sunburst charts for a data mapping."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from .engine import DocumentLabels
from .mapping import DataMapping, format_percent
from .taxonomy import parent_path

DEFAULT_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


@dataclass(frozen=True)
class SunburstNode:
    name: str
    path: str
    value: int
    children: tuple["SunburstNode", ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "value": self.value,
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SunburstNode":
        return cls(
            data["name"],
            data["path"],
            int(data["value"]),
            tuple(cls.from_dict(c) for c in data.get("children", [])),
        )

    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True)
class SunburstSpec:
    root: SunburstNode
    palette: tuple[str, ...] = DEFAULT_PALETTE
    inner_radius: float = 40.0
    ring_width: float = 60.0
    label_min_angle: float = 10.0

    @property
    def empty(self) -> bool:
        return self.root.value == 0

    def to_dict(self) -> dict:
        return {
            "empty": self.empty,
            "palette": list(self.palette),
            "inner_radius": self.inner_radius,
            "ring_width": self.ring_width,
            "label_min_angle": self.label_min_angle,
            "root": self.root.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SunburstSpec":
        return cls(
            SunburstNode.from_dict(data["root"]),
            tuple(data.get("palette", DEFAULT_PALETTE)),
            float(data.get("inner_radius", 40.0)),
            float(data.get("ring_width", 60.0)),
            float(data.get("label_min_angle", 10.0)),
        )


def build_sunburst(
    mapping: DataMapping,
    palette: Sequence[str] = DEFAULT_PALETTE,
    inner_radius: float = 40.0,
    ring_width: float = 60.0,
    label_min_angle: float = 10.0,
) -> SunburstSpec:
    if inner_radius < 0 or ring_width <= 0:
        raise ValueError("inner_radius must be >= 0 and ring_width > 0")
    if not palette:
        raise ValueError("palette must not be empty")

    def convert(node) -> SunburstNode:
        kids = tuple(convert(c) for c in node.children if mapping.rolled_counts[c.path] > 0)
        return SunburstNode(node.display_name, node.path, mapping.rolled_counts[node.path], kids)

    return SunburstSpec(convert(mapping.taxonomy), tuple(palette), inner_radius, ring_width, label_min_angle)


def emit_sunburst_json(mapping: DataMapping, **options) -> str:
    return build_sunburst(mapping, **options).to_json()


# -- geometry -----------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    node: SunburstNode
    depth: int
    start: float  # degrees clockwise from 12 o'clock
    end: float
    color: str

    @property
    def extent(self) -> float:
        return self.end - self.start


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    c = color.lstrip("#")
    if len(c) == 3:
        c = "".join(ch * 2 for ch in c)
    return int(c[0:2], 16), int(c[2:4], 16), int(c[4:6], 16)


def lighten(color: str, amount: float) -> str:
    r, g, b = _hex_to_rgb(color)
    mix = lambda v: round(v + (255 - v) * amount)  # noqa: E731
    return f"#{mix(r):02x}{mix(g):02x}{mix(b):02x}"


def layout(spec: SunburstSpec) -> list[Arc]:
    """Arcs for every non-root node in pre-order.

    A child's extent is its share of the parent's value times the parent's
    extent, so siblings exactly tile their parent. Angles are carried as
    fractions of a turn until the end to keep that sum exact.
    """
    arcs: list[Arc] = []

    def visit(node: SunburstNode, start: Fraction, extent: Fraction, depth: int, base: Optional[str]):
        cursor = start
        for i, child in enumerate(node.children):
            share = extent * Fraction(child.value, node.value) if node.value else Fraction(0)
            color_base = spec.palette[i % len(spec.palette)] if depth == 0 else base
            color = lighten(color_base, min(0.7, 0.18 * depth))
            arcs.append(Arc(child, depth + 1, float(cursor * 360), float((cursor + share) * 360), color))
            visit(child, cursor, share, depth + 1, color_base)
            cursor += share

    visit(spec.root, Fraction(0), Fraction(1), 0, None)
    return arcs


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _point(cx: float, cy: float, r: float, degrees: float) -> tuple[str, str]:
    theta = math.radians(degrees)
    return _fmt(cx + r * math.sin(theta)), _fmt(cy - r * math.cos(theta))


def sector_path(cx: float, cy: float, r0: float, r1: float, start: float, end: float) -> str:
    extent = end - start
    if extent >= 360.0 - 1e-9:
        # full annulus: two half circles per radius, inner ring cut out by evenodd
        parts = []
        for r in (r1, r0):
            if r <= 0:
                continue
            top = _point(cx, cy, r, 0)
            bottom = _point(cx, cy, r, 180)
            rr = _fmt(r)
            parts.append(
                f"M{top[0]} {top[1]}A{rr} {rr} 0 1 1 {bottom[0]} {bottom[1]}"
                f"A{rr} {rr} 0 1 1 {top[0]} {top[1]}Z"
            )
        return "".join(parts)
    large = 1 if extent > 180 else 0
    o0, o1 = _point(cx, cy, r1, start), _point(cx, cy, r1, end)
    i0, i1 = _point(cx, cy, r0, end), _point(cx, cy, r0, start)
    d = f"M{o0[0]} {o0[1]}A{_fmt(r1)} {_fmt(r1)} 0 {large} 1 {o1[0]} {o1[1]}"
    if r0 > 0:
        d += f"L{i0[0]} {i0[1]}A{_fmt(r0)} {_fmt(r0)} 0 {large} 0 {i1[0]} {i1[1]}Z"
    else:
        d += f"L{_fmt(cx)} {_fmt(cy)}Z"
    return d


def emit_sunburst_svg(spec: SunburstSpec, font_size: float = 10.0) -> str:
    depth = spec.root.depth()
    radius = spec.inner_radius + max(depth, 1) * spec.ring_width
    margin = 10.0
    size = 2 * (radius + margin)
    cx = cy = size / 2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(size)}" height="{_fmt(size)}" '
        f'viewBox="0 0 {_fmt(size)} {_fmt(size)}">',
        f"<title>{escape(spec.root.name)}</title>",
    ]
    if spec.empty:
        out.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" font-size="{_fmt(font_size)}">'
            "no data entities found</text>"
        )
        out.append("</svg>")
        return "\n".join(out) + "\n"
    labels = []
    out.append('<g stroke="#ffffff" stroke-width="1" fill-rule="evenodd">')
    for arc in layout(spec):
        r0 = spec.inner_radius + (arc.depth - 1) * spec.ring_width
        r1 = r0 + spec.ring_width
        d = sector_path(cx, cy, r0, r1, arc.start, arc.end)
        out.append(
            f'<path d="{d}" fill="{arc.color}" data-path={quoteattr(arc.node.path)} '
            f'data-value="{arc.node.value}" data-start="{arc.start!r}" data-end="{arc.end!r}">'
            f"<title>{escape(arc.node.name)}: {arc.node.value}</title></path>"
        )
        if arc.extent >= spec.label_min_angle:
            x, y = _point(cx, cy, (r0 + r1) / 2, (arc.start + arc.end) / 2)
            labels.append(
                f'<text x="{x}" y="{y}" text-anchor="middle" dominant-baseline="middle" '
                f'font-size="{_fmt(font_size)}">{escape(arc.node.name)}</text>'
            )
    out.append("</g>")
    if labels:
        out.append('<g font-family="sans-serif" fill="#222222">')
        out.extend(labels)
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- tables -------------------------------------------------------------------

TABLE_HEADER = ("path", "depth", "count", "percent_of_parent")


def emit_table(mapping: DataMapping) -> str:
    """One row per taxonomy node with a non-zero count, in pre-order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for node in mapping.taxonomy.walk():
        if not node.path:
            continue
        count = mapping.rolled_counts[node.path]
        if count == 0:
            continue
        parent_total = mapping.rolled_counts[parent_path(node.path)]
        writer.writerow([node.path, node.depth, count, format_percent(Fraction(count, parent_total))])
    return buf.getvalue()


def emit_document_table(labels: Iterable[DocumentLabels]) -> str:
    """record_id,label rows; documents without labels get one empty-label row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("record_id", "label"))
    for doc in labels:
        if not doc.labels:
            writer.writerow((doc.record_id, ""))
        for label in sorted(doc.labels):
            writer.writerow((doc.record_id, label))
    return buf.getvalue()


def load_palette(file) -> tuple[str, ...]:
    """Colors from a JSON array or one ``#rrggbb`` per line."""
    with open(file, encoding="utf-8") as fh:
        text = fh.read()
    try:
        colors = json.loads(text)
    except json.JSONDecodeError:
        colors = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("//")]
    if not isinstance(colors, list) or not colors:
        raise ValueError(f"{file}: palette must be a non-empty list of colors")
    for c in colors:
        try:
            _hex_to_rgb(str(c))
        except ValueError:
            raise ValueError(f"{file}: invalid color {c!r}") from None
    return tuple(str(c) for c in colors)
