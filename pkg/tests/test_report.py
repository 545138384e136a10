import csv
import io
import json
import math
import re
import xml.etree.ElementTree as ET

import pytest

from datamap.engine import DocumentLabels
from datamap.mapping import aggregate
from datamap.report import (
    TABLE_HEADER,
    SunburstNode,
    SunburstSpec,
    build_sunburst,
    emit_document_table,
    emit_sunburst_json,
    emit_sunburst_svg,
    emit_table,
    layout,
    lighten,
    load_palette,
)
from datamap.taxonomy import load_default_taxonomy, taxonomy_from_dict

SVG = "{http://www.w3.org/2000/svg}"
FLAT = taxonomy_from_dict({"children": [{"segment": "sources"}, {"segment": "types"}]})


def docs(*label_lists):
    return [DocumentLabels(f"d{i}", frozenset(ls)) for i, ls in enumerate(label_lists)]


def mapping_55_45():
    return aggregate(docs(*([["sources"]] * 55 + [["types"]] * 45)), FLAT)


def paths(svg):
    return ET.fromstring(svg).findall(f".//{SVG}path")


def arc_angle_from_geometry(d, cx, cy):
    """Angular extent of a sector path, recovered from its outer arc endpoints."""
    nums = [float(x) for x in re.findall(r"-?\d+(?:\.\d+)?", d)]
    x0, y0 = nums[0], nums[1]
    large = int(nums[5])
    x1, y1 = nums[7], nums[8]
    a0 = math.degrees(math.atan2(x0 - cx, cy - y0)) % 360
    a1 = math.degrees(math.atan2(x1 - cx, cy - y1)) % 360
    extent = (a1 - a0) % 360
    assert (extent > 180) == bool(large)
    return extent


def test_55_45_arcs():
    spec = build_sunburst(mapping_55_45())
    arcs = layout(spec)
    assert [(a.start, a.end) for a in arcs] == [(0.0, 198.0), (198.0, 360.0)]
    svg = emit_sunburst_svg(spec)
    elems = paths(svg)
    assert len(elems) == 2
    extents = [float(p.get("data-end")) - float(p.get("data-start")) for p in elems]
    assert extents[0] == pytest.approx(198, abs=1e-6)
    assert extents[1] == pytest.approx(162, abs=1e-6)
    root = ET.fromstring(svg)
    c = float(root.get("width")) / 2
    geo = [arc_angle_from_geometry(p.get("d"), c, c) for p in elems]
    assert geo[0] == pytest.approx(198, abs=1e-5)
    assert geo[1] == pytest.approx(162, abs=1e-5)


def test_single_leaf_full_annulus():
    m = aggregate(docs(["sources"]), FLAT)
    spec = build_sunburst(m)
    assert [c.path for c in spec.root.children] == ["sources"]
    (path,) = paths(emit_sunburst_svg(spec))
    assert (float(path.get("data-start")), float(path.get("data-end"))) == (0.0, 360.0)
    d = path.get("d")
    # outer and inner circles, each closed
    assert d.count("M") == 2 and d.count("Z") == 2 and d.count("A") == 4


def test_svg_is_deterministic_and_static():
    spec = build_sunburst(mapping_55_45())
    a, b = emit_sunburst_svg(spec), emit_sunburst_svg(spec)
    assert a == b
    assert "<script" not in a
    ET.fromstring(a)


def test_empty_mapping():
    m = aggregate([], FLAT)
    data = json.loads(emit_sunburst_json(m))
    assert data["empty"] is True and data["root"]["children"] == []
    svg = emit_sunburst_svg(build_sunburst(m))
    assert paths(svg) == [] and "no data entities found" in svg
    assert emit_table(m) == ",".join(TABLE_HEADER) + "\n"


def test_pruning_and_order():
    tax = load_default_taxonomy()
    m = aggregate(docs(["types/weather", "sources/organisational/national"], ["types/sensor"]), tax)
    spec = build_sunburst(m)

    def walk(node):
        yield node
        for c in node.children:
            yield from walk(c)

    nodes = list(walk(spec.root))
    assert all(n.value > 0 for n in nodes)
    assert [c.path for c in spec.root.children] == ["sources", "types"]
    assert [c.path for c in spec.root.children[1].children] == ["types/weather", "types/sensor"]
    assert spec.root.depth() == 3


def test_json_round_trip_and_depth(fixture_dir):
    tax = load_default_taxonomy()
    m = aggregate(docs(["sources/organisational/international/other/iea"]), tax)
    spec = build_sunburst(m)
    assert SunburstSpec.from_dict(json.loads(spec.to_json())) == spec
    assert spec.root.depth() == tax.height()


def test_values_roll_up():
    tax = load_default_taxonomy()
    leaves = sorted(tax.leaf_paths())
    m = aggregate(docs(leaves[:5], leaves[3:9], leaves[-2:]), tax)

    def check(node):
        if node.children:
            assert node.value == sum(c.value for c in node.children)
        for c in node.children:
            check(c)

    check(build_sunburst(m).root)


def test_label_min_angle():
    m = aggregate(docs(*([["sources"]] * 97 + [["types"]] * 3)), FLAT)
    svg = emit_sunburst_svg(build_sunburst(m, label_min_angle=15))
    labels = [t.text for t in ET.fromstring(svg).iter(f"{SVG}text")]
    assert labels == ["sources"]  # types spans 10.8 degrees
    svg = emit_sunburst_svg(build_sunburst(m, label_min_angle=10.8))
    assert [t.text for t in ET.fromstring(svg).iter(f"{SVG}text")] == ["sources", "types"]


def test_names_are_escaped():
    spec = SunburstSpec(SunburstNode("r", "", 1, (SunburstNode('a<b & "c"', "a", 1),)))
    svg = emit_sunburst_svg(spec)
    assert ET.fromstring(svg).find(f".//{SVG}path").get("data-path") == "a"
    assert 'a&lt;b &amp; "c"' in svg


def test_invalid_geometry_rejected():
    with pytest.raises(ValueError):
        build_sunburst(mapping_55_45(), ring_width=0)
    with pytest.raises(ValueError):
        build_sunburst(mapping_55_45(), palette=())


def test_lighten():
    assert lighten("#000000", 0.5) == "#808080"
    assert lighten("#fff", 0.3) == "#ffffff"


def test_table_hand_example(small_taxonomy):
    m = aggregate(docs(["sources/other/iea"], ["sources/other/iea", "sources/eu/eurostat"]), small_taxonomy)
    rows = list(csv.reader(io.StringIO(emit_table(m))))
    assert rows[0] == list(TABLE_HEADER)
    assert rows[1:] == [
        ["sources", "1", "3", "100.0"],
        ["sources/eu", "2", "1", "33.3"],
        ["sources/eu/eurostat", "3", "1", "100.0"],
        ["sources/other", "2", "2", "66.7"],
        ["sources/other/iea", "3", "2", "100.0"],
    ]


def test_table_top_level_percentages():
    rows = list(csv.DictReader(io.StringIO(emit_table(mapping_55_45()))))
    assert [(r["path"], r["percent_of_parent"]) for r in rows] == [("sources", "55.0"), ("types", "45.0")]


def test_document_table():
    labels = [
        DocumentLabels("a", frozenset({"types/x", "sources/y"})),
        DocumentLabels("b"),
    ]
    assert emit_document_table(labels) == "record_id,label\na,sources/y\na,types/x\nb,\n"


def test_load_palette(tmp_path):
    (tmp_path / "p.json").write_text('["#112233", "#abc"]')
    (tmp_path / "p.txt").write_text("#112233\n\n#445566\n")
    (tmp_path / "bad.txt").write_text("red\n")
    assert load_palette(tmp_path / "p.json") == ("#112233", "#abc")
    assert load_palette(tmp_path / "p.txt") == ("#112233", "#445566")
    with pytest.raises(ValueError):
        load_palette(tmp_path / "bad.txt")


def test_palette_applies_to_top_level():
    spec = build_sunburst(mapping_55_45(), palette=("#112233", "#445566"))
    assert [p.get("fill") for p in paths(emit_sunburst_svg(spec))] == ["#112233", "#445566"]
