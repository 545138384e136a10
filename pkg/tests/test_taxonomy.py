import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from datamap.taxonomy import (
    DATA_SENTENCE,
    DecisionList,
    PatternSpec,
    Rule,
    RuleError,
    TaxonomyError,
    load_default_rules,
    load_default_taxonomy,
    parse_rules,
    parse_taxonomy,
    rules_from_list,
    rules_to_list,
    serialize_rules,
    serialize_taxonomy,
    taxonomy_from_dict,
    taxonomy_to_dict,
)

IEA = "sources/organisational/international/other/iea"


def test_bundled_taxonomy_structure():
    tax = load_default_taxonomy()
    assert [c.segment for c in tax.children] == ["sources", "types"]
    leaves = tax.leaf_paths()
    assert "sources/organisational/international/other/world-bank" in leaves
    assert "types/geographic/openstreetmap" in leaves
    assert IEA in leaves
    types = tax.find("types")
    assert [c.segment for c in types.children] == ["resource", "weather", "geographic", "sensor"]
    assert {c.segment for c in tax.find("types/resource").children} == {
        "biomass", "solar", "heat", "mineral", "electricity", "water-use", "land-use",
    }
    assert {c.segment for c in tax.find("sources/organisational/international/un").children} == {
        "un-statistics", "fao", "sdsn", "unesco", "who",
    }
    assert {c.segment for c in tax.find("sources/organisational/international/eu").children} == {
        "eurostat", "edgar", "copernicus", "esdac",
    }
    assert {c.segment for c in tax.find("sources/traditional-statistics").children} == {
        "survey", "census", "interview", "focus-group", "questionnaire",
    }


def test_paths_extend_parent_path():
    for node in load_default_taxonomy().walk():
        for child in node.children:
            expected = f"{node.path}/{child.segment}" if node.path else child.segment
            assert child.path == expected


def _write(tmp_path, data, name="tax.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return p


def test_duplicate_path_rejected(tmp_path):
    data = {"children": [
        {"segment": "sources", "children": [{"segment": "a"}, {"segment": "a"}]},
        {"segment": "types"},
    ]}
    with pytest.raises(TaxonomyError) as err:
        parse_taxonomy(_write(tmp_path, data))
    assert any("sources/a" in v for v in err.value.violations)


def test_missing_types_branch_rejected(tmp_path):
    with pytest.raises(TaxonomyError, match="types"):
        parse_taxonomy(_write(tmp_path, {"children": [{"segment": "sources"}]}))


def test_orphan_node_rejected():
    data = {"children": [
        {"segment": "sources", "children": [{"segment": "x", "path": "elsewhere/x"}]},
        {"segment": "types"},
    ]}
    with pytest.raises(TaxonomyError, match="orphan"):
        taxonomy_from_dict(data)


def test_all_violations_reported():
    data = {"children": [
        {"segment": "sources", "children": [{"segment": "a"}, {"segment": "a"}]},
        {"segment": "extra"},
    ]}
    with pytest.raises(TaxonomyError) as err:
        taxonomy_from_dict(data)
    assert len(err.value.violations) == 3


def test_taxonomy_round_trip():
    tax = load_default_taxonomy()
    assert taxonomy_from_dict(json.loads(serialize_taxonomy(tax))) == tax


def test_bundled_rules_contain_iea_rule():
    rules = load_default_rules()
    iea = rules.rule("iea")
    assert iea.label == IEA
    assert iea.scope == DATA_SENTENCE
    assert iea.patterns == (
        PatternSpec("International Energy Agency", "word-boundary", False),
        PatternSpec("IEA", "word-boundary", True),
    )


def test_bundled_rules_cover_every_leaf():
    tax = load_default_taxonomy()
    labels = {r.label for r in load_default_rules(tax)}
    assert labels == tax.leaf_paths()


def test_abbreviation_defaults():
    assert PatternSpec.default_for("GIS") == PatternSpec("GIS", "word-boundary", True)
    assert PatternSpec.default_for("UNESCO").case_sensitive is True
    assert PatternSpec.default_for("Eurostat").case_sensitive is False
    assert PatternSpec.default_for("UNESCOX").case_sensitive is False  # longer than 6


def test_non_leaf_label_rejected(tmp_path):
    tax = load_default_taxonomy()
    rules = [{"id": "bad", "label": "sources/organisational", "patterns": [{"literal": "x"}]}]
    with pytest.raises(RuleError) as err:
        parse_rules(_write(tmp_path, rules, "rules.json"), tax)
    assert "bad" in str(err.value) and "sources/organisational" in str(err.value)


def test_missing_label_rejected():
    with pytest.raises(RuleError, match="nowhere"):
        rules_from_list([{"id": "r", "label": "nowhere", "patterns": ["x"]}], load_default_taxonomy())


def test_empty_patterns_and_duplicate_ids_rejected():
    tax = load_default_taxonomy()
    with pytest.raises(RuleError) as err:
        rules_from_list(
            [
                {"id": "r", "label": IEA, "patterns": []},
                {"id": "r", "label": IEA, "patterns": ["IEA"]},
            ],
            tax,
        )
    assert len(err.value.violations) == 2


@pytest.mark.parametrize("content", ["", "[]", "  \n"])
def test_empty_rules_file(tmp_path, content):
    assert len(parse_rules(_write(tmp_path, content, "rules.json"), load_default_taxonomy())) == 0


def test_rules_round_trip_preserves_order():
    tax = load_default_taxonomy()
    rules = load_default_rules(tax)
    again = rules_from_list(json.loads(serialize_rules(rules)), tax)
    assert again == rules
    assert [r.id for r in again] == [r.id for r in rules]


# -- random trees and rule sets -----------------------------------------------

segments = st.sampled_from(["a", "b", "c", "d", "e"])


def subtree(depth):
    if depth == 0:
        return st.fixed_dictionaries({"segment": segments})
    return st.fixed_dictionaries(
        {"segment": segments},
        optional={"children": st.lists(subtree(depth - 1), max_size=3, unique_by=lambda d: d["segment"])},
    )


trees = st.tuples(st.lists(subtree(2), max_size=3, unique_by=lambda d: d["segment"]),
                  st.lists(subtree(2), max_size=3, unique_by=lambda d: d["segment"])).map(
    lambda pair: {"name": "t", "children": [
        {"segment": "sources", "children": pair[0]},
        {"segment": "types", "children": pair[1]},
    ]}
)


@given(trees)
def test_random_taxonomy_round_trip(data):
    tax = taxonomy_from_dict(data)
    assert taxonomy_from_dict(taxonomy_to_dict(tax)) == tax
    paths = [n.path for n in tax.walk()]
    assert len(paths) == len(set(paths))


@given(trees, st.data())
def test_leaf_closure(data, draw):
    tax = taxonomy_from_dict(data)
    nodes = [n for n in tax.walk() if n.path]
    chosen = draw.draw(st.lists(st.sampled_from(nodes), max_size=6))
    raw = [{"id": f"r{i}", "label": n.path, "patterns": ["x"]} for i, n in enumerate(chosen)]
    if all(n.is_leaf for n in chosen):
        dlist = rules_from_list(raw, tax)
        assert all(tax.find(r.label).is_leaf for r in dlist)
        assert rules_from_list(rules_to_list(dlist), tax) == dlist
    else:
        with pytest.raises(RuleError):
            rules_from_list(raw, tax)


def test_decision_list_lookup():
    dl = DecisionList((Rule("a", IEA, (PatternSpec("IEA"),)),))
    assert dl.rule("a").label == IEA
    with pytest.raises(KeyError):
        dl.rule("missing")
