"""Hierarchical data taxonomy and the decision-list rules bound to it.

Both live in separate JSON files so a researcher can amend either one and
re-run the pipeline. A taxonomy file is a nested object::

    {"name": "SDG 7 data", "children": [
        {"name": "Data sources", "segment": "sources", "children": [...]},
        {"name": "Data types", "segment": "types", "children": [...]}]}

A rules file is a JSON array whose order is the decision-list order::

    [{"id": "iea", "label": "sources/.../iea", "scope": "data-sentence",
      "patterns": [{"literal": "IEA", "match_mode": "word-boundary",
                    "case_sensitive": true}]}]
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional, Union

ROOT_BRANCHES = ("sources", "types")

WORD_BOUNDARY = "word-boundary"
SUBSTRING = "substring"
MATCH_MODES = (WORD_BOUNDARY, SUBSTRING)

DATA_SENTENCE = "data-sentence"
WHOLE_DOCUMENT = "whole-document"
SCOPES = (DATA_SENTENCE, WHOLE_DOCUMENT)

ABBREVIATION_MAX_LEN = 6

PathLike = Union[str, Path]


class TaxonomyError(ValueError):
    """Raised when a taxonomy file violates the tree invariants.

    ``violations`` lists every problem found, not only the first one.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid taxonomy: " + "; ".join(self.violations))


class RuleError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid rules: " + "; ".join(self.violations))


@dataclass(frozen=True)
class TaxonomyNode:
    path: str
    display_name: str
    children: tuple["TaxonomyNode", ...] = ()

    @property
    def segment(self) -> str:
        return self.path.rsplit("/", 1)[-1]

    @property
    def depth(self) -> int:
        return 0 if not self.path else self.path.count("/") + 1

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["TaxonomyNode"]:
        """Yield nodes in pre-order (file order), starting with ``self``."""
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self) -> list["TaxonomyNode"]:
        return [n for n in self.walk() if n.is_leaf]

    def leaf_paths(self) -> set[str]:
        return {n.path for n in self.walk() if n.is_leaf}

    def index(self) -> dict[str, "TaxonomyNode"]:
        return {n.path: n for n in self.walk()}

    def find(self, path: str) -> Optional["TaxonomyNode"]:
        for node in self.walk():
            if node.path == path:
                return node
        return None

    def height(self) -> int:
        """Number of levels below this node (0 for a leaf)."""
        if not self.children:
            return 0
        return 1 + max(c.height() for c in self.children)


def parent_path(path: str) -> str:
    return path.rsplit("/", 1)[0] if "/" in path else ""


# -- taxonomy parsing ---------------------------------------------------------


def _build_node(raw, parent: str, where: str, violations: list[str], seen: dict[str, str]):
    if not isinstance(raw, dict):
        violations.append(f"{where}: node must be an object")
        return None
    segment = raw.get("segment")
    name = raw.get("name")
    if not isinstance(segment, str) or not segment or "/" in segment:
        violations.append(f"{where}: missing or invalid segment {segment!r}")
        return None
    path = f"{parent}/{segment}" if parent else segment
    declared = raw.get("path")
    if declared is not None and declared != path:
        # an explicit path that does not hang off its parent
        violations.append(f"orphan node {declared!r}: parent is {parent or '<root>'!r}")
    if path in seen:
        violations.append(f"duplicate path {path!r} ({seen[path]} and {where})")
    else:
        seen[path] = where
    if name is None:
        name = segment
    elif not isinstance(name, str):
        violations.append(f"{where}: name must be a string")
        name = segment
    children = []
    raw_children = raw.get("children", [])
    if not isinstance(raw_children, list):
        violations.append(f"{path!r}: children must be a list")
        raw_children = []
    for i, child in enumerate(raw_children):
        built = _build_node(child, path, f"{path}[{i}]", violations, seen)
        if built is not None:
            children.append(built)
    return TaxonomyNode(path=path, display_name=name, children=tuple(children))


def taxonomy_from_dict(data) -> TaxonomyNode:
    violations: list[str] = []
    if not isinstance(data, dict):
        raise TaxonomyError(["taxonomy root must be an object"])
    raw_children = data.get("children", [])
    if not isinstance(raw_children, list):
        raise TaxonomyError(["root children must be a list"])
    seen: dict[str, str] = {}
    children = []
    for i, child in enumerate(raw_children):
        built = _build_node(child, "", f"root[{i}]", violations, seen)
        if built is not None:
            children.append(built)
    branches = [c.segment for c in children]
    for branch in ROOT_BRANCHES:
        if branch not in branches:
            violations.append(f"missing root branch {branch!r}")
    for branch in branches:
        if branch not in ROOT_BRANCHES:
            violations.append(f"unexpected root branch {branch!r}")
    if violations:
        raise TaxonomyError(violations)
    return TaxonomyNode(path="", display_name=data.get("name") or "root", children=tuple(children))


def parse_taxonomy(file: PathLike) -> TaxonomyNode:
    with open(file, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TaxonomyError([f"{file}: not valid JSON ({exc})"]) from None
    return taxonomy_from_dict(data)


def taxonomy_to_dict(root: TaxonomyNode) -> dict:
    def node(n: TaxonomyNode) -> dict:
        out = {"name": n.display_name, "segment": n.segment}
        if n.children:
            out["children"] = [node(c) for c in n.children]
        return out

    return {"name": root.display_name, "children": [node(c) for c in root.children]}


def serialize_taxonomy(root: TaxonomyNode) -> str:
    return json.dumps(taxonomy_to_dict(root), indent=2, ensure_ascii=False) + "\n"


# -- rules --------------------------------------------------------------------


def is_abbreviation(literal: str) -> bool:
    return (
        len(literal) <= ABBREVIATION_MAX_LEN
        and any(ch.isalpha() for ch in literal)
        and literal == literal.upper()
    )


@dataclass(frozen=True)
class PatternSpec:
    literal: str
    match_mode: str = WORD_BOUNDARY
    case_sensitive: bool = False

    @classmethod
    def default_for(cls, literal: str) -> "PatternSpec":
        """Pattern with defaults: abbreviations match case-sensitively."""
        return cls(literal, WORD_BOUNDARY, is_abbreviation(literal))


@dataclass(frozen=True)
class Rule:
    id: str
    label: str
    patterns: tuple[PatternSpec, ...]
    scope: str = DATA_SENTENCE


@dataclass(frozen=True)
class DecisionList:
    rules: tuple[Rule, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


def _pattern_from_dict(raw, where: str, violations: list[str]) -> Optional[PatternSpec]:
    if isinstance(raw, str):
        raw = {"literal": raw}
    if not isinstance(raw, dict):
        violations.append(f"{where}: pattern must be an object")
        return None
    literal = raw.get("literal")
    if not isinstance(literal, str) or not literal:
        violations.append(f"{where}: pattern literal must be a non-empty string")
        return None
    default = PatternSpec.default_for(literal)
    mode = raw.get("match_mode", default.match_mode)
    if mode not in MATCH_MODES:
        violations.append(f"{where}: unknown match_mode {mode!r}")
        return None
    case_sensitive = raw.get("case_sensitive", default.case_sensitive)
    if not isinstance(case_sensitive, bool):
        violations.append(f"{where}: case_sensitive must be a boolean")
        return None
    return PatternSpec(literal, mode, case_sensitive)


def rules_from_list(data, taxonomy: TaxonomyNode) -> DecisionList:
    if not isinstance(data, list):
        raise RuleError(["rules file must contain a JSON array"])
    nodes = taxonomy.index()
    violations: list[str] = []
    rules: list[Rule] = []
    ids: set[str] = set()
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            violations.append(f"rule #{i}: must be an object")
            continue
        rule_id = raw.get("id")
        if not isinstance(rule_id, str) or not rule_id:
            violations.append(f"rule #{i}: missing id")
            continue
        if rule_id in ids:
            violations.append(f"rule {rule_id!r}: duplicate id")
        ids.add(rule_id)
        label = raw.get("label")
        node = nodes.get(label) if isinstance(label, str) else None
        if node is None:
            violations.append(f"rule {rule_id!r}: label {label!r} is not a taxonomy node")
        elif not node.is_leaf:
            violations.append(f"rule {rule_id!r}: label {label!r} is not a leaf")
        scope = raw.get("scope", DATA_SENTENCE)
        if scope not in SCOPES:
            violations.append(f"rule {rule_id!r}: unknown scope {scope!r}")
        raw_patterns = raw.get("patterns")
        if not isinstance(raw_patterns, list) or not raw_patterns:
            violations.append(f"rule {rule_id!r}: patterns must be a non-empty list")
            continue
        patterns = []
        for j, rp in enumerate(raw_patterns):
            p = _pattern_from_dict(rp, f"rule {rule_id!r} pattern #{j}", violations)
            if p is not None:
                patterns.append(p)
        rules.append(Rule(rule_id, label, tuple(patterns), scope))
    if violations:
        raise RuleError(violations)
    return DecisionList(tuple(rules))


def parse_rules(file: PathLike, taxonomy: TaxonomyNode) -> DecisionList:
    with open(file, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        return DecisionList()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleError([f"{file}: not valid JSON ({exc})"]) from None
    return rules_from_list(data, taxonomy)


def rules_to_list(dlist: DecisionList) -> list[dict]:
    return [
        {
            "id": r.id,
            "label": r.label,
            "scope": r.scope,
            "patterns": [
                {"literal": p.literal, "match_mode": p.match_mode, "case_sensitive": p.case_sensitive}
                for p in r.patterns
            ],
        }
        for r in dlist.rules
    ]


def serialize_rules(dlist: DecisionList) -> str:
    return json.dumps(rules_to_list(dlist), indent=2, ensure_ascii=False) + "\n"


# -- bundled SDG 7 assets -----------------------------------------------------


def default_taxonomy_path() -> Path:
    return Path(str(resources.files("datamap") / "data" / "sdg7_taxonomy.json"))


def default_rules_path() -> Path:
    return Path(str(resources.files("datamap") / "data" / "sdg7_rules.json"))


def load_default_taxonomy() -> TaxonomyNode:
    return parse_taxonomy(default_taxonomy_path())


def load_default_rules(taxonomy: Optional[TaxonomyNode] = None) -> DecisionList:
    return parse_rules(default_rules_path(), taxonomy or load_default_taxonomy())
