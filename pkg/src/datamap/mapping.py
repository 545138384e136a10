"""Aggregation of document labels into the hierarchical data mapping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .engine import DocumentLabels
from .taxonomy import TaxonomyNode, taxonomy_from_dict, taxonomy_to_dict

DOCUMENT_FREQUENCY = "document-frequency"
MENTION_FREQUENCY = "mention-frequency"
COUNTING_MODES = (DOCUMENT_FREQUENCY, MENTION_FREQUENCY)


class AggregationError(ValueError):
    def __init__(self, record_id: str, path: str):
        self.record_id = record_id
        self.path = path
        super().__init__(f"document {record_id!r}: label {path!r} is not a taxonomy leaf")


def rollup(taxonomy: TaxonomyNode, leaf_counts: Mapping[str, int]) -> dict[str, int]:
    rolled: dict[str, int] = {}

    def visit(node: TaxonomyNode) -> int:
        if node.is_leaf:
            total = leaf_counts.get(node.path, 0)
        else:
            total = sum(visit(c) for c in node.children)
        rolled[node.path] = total
        return total

    visit(taxonomy)
    return rolled


@dataclass(frozen=True)
class DataMapping:
    taxonomy: TaxonomyNode
    counting_mode: str
    leaf_counts: dict[str, int]
    rolled_counts: dict[str, int]
    corpus_size: int = 0
    unlabeled_count: int = 0

    def count(self, path: str) -> int:
        return self.rolled_counts[path]

    def merge(self, other: "DataMapping") -> "DataMapping":
        """Exact merge of two partial aggregations over the same taxonomy."""
        if other.taxonomy != self.taxonomy or other.counting_mode != self.counting_mode:
            raise ValueError("cannot merge mappings with different taxonomy or counting mode")
        leaves = {p: self.leaf_counts[p] + other.leaf_counts[p] for p in self.leaf_counts}
        return DataMapping(
            self.taxonomy,
            self.counting_mode,
            leaves,
            rollup(self.taxonomy, leaves),
            self.corpus_size + other.corpus_size,
            self.unlabeled_count + other.unlabeled_count,
        )

    def to_dict(self) -> dict:
        order = [n.path for n in self.taxonomy.walk()]
        return {
            "counting_mode": self.counting_mode,
            "corpus_size": self.corpus_size,
            "unlabeled_count": self.unlabeled_count,
            "leaf_counts": {p: self.leaf_counts[p] for p in order if p in self.leaf_counts},
            "rolled_counts": {p: self.rolled_counts[p] for p in order},
            "taxonomy": taxonomy_to_dict(self.taxonomy),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "DataMapping":
        taxonomy = taxonomy_from_dict(data["taxonomy"])
        leaves = {p: 0 for p in taxonomy.leaf_paths()}
        leaves.update(data.get("leaf_counts", {}))
        return cls(
            taxonomy,
            data.get("counting_mode", DOCUMENT_FREQUENCY),
            leaves,
            rollup(taxonomy, leaves),
            data.get("corpus_size", 0),
            data.get("unlabeled_count", 0),
        )


def aggregate(
    labels: Iterable[DocumentLabels], taxonomy: TaxonomyNode, mode: str = DOCUMENT_FREQUENCY
) -> DataMapping:
    if mode not in COUNTING_MODES:
        raise ValueError(f"unknown counting mode {mode!r}")
    leaves = {p: 0 for p in taxonomy.leaf_paths()}
    corpus_size = unlabeled = 0
    for doc in labels:
        corpus_size += 1
        if not doc.labels:
            unlabeled += 1
        for path in doc.labels:
            if path not in leaves:
                raise AggregationError(doc.record_id, path)
            if mode == DOCUMENT_FREQUENCY:
                leaves[path] += 1
            else:
                leaves[path] += len(doc.evidence.get(path, ()))
    return DataMapping(taxonomy, mode, leaves, rollup(taxonomy, leaves), corpus_size, unlabeled)


def round_half_up(value: Fraction, digits: int = 1) -> Fraction:
    scale = 10**digits
    scaled = value * scale
    return Fraction((scaled + Fraction(1, 2)).__floor__(), scale)


def format_percent(ratio: Fraction) -> str:
    """Percentage of ``ratio`` (a fraction of 1) with one half-up rounded decimal."""
    pct = round_half_up(ratio * 100, 1)
    whole, tenth = divmod(int(pct * 10), 10)
    return f"{whole}.{tenth}"


@dataclass(frozen=True)
class ProportionRow:
    path: str
    count: int
    ratio: Fraction

    @property
    def percentage(self) -> float:
        return float(self.ratio * 100)

    @property
    def display(self) -> str:
        return format_percent(self.ratio)


@dataclass(frozen=True)
class ProportionTable:
    node: str
    total: int
    rows: tuple[ProportionRow, ...] = field(default_factory=tuple)

    @property
    def zero_total(self) -> bool:
        return self.total == 0

    def ranked(self) -> list[ProportionRow]:
        """Rows by descending count, ties kept in taxonomy order."""
        return sorted(self.rows, key=lambda r: -r.count)


def proportions(mapping: DataMapping, path: str) -> ProportionTable:
    node = mapping.taxonomy.find(path)
    if node is None:
        raise KeyError(path)
    total = mapping.rolled_counts[path]
    if total == 0:
        return ProportionTable(path, 0)
    rows = tuple(
        ProportionRow(c.path, mapping.rolled_counts[c.path], Fraction(mapping.rolled_counts[c.path], total))
        for c in node.children
    )
    return ProportionTable(path, total, rows)


def leaf_ranking(mapping: DataMapping, under: str = "") -> list[tuple[str, int]]:
    """Leaves below ``under`` with count > 0, by descending count (stable)."""
    node = mapping.taxonomy.find(under)
    if node is None:
        raise KeyError(under)
    leaves = [(leaf.path, mapping.leaf_counts[leaf.path]) for leaf in node.leaves()]
    return sorted((item for item in leaves if item[1] > 0), key=lambda item: -item[1])
