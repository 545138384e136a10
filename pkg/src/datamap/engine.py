"""Decision-list labeling of documents from their data sentences.

Rules are tried in list order. Within one rule every pattern competes for
each position (leftmost, then longest, then earliest pattern); characters
consumed by a rule are masked so later rules cannot claim them again.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .taxonomy import DATA_SENTENCE, WORD_BOUNDARY, DecisionList, PatternSpec, Rule
from .textproc import SentenceContext


@dataclass(frozen=True, order=True)
class MatchSpan:
    sentence_index: int
    start: int
    end: int
    rule_id: str
    pattern_literal: str


@dataclass(frozen=True)
class DocumentLabels:
    record_id: str
    labels: frozenset[str] = frozenset()
    evidence: dict[str, tuple[MatchSpan, ...]] = field(default_factory=dict)

    def spans(self) -> list[tuple[str, MatchSpan]]:
        """All evidence as (label, span), ordered by position in the document."""
        items = [(label, span) for label, spans in self.evidence.items() for span in spans]
        items.sort(key=lambda item: (item[1].sentence_index, item[1].start, item[1].end))
        return items

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "labels": sorted(self.labels),
            "evidence": [
                {
                    "sentence_index": s.sentence_index,
                    "start": s.start,
                    "end": s.end,
                    "rule_id": s.rule_id,
                    "label": label,
                    "pattern_literal": s.pattern_literal,
                }
                for label, s in self.spans()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DocumentLabels":
        evidence: dict[str, list[MatchSpan]] = {}
        for e in data.get("evidence", []):
            span = MatchSpan(e["sentence_index"], e["start"], e["end"], e["rule_id"], e.get("pattern_literal", ""))
            evidence.setdefault(e["label"], []).append(span)
        return cls(
            record_id=data["record_id"],
            labels=frozenset(data.get("labels", [])),
            evidence={k: tuple(v) for k, v in evidence.items()},
        )


@lru_cache(maxsize=4096)
def compile_pattern(pattern: PatternSpec) -> re.Pattern:
    """Regex yielding every (possibly overlapping) occurrence as group 1."""
    body = re.escape(pattern.literal)
    if pattern.match_mode == WORD_BOUNDARY:
        expr = rf"(?<!\w)(?=({body})(?!\w))"
    else:
        expr = rf"(?=({body}))"
    return re.compile(expr, 0 if pattern.case_sensitive else re.IGNORECASE)


def _overlaps(mask: Optional[bytearray], start: int, end: int) -> bool:
    return mask is not None and any(mask[start:end])


def match_rule(rule: Rule, sentence: SentenceContext, mask: Optional[bytearray] = None) -> list[MatchSpan]:
    """Non-overlapping occurrences of the rule's patterns in one sentence.

    ``mask`` marks characters already consumed by earlier rules; candidate
    occurrences touching a masked character are discarded.
    """
    if rule.scope == DATA_SENTENCE and not sentence.mentions_data:
        return []
    text = sentence.text
    candidates = []
    for k, pattern in enumerate(rule.patterns):
        for m in compile_pattern(pattern).finditer(text):
            start, end = m.span(1)
            if end > start:
                candidates.append((start, -(end - start), k, end))
    candidates.sort()
    spans = []
    cursor = 0
    for start, _, k, end in candidates:
        if start < cursor or _overlaps(mask, start, end):
            continue
        spans.append(MatchSpan(sentence.index, start, end, rule.id, rule.patterns[k].literal))
        cursor = end
    return spans


def apply_decision_list(
    dlist: DecisionList, sentences: Sequence[SentenceContext], record_id: Optional[str] = None
) -> DocumentLabels:
    if record_id is None:
        record_id = sentences[0].record_id if sentences else ""
    masks = {s.index: bytearray(len(s.text)) for s in sentences}
    evidence: dict[str, list[MatchSpan]] = {}
    for rule in dlist.rules:
        for sentence in sentences:
            spans = match_rule(rule, sentence, masks[sentence.index])
            if not spans:
                continue
            mask = masks[sentence.index]
            for span in spans:
                mask[span.start : span.end] = b"\x01" * (span.end - span.start)
            evidence.setdefault(rule.label, []).extend(spans)
    return DocumentLabels(
        record_id=record_id,
        labels=frozenset(evidence),
        evidence={label: tuple(sorted(spans)) for label, spans in evidence.items()},
    )


def label_corpus(
    documents: Iterable[tuple[str, Sequence[SentenceContext]]], dlist: DecisionList, parallelism: int = 1
) -> list[DocumentLabels]:
    """Label each (record_id, sentences) pair; output follows input order."""
    docs = list(documents)
    if parallelism <= 1 or len(docs) < 2:
        return [apply_decision_list(dlist, sents, rid) for rid, sents in docs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda doc: apply_decision_list(dlist, doc[1], doc[0]), docs))


def labels_to_jsonl(labels: Iterable[DocumentLabels]) -> str:
    return "".join(json.dumps(dl.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for dl in labels)


def labels_from_jsonl(text: str) -> list[DocumentLabels]:
    return [DocumentLabels.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
