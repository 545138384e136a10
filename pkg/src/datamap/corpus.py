"""Bibliographic records and the inclusion/exclusion funnel.

Records come from a UTF-8 CSV export with the header::

    id,title,abstract,keywords,year,doc_type,source_type,pub_stage,
    language,full_text_accessible,sdg_relevant,link

Only ``id``, ``title`` and ``year`` are required. Keywords are separated by
``;`` inside their cell. Row numbers in errors are file line numbers, so the
first data row is row 2.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

COLUMNS = (
    "id",
    "title",
    "abstract",
    "keywords",
    "year",
    "doc_type",
    "source_type",
    "pub_stage",
    "language",
    "full_text_accessible",
    "sdg_relevant",
    "link",
)
REQUIRED_COLUMNS = ("id", "title", "year")

DOC_TYPES = ("article", "conference-paper", "other")
SOURCE_TYPES = ("journal", "conference-proceeding", "other")
PUB_STAGES = ("final", "in-press", "preprint", "other")
SDG_VERDICTS = ("yes", "no", "unreviewed")

# Export spellings seen in bibliographic databases, normalized to enum values.
_ALIASES = {
    "doc_type": {
        "conference paper": "conference-paper",
        "conference_paper": "conference-paper",
        "conference": "conference-paper",
    },
    "source_type": {
        "conference proceeding": "conference-proceeding",
        "conference proceedings": "conference-proceeding",
        "conference_proceeding": "conference-proceeding",
        "proceedings": "conference-proceeding",
    },
    "pub_stage": {
        "article in press": "in-press",
        "in press": "in-press",
        "pre-print": "preprint",
    },
    "language": {"english": "en"},
}

_TRUE = {"true", "yes", "y", "1"}
_FALSE = {"false", "no", "n", "0", ""}


class RecordParseError(ValueError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class DuplicateRecordError(RecordParseError):
    def __init__(self, record_id: str, first_row: int, second_row: int):
        self.record_id = record_id
        self.rows = (first_row, second_row)
        super().__init__(f"duplicate id {record_id!r} (rows {first_row} and {second_row})", second_row, "id")


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    title: str
    year: int
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    doc_type: str = "other"
    source_type: str = "other"
    pub_stage: str = "other"
    language: str = "und"
    full_text_accessible: bool = False
    sdg_relevant: str = "unreviewed"
    link: Optional[str] = None


def _enum(value: str, column: str, allowed: Sequence[str]) -> str:
    key = value.strip().lower()
    key = _ALIASES.get(column, {}).get(key, key)
    return key if key in allowed else "other"


def _bool(value: str, row: int, column: str) -> bool:
    key = value.strip().lower()
    if key in _TRUE:
        return True
    if key in _FALSE:
        return False
    raise RecordParseError(f"expected a boolean, got {value!r}", row, column)


def _record_from_row(row: dict[str, str], line: int) -> DocumentRecord:
    def get(col: str) -> str:
        value = row.get(col)
        return "" if value is None else value

    record_id = get("id")
    if not record_id.strip():
        raise RecordParseError("id must not be empty", line, "id")
    year_text = get("year").strip()
    try:
        year = int(year_text)
    except ValueError:
        raise RecordParseError(f"year must be an integer, got {year_text!r}", line, "year") from None
    if year <= 0:
        raise RecordParseError(f"year must be positive, got {year}", line, "year")
    sdg = get("sdg_relevant").strip().lower() or "unreviewed"
    sdg = {"true": "yes", "false": "no", "y": "yes", "n": "no"}.get(sdg, sdg)
    if sdg not in SDG_VERDICTS:
        raise RecordParseError(f"expected yes/no/unreviewed, got {get('sdg_relevant')!r}", line, "sdg_relevant")
    language = get("language").strip().lower()
    language = _ALIASES["language"].get(language, language) or "und"
    keywords = tuple(k.strip() for k in get("keywords").split(";") if k.strip())
    return DocumentRecord(
        id=record_id,
        title=get("title"),
        year=year,
        abstract=get("abstract"),
        keywords=keywords,
        doc_type=_enum(get("doc_type"), "doc_type", DOC_TYPES),
        source_type=_enum(get("source_type"), "source_type", SOURCE_TYPES),
        pub_stage=_enum(get("pub_stage"), "pub_stage", PUB_STAGES),
        language=language,
        full_text_accessible=_bool(get("full_text_accessible"), line, "full_text_accessible"),
        sdg_relevant=sdg,
        link=get("link") or None,
    )


def read_records(lines: Iterable[str]) -> list[DocumentRecord]:
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise RecordParseError(f"header is missing required columns {missing}", 1)
    records: list[DocumentRecord] = []
    seen: dict[str, int] = {}
    for row in reader:
        line = reader.line_num
        if None in row:
            raise RecordParseError(f"row has {len(header) + len(row[None])} cells, header has {len(header)}", line)
        record = _record_from_row(row, line)
        if record.id in seen:
            raise DuplicateRecordError(record.id, seen[record.id], line)
        seen[record.id] = line
        records.append(record)
    return records


def parse_records(file) -> list[DocumentRecord]:
    with open(file, encoding="utf-8", newline="") as fh:
        return read_records(fh)


def write_records(records: Iterable[DocumentRecord], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.id,
                r.title,
                r.abstract,
                ";".join(r.keywords),
                r.year,
                r.doc_type,
                r.source_type,
                r.pub_stage,
                r.language,
                "true" if r.full_text_accessible else "false",
                r.sdg_relevant,
                r.link or "",
            ]
        )


# -- criteria -----------------------------------------------------------------


@dataclass(frozen=True)
class SelectionCriteria:
    """Inclusion criteria; a ``None`` set admits every value.

    ``min_year`` is exclusive: the default 2015 keeps papers from 2016 on,
    since the SDGs were adopted in 2015.
    """

    min_year: Optional[int] = 2015
    allowed_doc_types: Optional[frozenset[str]] = frozenset({"article", "conference-paper"})
    allowed_source_types: Optional[frozenset[str]] = frozenset({"journal", "conference-proceeding"})
    allowed_pub_stages: Optional[frozenset[str]] = frozenset({"final"})
    allowed_languages: Optional[frozenset[str]] = frozenset({"en"})
    require_full_text: bool = True
    require_sdg_relevance: bool = True

    @classmethod
    def vacuous(cls) -> "SelectionCriteria":
        return cls(None, None, None, None, None, False, False)

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionCriteria":
        base = cls()
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown criteria keys: {sorted(unknown)}")

        def as_set(key):
            if key not in data:
                return getattr(base, key)
            value = data[key]
            return None if value is None else frozenset(str(v) for v in value)

        return cls(
            min_year=data.get("min_year", base.min_year),
            allowed_doc_types=as_set("allowed_doc_types"),
            allowed_source_types=as_set("allowed_source_types"),
            allowed_pub_stages=as_set("allowed_pub_stages"),
            allowed_languages=as_set("allowed_languages"),
            require_full_text=bool(data.get("require_full_text", base.require_full_text)),
            require_sdg_relevance=bool(data.get("require_sdg_relevance", base.require_sdg_relevance)),
        )

    def to_dict(self) -> dict:
        def out(s):
            return None if s is None else sorted(s)

        return {
            "min_year": self.min_year,
            "allowed_doc_types": out(self.allowed_doc_types),
            "allowed_source_types": out(self.allowed_source_types),
            "allowed_pub_stages": out(self.allowed_pub_stages),
            "allowed_languages": out(self.allowed_languages),
            "require_full_text": self.require_full_text,
            "require_sdg_relevance": self.require_sdg_relevance,
        }

    def stages(self) -> list[tuple[str, Callable[[DocumentRecord], bool]]]:
        """Named predicates in the fixed funnel order."""

        def member(allowed, attr):
            return lambda r: allowed is None or getattr(r, attr) in allowed

        return [
            ("year", lambda r: self.min_year is None or r.year > self.min_year),
            ("doc_type", member(self.allowed_doc_types, "doc_type")),
            ("source_type", member(self.allowed_source_types, "source_type")),
            ("pub_stage", member(self.allowed_pub_stages, "pub_stage")),
            ("language", member(self.allowed_languages, "language")),
            ("full_text", lambda r: not self.require_full_text or r.full_text_accessible),
            ("sdg_relevance", lambda r: not self.require_sdg_relevance or r.sdg_relevant == "yes"),
        ]


@dataclass(frozen=True)
class Stage:
    name: str
    input_count: int
    excluded_count: int
    output_count: int


@dataclass(frozen=True)
class FilterReport:
    stages: tuple[Stage, ...]
    retained: tuple[DocumentRecord, ...] = field(default_factory=tuple)
    excluded: dict[str, str] = field(default_factory=dict)  # record id -> stage name

    @property
    def retained_ids(self) -> list[str]:
        return [r.id for r in self.retained]

    def to_dict(self) -> dict:
        return {
            "stages": [
                {
                    "criterion": s.name,
                    "input": s.input_count,
                    "excluded": s.excluded_count,
                    "output": s.output_count,
                }
                for s in self.stages
            ],
            "retained": self.retained_ids,
            "excluded": dict(self.excluded),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def apply_criteria(records: Sequence[DocumentRecord], criteria: SelectionCriteria) -> FilterReport:
    remaining = list(records)
    stages = []
    excluded: dict[str, str] = {}
    for name, keep in criteria.stages():
        kept = []
        for r in remaining:
            if keep(r):
                kept.append(r)
            else:
                excluded[r.id] = name
        stages.append(Stage(name, len(remaining), len(remaining) - len(kept), len(kept)))
        remaining = kept
    return FilterReport(tuple(stages), tuple(remaining), excluded)
