"""Run configuration and the pipeline stages behind the CLI.

Every stage reads and writes plain files in ``out_dir``, so running the
subcommands one after another produces the same files as ``run``:

=================  ======================================
filter             filter_report.json
ingest             ingest.json, text/<record_id>.txt
label              labels.jsonl
map                mapping.json, mapping.csv
report             sunburst.json, sunburst.svg, documents.csv
run                all of the above, plus manifest.json
=================  ======================================
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import FilterReport, RecordParseError, SelectionCriteria, apply_criteria, parse_records
from .engine import DocumentLabels, label_corpus, labels_from_jsonl, labels_to_jsonl
from .ingest import (
    DEFAULT_OCR,
    DEFAULT_RASTERIZE,
    ConversionError,
    ConverterConfig,
    MissingDocumentError,
    convert_to_text,
    resolve_document,
)
from .mapping import COUNTING_MODES, DOCUMENT_FREQUENCY, DataMapping, aggregate
from .report import DEFAULT_PALETTE, build_sunburst, emit_document_table, emit_sunburst_svg, emit_table, load_palette
from .taxonomy import (
    DecisionList,
    RuleError,
    TaxonomyError,
    TaxonomyNode,
    default_rules_path,
    default_taxonomy_path,
    parse_rules,
    parse_taxonomy,
)
from .textproc import DEFAULT_LEXICON, Lexicon, process_text

log = logging.getLogger(__name__)

FILTER_REPORT = "filter_report.json"
INGEST_INDEX = "ingest.json"
TEXT_DIR = "text"
LABELS = "labels.jsonl"
MAPPING_JSON = "mapping.json"
MAPPING_CSV = "mapping.csv"
SUNBURST_JSON = "sunburst.json"
SUNBURST_SVG = "sunburst.svg"
DOCUMENTS_CSV = "documents.csv"
MANIFEST = "manifest.json"

REPORT_FORMATS = ("csv", "json", "svg", "all")


class ConfigError(Exception):
    """Invalid or unreadable configuration (CLI exit code 2)."""


class StageError(Exception):
    """A stage could not complete (CLI exit code 3)."""


@dataclass(frozen=True)
class RunConfig:
    records_file: Optional[Path] = None
    criteria: SelectionCriteria = field(default_factory=SelectionCriteria)
    store_dir: Optional[Path] = None
    cache_dir: Optional[Path] = None
    out_dir: Path = Path("out")
    converter: ConverterConfig = field(default_factory=ConverterConfig)
    taxonomy_file: Path = field(default_factory=default_taxonomy_path)
    rules_file: Path = field(default_factory=default_rules_path)
    trigger_lexicon: tuple[str, ...] = DEFAULT_LEXICON
    counting_mode: str = DOCUMENT_FREQUENCY
    parallelism: int = 1
    label_min_angle: float = 10.0
    palette_file: Optional[Path] = None

    def digest(self) -> str:
        """Digest of everything that can change the outputs.

        ``out_dir``, ``cache_dir`` and ``parallelism`` are left out: they
        decide where and how fast, not what.
        """
        payload = {
            "records_file": str(self.records_file),
            "criteria": self.criteria.to_dict(),
            "store_dir": str(self.store_dir),
            "converter": {
                "rasterize": self.converter.rasterize_template,
                "ocr": self.converter.ocr_template,
                "dpi": self.converter.dpi,
            },
            "taxonomy_file": str(self.taxonomy_file),
            "rules_file": str(self.rules_file),
            "trigger_lexicon": list(self.trigger_lexicon),
            "counting_mode": self.counting_mode,
            "label_min_angle": self.label_min_angle,
            "palette_file": str(self.palette_file),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


_CONFIG_KEYS = {
    "records_file",
    "criteria",
    "store_dir",
    "cache_dir",
    "out_dir",
    "converter",
    "taxonomy_file",
    "rules_file",
    "trigger_lexicon",
    "counting_mode",
    "parallelism",
    "report",
}


def config_from_dict(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    """Build a RunConfig; relative paths are taken relative to ``base_dir``."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def path(key, default=None):
        value = data.get(key)
        if value is None:
            return default
        p = Path(value)
        return p if p.is_absolute() else (base_dir / p)

    try:
        criteria = SelectionCriteria.from_dict(data.get("criteria", {}))
        conv = data.get("converter", {})
        converter = ConverterConfig(
            rasterize_template=conv.get("rasterize_cmd", DEFAULT_RASTERIZE),
            ocr_template=conv.get("ocr_cmd", DEFAULT_OCR),
            dpi=int(conv.get("dpi", 300)),
            timeout=float(conv.get("timeout_secs", 600)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = data.get("report", {})
    palette = report.get("palette_file")
    cfg = RunConfig(
        records_file=path("records_file"),
        criteria=criteria,
        store_dir=path("store_dir"),
        cache_dir=path("cache_dir"),
        out_dir=path("out_dir", Path("out")),
        converter=converter,
        taxonomy_file=path("taxonomy_file", default_taxonomy_path()),
        rules_file=path("rules_file", default_rules_path()),
        trigger_lexicon=tuple(data.get("trigger_lexicon", DEFAULT_LEXICON)),
        counting_mode=data.get("counting_mode", DOCUMENT_FREQUENCY),
        parallelism=int(data.get("parallelism", 1)),
        label_min_angle=float(report.get("label_min_angle", 10.0)),
        palette_file=None if palette is None else (Path(palette) if Path(palette).is_absolute() else base_dir / palette),
    )
    check_config(cfg)
    return cfg


def check_config(cfg: RunConfig) -> None:
    if cfg.counting_mode not in COUNTING_MODES:
        raise ConfigError(f"counting_mode must be one of {', '.join(COUNTING_MODES)}")
    if cfg.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    if not cfg.trigger_lexicon:
        raise ConfigError("trigger_lexicon must not be empty")


def load_config(file) -> RunConfig:
    path = Path(file)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data, path.parent)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return cfg
    conv_keys = {"rasterize_template", "ocr_template", "dpi", "timeout"}
    conv = {k: changes.pop(k) for k in list(changes) if k in conv_keys}
    try:
        if conv:
            changes["converter"] = replace(cfg.converter, **conv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = replace(cfg, **changes)
    check_config(cfg)
    return cfg


def require_file(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise ConfigError(f"no {what} configured")
    if not Path(path).is_file():
        raise ConfigError(f"{what} not found: {path}")
    return Path(path)


def load_taxonomy_and_rules(cfg: RunConfig) -> tuple[TaxonomyNode, DecisionList]:
    taxonomy_file = require_file(cfg.taxonomy_file, "taxonomy file")
    rules_file = require_file(cfg.rules_file, "rules file")
    try:
        taxonomy = parse_taxonomy(taxonomy_file)
        rules = parse_rules(rules_file, taxonomy)
    except (TaxonomyError, RuleError) as exc:
        raise ConfigError(str(exc)) from None
    return taxonomy, rules


def load_taxonomy(cfg: RunConfig) -> TaxonomyNode:
    try:
        return parse_taxonomy(require_file(cfg.taxonomy_file, "taxonomy file"))
    except TaxonomyError as exc:
        raise ConfigError(str(exc)) from None


# -- file helpers -------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_json(path: Path, stage: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise StageError(f"{path} not found; run `datamap {stage}` first") from None
    except json.JSONDecodeError as exc:
        raise StageError(f"{path} is not valid JSON: {exc}") from None


def _map_parallel(fn, items: Sequence, parallelism: int) -> list:
    if parallelism <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


# -- stages -------------------------------------------------------------------


def stage_filter(cfg: RunConfig) -> tuple[int, FilterReport]:
    records_file = require_file(cfg.records_file, "records file")
    try:
        records = parse_records(records_file)
    except RecordParseError as exc:
        raise StageError(f"{records_file}: {exc}") from None
    report = apply_criteria(records, cfg.criteria)
    _write(cfg.out_dir / FILTER_REPORT, report.to_json())
    log.info("filter: %d records, %d retained", len(records), len(report.retained))
    if not report.retained:
        raise StageError("no documents retained by the selection criteria")
    return len(records), report


@dataclass(frozen=True)
class IngestEntry:
    record_id: str
    kind: str
    content_hash: str
    text_file: str


@dataclass(frozen=True)
class IngestResult:
    converted: tuple[IngestEntry, ...]
    quarantined: tuple[tuple[str, str], ...]  # (record_id, reason)

    def to_dict(self) -> dict:
        return {
            "converted": [e.__dict__ for e in self.converted],
            "quarantined": [{"record_id": rid, "reason": reason} for rid, reason in self.quarantined],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IngestResult":
        return cls(
            tuple(IngestEntry(**e) for e in data.get("converted", [])),
            tuple((q["record_id"], q["reason"]) for q in data.get("quarantined", [])),
        )


def stage_ingest(cfg: RunConfig, record_ids: Optional[Sequence[str]] = None) -> IngestResult:
    if record_ids is None:
        record_ids = _read_json(cfg.out_dir / FILTER_REPORT, "filter")["retained"]
    if cfg.store_dir is None or not Path(cfg.store_dir).is_dir():
        raise ConfigError(f"store directory not found: {cfg.store_dir}")
    text_dir = cfg.out_dir / TEXT_DIR
    text_dir.mkdir(parents=True, exist_ok=True)

    def one(record_id: str):
        try:
            doc = resolve_document(record_id, cfg.store_dir)
            text = convert_to_text(doc, cfg.converter, cfg.cache_dir)
        except (MissingDocumentError, ConversionError) as exc:
            log.warning("quarantined %s: %s", record_id, exc)
            return None, (record_id, str(exc))
        rel = f"{TEXT_DIR}/{record_id}.txt"
        _write(cfg.out_dir / rel, text)
        return IngestEntry(record_id, doc.kind, doc.content_hash, rel), None

    converted, quarantined = [], []
    for entry, failure in _map_parallel(one, list(record_ids), cfg.parallelism):
        if entry is not None:
            converted.append(entry)
        else:
            quarantined.append(failure)
    result = IngestResult(tuple(converted), tuple(quarantined))
    _write(cfg.out_dir / INGEST_INDEX, json.dumps(result.to_dict(), indent=2, ensure_ascii=False) + "\n")
    log.info("ingest: %d converted, %d quarantined", len(converted), len(quarantined))
    return result


def stage_label(cfg: RunConfig, ingest: Optional[IngestResult] = None, rules: Optional[DecisionList] = None):
    if ingest is None:
        ingest = IngestResult.from_dict(_read_json(cfg.out_dir / INGEST_INDEX, "ingest"))
    if rules is None:
        _, rules = load_taxonomy_and_rules(cfg)
    lexicon = Lexicon(cfg.trigger_lexicon)

    def sentences(entry: IngestEntry):
        with open(cfg.out_dir / entry.text_file, encoding="utf-8", newline="") as fh:
            return entry.record_id, process_text(fh.read(), entry.record_id, lexicon)

    documents = _map_parallel(sentences, list(ingest.converted), cfg.parallelism)
    labels = label_corpus(documents, rules, cfg.parallelism)
    _write(cfg.out_dir / LABELS, labels_to_jsonl(labels))
    log.info("label: %d documents, %d with labels", len(labels), sum(1 for d in labels if d.labels))
    return labels


def _read_labels(cfg: RunConfig) -> list[DocumentLabels]:
    path = cfg.out_dir / LABELS
    if not path.is_file():
        raise StageError(f"{path} not found; run `datamap label` first")
    return labels_from_jsonl(path.read_text(encoding="utf-8"))


def stage_map(cfg: RunConfig, labels=None, taxonomy: Optional[TaxonomyNode] = None) -> DataMapping:
    if labels is None:
        labels = _read_labels(cfg)
    if taxonomy is None:
        taxonomy = load_taxonomy(cfg)
    try:
        mapping = aggregate(labels, taxonomy, cfg.counting_mode)
    except ValueError as exc:
        raise StageError(str(exc)) from None
    _write(cfg.out_dir / MAPPING_JSON, mapping.to_json())
    _write(cfg.out_dir / MAPPING_CSV, emit_table(mapping))
    return mapping


def stage_report(cfg: RunConfig, mapping: Optional[DataMapping] = None, labels=None, fmt: str = "all") -> list[str]:
    if fmt not in REPORT_FORMATS:
        raise ConfigError(f"--format must be one of {', '.join(REPORT_FORMATS)}")
    if mapping is None:
        try:
            mapping = DataMapping.from_dict(_read_json(cfg.out_dir / MAPPING_JSON, "map"))
        except (KeyError, TaxonomyError) as exc:
            raise StageError(f"invalid {MAPPING_JSON}: {exc}") from None
    palette = DEFAULT_PALETTE
    if cfg.palette_file is not None:
        try:
            palette = load_palette(cfg.palette_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"palette: {exc}") from None
    spec = build_sunburst(mapping, palette=palette, label_min_angle=cfg.label_min_angle)
    written = []
    if fmt in ("json", "all"):
        _write(cfg.out_dir / SUNBURST_JSON, spec.to_json())
        written.append(SUNBURST_JSON)
    if fmt in ("svg", "all"):
        _write(cfg.out_dir / SUNBURST_SVG, emit_sunburst_svg(spec))
        written.append(SUNBURST_SVG)
    if fmt in ("csv", "all"):
        _write(cfg.out_dir / MAPPING_CSV, emit_table(mapping))
        if labels is None:
            labels = _read_labels(cfg)
        _write(cfg.out_dir / DOCUMENTS_CSV, emit_document_table(labels))
        written.extend([MAPPING_CSV, DOCUMENTS_CSV])
    return written


OUTPUT_FILES = (
    FILTER_REPORT,
    INGEST_INDEX,
    LABELS,
    MAPPING_JSON,
    MAPPING_CSV,
    SUNBURST_JSON,
    SUNBURST_SVG,
    DOCUMENTS_CSV,
)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage and write ``manifest.json``; returns the manifest."""
    require_file(cfg.records_file, "records file")
    taxonomy, rules = load_taxonomy_and_rules(cfg)
    if cfg.store_dir is None or not Path(cfg.store_dir).is_dir():
        raise ConfigError(f"store directory not found: {cfg.store_dir}")
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create out_dir {cfg.out_dir}: {exc}") from None

    timings = {}

    def timed(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        timings[name] = round(time.perf_counter() - t0, 6)
        return result

    n_records, report = timed("filter", stage_filter, cfg)
    ingest = timed("ingest", stage_ingest, cfg, report.retained_ids)
    labels = timed("label", stage_label, cfg, ingest, rules)
    mapping = timed("map", stage_map, cfg, labels, taxonomy)
    timed("report", stage_report, cfg, mapping, labels)

    manifest = {
        "tool": "datamap",
        "version": __version__,
        "config_digest": cfg.digest(),
        "stage_counts": {
            "records": n_records,
            "retained": len(report.retained),
            "converted": len(ingest.converted),
            "quarantined": len(ingest.quarantined),
            "labeled": len(labels),
            "unlabeled": mapping.unlabeled_count,
        },
        "funnel": report.to_dict()["stages"],
        "quarantined": [{"record_id": rid, "reason": reason} for rid, reason in ingest.quarantined],
        "outputs": {name: _sha256(cfg.out_dir / name) for name in OUTPUT_FILES},
        "timings": timings,
    }
    _write(cfg.out_dir / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
