"""``datamap`` command line.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .pipeline import (
    REPORT_FORMATS,
    ConfigError,
    RunConfig,
    StageError,
    load_config,
    run_pipeline,
    stage_filter,
    stage_ingest,
    stage_label,
    stage_map,
    stage_report,
    with_overrides,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

log = logging.getLogger("datamap")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out-dir", type=Path, help="directory for all outputs and intermediates")
    p.add_argument("--parallelism", type=int, help="worker threads for ingest and labeling")
    p.add_argument("-v", "--verbose", action="store_true")


def _ingest_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--store-dir", type=Path, help="where <record_id>.pdf / .txt files live")
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--rasterize-cmd", help="command template with {input} and {outdir}")
    p.add_argument("--ocr-cmd", help="command template with {image} and {output}")
    p.add_argument("--dpi", type=int)
    p.add_argument("--timeout-secs", type=float)


def _rules_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--taxonomy", type=Path, help="taxonomy JSON (default: bundled SDG 7)")
    p.add_argument("--rules", type=Path, help="rules JSON (default: bundled SDG 7)")


def _report_opts(p: argparse.ArgumentParser, formats: bool = True) -> None:
    if formats:
        p.add_argument("--format", choices=REPORT_FORMATS, default="all")
    p.add_argument("--label-min-angle", type=float)
    p.add_argument("--palette", type=Path, help="JSON list of colors, or one color per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datamap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"datamap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="apply inclusion/exclusion criteria to a record export")
    _common(p)
    p.add_argument("--records", type=Path, help="record CSV export")

    p = sub.add_parser("ingest", help="resolve and convert retained documents to text")
    _common(p)
    _ingest_opts(p)

    p = sub.add_parser("label", help="label documents with the decision list")
    _common(p)
    _rules_opts(p)

    p = sub.add_parser("map", help="aggregate labels into the data mapping")
    _common(p)
    _rules_opts(p)
    p.add_argument("--counting-mode", choices=("document-frequency", "mention-frequency"))

    p = sub.add_parser("report", help="write sunburst charts and tables")
    _common(p)
    _report_opts(p)

    p = sub.add_parser("run", help="run the whole pipeline and write a manifest")
    _common(p)
    p.add_argument("--records", type=Path)
    _ingest_opts(p)
    _rules_opts(p)
    p.add_argument("--counting-mode", choices=("document-frequency", "mention-frequency"))
    _report_opts(p, formats=False)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return with_overrides(
        cfg,
        records_file=get("records"),
        out_dir=get("out_dir"),
        parallelism=get("parallelism"),
        store_dir=get("store_dir"),
        cache_dir=get("cache_dir"),
        rasterize_template=get("rasterize_cmd"),
        ocr_template=get("ocr_cmd"),
        dpi=get("dpi"),
        timeout=get("timeout_secs"),
        taxonomy_file=get("taxonomy"),
        rules_file=get("rules"),
        counting_mode=get("counting_mode"),
        label_min_angle=get("label_min_angle"),
        palette_file=get("palette"),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if args.command == "filter":
            _, report = stage_filter(cfg)
            for s in report.stages:
                print(f"{s.name:<14} {s.input_count:>6} -{s.excluded_count:<6} {s.output_count:>6}")
        elif args.command == "ingest":
            result = stage_ingest(cfg)
            print(f"converted {len(result.converted)}, quarantined {len(result.quarantined)}")
        elif args.command == "label":
            labels = stage_label(cfg)
            print(f"labeled {len(labels)} documents, {sum(1 for d in labels if not d.labels)} without labels")
        elif args.command == "map":
            mapping = stage_map(cfg)
            print(f"mapped {mapping.corpus_size} documents ({mapping.counting_mode})")
        elif args.command == "report":
            for name in stage_report(cfg, fmt=args.format):
                print(cfg.out_dir / name)
        elif args.command == "run":
            manifest = run_pipeline(cfg)
            print(json.dumps(manifest["stage_counts"], sort_keys=True))
    except ConfigError as exc:
        print(f"datamap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"datamap: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
