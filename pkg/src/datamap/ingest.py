"""Locating document files and converting PDFs to text.

PDFs go through two external commands: a rasterizer that writes one image
per page into a directory, then an OCR command per image. Both are command
templates, split like a shell command line, whose placeholders are filled
per call:

* rasterize: ``{input}`` (the PDF), ``{outdir}`` (empty directory), ``{dpi}``
* OCR: ``{image}`` (one page image), ``{output}`` (output path *without*
  extension; the command must write ``{output}.txt``, as tesseract does)

Results are cached as ``<cache_dir>/<content_hash>-<cfg_digest>.txt``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

log = logging.getLogger(__name__)

PDF = "pdf"
PLAIN_TEXT = "plain-text"
PAGE_SEPARATOR = "\f"

DEFAULT_RASTERIZE = "pdftoppm -r {dpi} -png {input} {outdir}/page"
DEFAULT_OCR = "tesseract {image} {output}"

_IMAGE_SUFFIXES = {".png", ".ppm", ".pgm", ".pbm", ".tif", ".tiff", ".jpg", ".jpeg"}


class MissingDocumentError(FileNotFoundError):
    def __init__(self, record_id: str, store_dir):
        self.record_id = record_id
        super().__init__(f"no {record_id}.txt or {record_id}.pdf in {store_dir}")


class ConversionError(RuntimeError):
    def __init__(self, message: str, stderr: str = ""):
        self.stderr = stderr
        super().__init__(message + (f": {stderr.strip()}" if stderr.strip() else ""))


@dataclass(frozen=True)
class DocumentFile:
    record_id: str
    path: Path
    kind: str
    content_hash: str


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class ConverterConfig:
    rasterize_template: str = DEFAULT_RASTERIZE
    ocr_template: str = DEFAULT_OCR
    dpi: int = 300
    timeout: float = 600.0

    def __post_init__(self):
        missing = [p for p in ("{input}", "{outdir}") if p not in self.rasterize_template]
        missing += [p for p in ("{image}", "{output}") if p not in self.ocr_template]
        if missing:
            raise ValueError(f"converter templates missing placeholders: {', '.join(missing)}")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def digest(self) -> str:
        # timeout does not change the produced text, so it is not part of the key
        payload = json.dumps(
            {"rasterize": self.rasterize_template, "ocr": self.ocr_template, "dpi": self.dpi}, sort_keys=True
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def resolve_document(record_id: str, store_dir) -> DocumentFile:
    store = Path(store_dir)
    for suffix, kind in ((".txt", PLAIN_TEXT), (".pdf", PDF)):
        path = store / f"{record_id}{suffix}"
        if path.is_file():
            return DocumentFile(record_id, path, kind, file_hash(path))
    raise MissingDocumentError(record_id, store)


class CommandRunner:
    """Runs external commands and counts how many were executed."""

    def __init__(self):
        self.invocations = 0

    def __call__(self, argv: Sequence[str], timeout: float) -> None:
        self.invocations += 1
        try:
            proc = subprocess.run(list(argv), capture_output=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            stderr = (exc.stderr or b"").decode("utf-8", "replace")
            raise ConversionError(f"{argv[0]} timed out after {timeout}s", stderr) from None
        except OSError as exc:
            raise ConversionError(f"cannot run {argv[0]}: {exc}") from None
        if proc.returncode != 0:
            raise ConversionError(
                f"{argv[0]} exited with status {proc.returncode}", proc.stderr.decode("utf-8", "replace")
            )


def render_command(template: str, **values) -> list[str]:
    """Split a template into argv, then substitute placeholders per token."""
    argv = []
    for token in shlex.split(template):
        for key, value in values.items():
            token = token.replace("{" + key + "}", str(value))
        argv.append(token)
    return argv


def _page_key(path: Path):
    nums = re.findall(r"\d+", path.stem)
    return (int(nums[-1]) if nums else -1, path.name)


def _page_images(outdir: Path) -> list[Path]:
    images = [p for p in outdir.iterdir() if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES]
    return sorted(images, key=_page_key)


def decode_text(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def cache_path(file: DocumentFile, cfg: ConverterConfig, cache_dir) -> Path:
    return Path(cache_dir) / f"{file.content_hash}-{cfg.digest()}.txt"


def convert_to_text(
    file: DocumentFile,
    cfg: ConverterConfig,
    cache_dir=None,
    runner: Optional[Callable[[Sequence[str], float], None]] = None,
) -> str:
    if file.kind == PLAIN_TEXT:
        return decode_text(file.path.read_bytes())
    if file.kind != PDF:
        raise ValueError(f"unknown document kind {file.kind!r}")

    cached = cache_path(file, cfg, cache_dir) if cache_dir is not None else None
    if cached is not None and cached.is_file():
        with open(cached, encoding="utf-8", newline="") as fh:
            return fh.read()

    run = runner or CommandRunner()
    with tempfile.TemporaryDirectory(prefix="datamap-") as tmp:
        pages_dir = Path(tmp) / "pages"
        pages_dir.mkdir()
        run(render_command(cfg.rasterize_template, input=file.path, outdir=pages_dir, dpi=cfg.dpi), cfg.timeout)
        images = _page_images(pages_dir)
        if not images:
            raise ConversionError(f"rasterizer produced no page images for {file.path}")
        texts = []
        for i, image in enumerate(images):
            base = Path(tmp) / f"ocr-{i:05d}"
            run(render_command(cfg.ocr_template, image=image, output=base), cfg.timeout)
            out = base.with_name(base.name + ".txt")
            if not out.is_file():
                raise ConversionError(f"OCR command wrote no {out.name} for page {i + 1}")
            # tesseract ends each page with its own form feed
            texts.append(decode_text(out.read_bytes()).rstrip(PAGE_SEPARATOR))
    text = PAGE_SEPARATOR.join(texts)

    if cached is not None:
        try:
            cached.parent.mkdir(parents=True, exist_ok=True)
            _write_atomic(cached, text)
        except OSError as exc:
            log.warning("could not write cache file %s: %s", cached, exc)
    return text
