"""Text cleaning, sentence segmentation and data-sentence detection."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

DEFAULT_LEXICON = (
    "data",
    "dataset",
    "datasets",
    "data set",
    "data sets",
    "database",
    "databases",
)

# Tokens ending in a period that do not end a sentence.
ABBREVIATIONS = (
    "Fig.",
    "Figs.",
    "et al.",
    "e.g.",
    "i.e.",
    "No.",
    "Nos.",
    "Eq.",
    "Eqs.",
    "Ref.",
    "Refs.",
    "Sec.",
    "Tab.",
    "Vol.",
    "vs.",
    "cf.",
    "approx.",
    "pp.",
    "Dr.",
    "Prof.",
    "Mr.",
    "Mrs.",
    "Ms.",
    "St.",
)


@dataclass(frozen=True)
class CleanText:
    text: str
    record_id: str = ""


@dataclass(frozen=True)
class SentenceContext:
    record_id: str
    index: int
    text: str
    mentions_data: bool = False
    trigger: Optional[str] = None


_NEWLINES = re.compile(r"\r\n?")
_HYPHEN_BREAK = re.compile(r"([^\W\d_])-\n[ \t]*([^\W\d_])")
_WHITESPACE = re.compile(r"\s+")


def _join_hyphenated(m: re.Match) -> str:
    if m.group(2).islower():
        return m.group(1) + m.group(2)
    return m.group(0)


def clean_text(raw: str, record_id: str = "") -> CleanText:
    """Normalize OCR/plain text into a single line of NFC text.

    Words hyphenated across a line break are rejoined when the continuation
    starts with a lowercase letter; every other run of whitespace, including
    newlines and form feeds, becomes one space.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _NEWLINES.sub("\n", text)
    text = _HYPHEN_BREAK.sub(_join_hyphenated, text)
    text = _WHITESPACE.sub(" ", text).strip()
    return CleanText(text, record_id)


_BOUNDARY = re.compile(r"[.!?][\"'”’)\]]*(?=\s)")


def _ends_with_abbreviation(text: str, end: int) -> bool:
    head = text[:end]
    for abbr in ABBREVIATIONS:
        if head.endswith(abbr):
            start = end - len(abbr)
            if start == 0 or not (text[start - 1].isalnum() or text[start - 1] == "."):
                return True
    return False


def _is_sentence_start(ch: str) -> bool:
    return ch.isupper() or ch.isdigit()


def segment_sentences(clean: CleanText) -> list[SentenceContext]:
    text = clean.text
    sentences: list[SentenceContext] = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        # the period itself is text[m.start()]; abbreviations end there
        if text[m.start()] == "." and _ends_with_abbreviation(text, m.start() + 1):
            continue
        nxt = m.end()
        while nxt < len(text) and text[nxt].isspace():
            nxt += 1
        if nxt >= len(text) or not _is_sentence_start(text[nxt]):
            continue
        piece = text[start : m.end()].strip()
        if piece:
            sentences.append(SentenceContext(clean.record_id, len(sentences), piece))
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(SentenceContext(clean.record_id, len(sentences), tail))
    return sentences


class Lexicon:
    """Compiled trigger lexicon, matched case-insensitively on word boundaries."""

    def __init__(self, lexemes: Iterable[str] = DEFAULT_LEXICON):
        canon: dict[str, str] = {}
        for lexeme in lexemes:
            key = " ".join(lexeme.split()).casefold()
            if key and key not in canon:
                canon[key] = lexeme
        if not canon:
            raise ValueError("trigger lexicon must not be empty")
        self._canon = canon
        # longest first so "data set" wins over "data" at the same position
        alternatives = sorted(canon, key=len, reverse=True)
        body = "|".join(r"\s+".join(map(re.escape, k.split(" "))) for k in alternatives)
        self._regex = re.compile(rf"(?<!\w)(?:{body})(?!\w)", re.IGNORECASE)

    @property
    def lexemes(self) -> tuple[str, ...]:
        return tuple(self._canon.values())

    def first_trigger(self, sentence: str) -> Optional[str]:
        m = self._regex.search(sentence)
        if m is None:
            return None
        key = " ".join(m.group(0).split()).casefold()
        return self._canon.get(key, m.group(0))


def detect_data_sentences(
    sentences: Sequence[SentenceContext], lexicon: Iterable[str] | Lexicon = DEFAULT_LEXICON
) -> list[SentenceContext]:
    lex = lexicon if isinstance(lexicon, Lexicon) else Lexicon(lexicon)
    out = []
    for s in sentences:
        trigger = lex.first_trigger(s.text)
        out.append(replace(s, mentions_data=trigger is not None, trigger=trigger))
    return out


def process_text(raw: str, record_id: str = "", lexicon=DEFAULT_LEXICON) -> list[SentenceContext]:
    """Clean, segment and flag one document's text."""
    return detect_data_sentences(segment_sentences(clean_text(raw, record_id)), lexicon)
