# -*- coding: utf-8 -*-
"""Romanian text normalization: cedilla fixing, diacritic stripping and
classification, sentence splitting, tokenization.

Romanian uses five diacritized letters (ă, â, î, ș, ț).  Every one of them
strips to one of four base letters (a, i, s, t), and the restoration task is
deciding, for each base-letter occurrence, which mark (if any) it carries.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional


class TargetLetter(IntEnum):
    """Base letters at which a restoration decision is made."""

    A = 0
    I = 1
    S = 2
    T = 3


class DiacriticClass(IntEnum):
    """The four-way label space shared by all base letters."""

    NONE = 0
    BREVE = 1
    CIRCUMFLEX = 2
    COMMA_BELOW = 3


NUM_CLASSES = 4

# Valid classes per base letter.  a -> {a, ă, â}; i -> {i, î}; s -> {s, ș};
# t -> {t, ț}.
VALID_CLASSES = {
    TargetLetter.A: (DiacriticClass.NONE, DiacriticClass.BREVE, DiacriticClass.CIRCUMFLEX),
    TargetLetter.I: (DiacriticClass.NONE, DiacriticClass.CIRCUMFLEX),
    TargetLetter.S: (DiacriticClass.NONE, DiacriticClass.COMMA_BELOW),
    TargetLetter.T: (DiacriticClass.NONE, DiacriticClass.COMMA_BELOW),
}

# Legacy cedilla codepoints -> comma-below (the correct Romanian forms).
_CEDILLA_TO_COMMA = {
    "Ş": "Ș",  # Ş -> Ș
    "ş": "ș",  # ş -> ș
    "Ţ": "Ț",  # Ţ -> Ț
    "ţ": "ț",  # ţ -> ț
}

# char -> (base, class) for the nine lowercase letters.
_CLASSIFY = {
    "a": (TargetLetter.A, DiacriticClass.NONE),
    "ă": (TargetLetter.A, DiacriticClass.BREVE),
    "â": (TargetLetter.A, DiacriticClass.CIRCUMFLEX),
    "i": (TargetLetter.I, DiacriticClass.NONE),
    "î": (TargetLetter.I, DiacriticClass.CIRCUMFLEX),
    "s": (TargetLetter.S, DiacriticClass.NONE),
    "ș": (TargetLetter.S, DiacriticClass.COMMA_BELOW),
    "t": (TargetLetter.T, DiacriticClass.NONE),
    "ț": (TargetLetter.T, DiacriticClass.COMMA_BELOW),
}

# (lowercase base char, class) -> diacritized lowercase char.
_APPLY = {(base.name.lower(), cls): ch for ch, (base, cls) in _CLASSIFY.items()}

_STRIP = {"ă": "a", "â": "a", "î": "i", "ș": "s", "ț": "t",
          "Ă": "A", "Â": "A", "Î": "I", "Ș": "S", "Ț": "T"}
_STRIP_TRANS = str.maketrans(_STRIP)

TARGET_CHARS = "aăâiîsștț"
TARGET_CHARS_CASED = TARGET_CHARS + TARGET_CHARS.upper()
DIACRITIC_CHARS = "ăâîșțĂÂÎȘȚ"

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)
_SENT_END_RE = re.compile(r"[.!?]+(?=\s|$)")


class InvalidMarkError(ValueError):
    """Raised for an (base letter, diacritic class) combination that does not exist."""


def normalize(text: str) -> str:
    """Canonicalize Romanian text: NFC composition plus cedilla -> comma-below.

    Corpora mix the legacy cedilla codepoints (ş, ţ) with the correct
    comma-below ones (ș, ț); both are folded to comma-below.
    """
    for src, dst in _CEDILLA_TO_COMMA.items():
        if src in text:
            text = text.replace(src, dst)
    return unicodedata.normalize("NFC", text)


def strip_diacritics(text: str) -> str:
    """Remove Romanian diacritics (ă,â->a; î->i; ș->s; ț->t), preserving case.

    Code-point count is preserved; all non-target characters pass through.
    """
    return text.translate(_STRIP_TRANS)


def classify_char(c: str) -> Optional[tuple[TargetLetter, DiacriticClass]]:
    """Map one character to its (base letter, diacritic class), or None.

    Case-insensitive; returns None for anything outside the nine target
    letters.
    """
    return _CLASSIFY.get(c.lower())


def apply_mark(c: str, cls: DiacriticClass) -> str:
    """Inverse of classify_char: put a diacritic class onto a base letter.

    Case-preserving; ``apply_mark(c, NONE) == c``.  Raises InvalidMarkError for
    combinations that do not exist in Romanian (e.g. s + breve).
    """
    lower = c.lower()
    out = _APPLY.get((lower, cls))
    if out is None:
        raise InvalidMarkError(f"no Romanian letter for base {c!r} with class {cls.name}")
    return out.upper() if c.isupper() else out


def target_char(base: TargetLetter, cls: DiacriticClass, upper: bool = False) -> str:
    """Render a (base, class) pair as its concrete letter."""
    c = base.name.lower() if not upper else base.name
    return apply_mark(c, cls)


@dataclass(frozen=True)
class Token:
    surface: str
    stripped_lower: str
    start: int  # code-point offset in the sentence text
    end: int


@dataclass(frozen=True)
class Sentence:
    raw_text: str
    tokens: tuple[Token, ...]

    @property
    def stripped(self) -> str:
        return strip_diacritics(self.raw_text)


def tokenize(sentence_text: str) -> list[Token]:
    """Split a sentence into word tokens (maximal runs of Unicode letters).

    Hyphens, apostrophes and digits break tokens.  Each token carries its
    stripped lowercase form for embedding lookup.
    """
    tokens = []
    for m in _WORD_RE.finditer(sentence_text):
        surface = m.group(0)
        tokens.append(Token(
            surface=surface,
            stripped_lower=strip_diacritics(surface.lower()),
            start=m.start(),
            end=m.end(),
        ))
    return tokens


def make_sentence(text: str) -> Sentence:
    return Sentence(raw_text=text, tokens=tuple(tokenize(text)))


def split_sentences(text: str) -> list[Sentence]:
    """Naive sentence splitting on ., ! and ? followed by whitespace or EOT.

    Abbreviations are not special-cased; splitter errors only shift context
    windows, which are padded anyway.  Empty sentences are dropped.
    """
    sentences = []
    pos = 0
    for m in _SENT_END_RE.finditer(text):
        chunk = text[pos:m.end()].strip()
        if chunk:
            sentences.append(make_sentence(chunk))
        pos = m.end()
    tail = text[pos:].strip()
    if tail:
        sentences.append(make_sentence(tail))
    return sentences
