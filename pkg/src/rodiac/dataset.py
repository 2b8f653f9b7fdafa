# -*- coding: utf-8 -*-
"""Corpus -> labeled examples: char vocabulary, target extraction, example
construction (char window + word vector + sentence vectors), splits, batches.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable
from .textnorm import (DiacriticClass, Sentence, TargetLetter, classify_char,
                       strip_diacritics)

PAD_ID = 0
UNK_ID = 1


class EmptyCorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CharVocab:
    """Dense char -> id map over stripped corpus text; id 0 = PAD, 1 = UNK."""

    id_of: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.id_of) + 2

    def encode(self, c: str) -> int:
        return self.id_of.get(c, UNK_ID)

    def chars_in_id_order(self) -> list[str]:
        return sorted(self.id_of, key=self.id_of.get)


def build_char_vocab(sentences: list[Sentence], min_freq: int = 1) -> CharVocab:
    """Count characters of the *stripped* sentence text; the model input never
    contains diacritics.  Order: frequency desc, then code point asc."""
    counts: Counter = Counter()
    for s in sentences:
        counts.update(s.stripped)
    if not counts:
        raise EmptyCorpusError("cannot build a character vocabulary from an empty corpus")
    kept = [c for c, n in counts.items() if n >= min_freq]
    kept.sort(key=lambda c: (-counts[c], ord(c)))
    id_of = {c: i + 2 for i, c in enumerate(kept)}
    return CharVocab(id_of=id_of)


@dataclass(frozen=True)
class TargetInstance:
    sentence_index: int
    char_pos: int  # code-point index, identical in raw and stripped text
    token_index: int
    base: TargetLetter
    gold: DiacriticClass


def extract_targets(sentence: Sentence, sentence_index: int = 0) -> list[TargetInstance]:
    """One instance per occurrence of a/ă/â/i/î/s/ș/t/ț (any case), in order.

    The sentence text carries diacritics; gold labels come from classifying
    the original character.
    """
    spans = [(tok.start, tok.end) for tok in sentence.tokens]
    targets = []
    ti = 0
    for pos, ch in enumerate(sentence.raw_text):
        got = classify_char(ch)
        if got is None:
            continue
        base, gold = got
        while ti < len(spans) and spans[ti][1] <= pos:
            ti += 1
        if ti >= len(spans) or not (spans[ti][0] <= pos < spans[ti][1]):
            continue  # letter outside any token; cannot happen with the letter-run tokenizer
        targets.append(TargetInstance(
            sentence_index=sentence_index, char_pos=pos, token_index=ti,
            base=base, gold=gold))
    return targets


@dataclass
class Example:
    window_ids: np.ndarray  # int32 [window]
    word_vec: np.ndarray    # float32 [dim]
    sent_vecs: np.ndarray   # float32 [L, dim], 1 <= L <= max_sent
    base: TargetLetter
    gold: DiacriticClass


def make_example(sentence: Sentence, t: TargetInstance, cv: CharVocab,
                 emb: EmbeddingTable | None, window: int = 13,
                 max_sent: int = 31) -> Example:
    """Build the three model inputs for one target occurrence.

    The char window is centered on the target over the stripped sentence text
    (spaces and punctuation included), PAD outside.  Long sentences are
    truncated to the ``max_sent`` tokens centered on the current word, ties
    broken toward the left.
    """
    assert window % 2 == 1
    half = window // 2
    stripped = sentence.stripped
    ids = np.full(window, PAD_ID, dtype=np.int32)
    for k in range(window):
        pos = t.char_pos - half + k
        if 0 <= pos < len(stripped):
            ids[k] = cv.encode(stripped[pos])

    dim = emb.dim if emb is not None else 0
    if emb is not None:
        word_vec = np.asarray(emb.lookup(sentence.tokens[t.token_index].stripped_lower),
                              dtype=np.float32)
        n = len(sentence.tokens)
        lo, hi = _center_span(n, t.token_index, max_sent)
        sent_vecs = np.stack([np.asarray(emb.lookup(tok.stripped_lower), dtype=np.float32)
                              for tok in sentence.tokens[lo:hi]])
    else:
        word_vec = np.zeros(0, dtype=np.float32)
        sent_vecs = np.zeros((1, 0), dtype=np.float32)
    return Example(window_ids=ids, word_vec=word_vec, sent_vecs=sent_vecs,
                   base=t.base, gold=t.gold)


def _center_span(n: int, center: int, width: int) -> tuple[int, int]:
    """[lo, hi) of length min(n, width) containing ``center``, centered with
    ties broken toward the left, clamped to the sequence."""
    if n <= width:
        return 0, n
    left = (width - 1) // 2 if width % 2 == 1 else width // 2
    lo = center - left
    lo = max(0, min(lo, n - width))
    return lo, lo + width


@dataclass(frozen=True)
class SplitSpec:
    train_ratio: float
    dev_ratio: float
    test_ratio: float
    seed: int = 0

    def validate(self) -> None:
        for r in (self.train_ratio, self.dev_ratio, self.test_ratio):
            if not (0.0 <= r <= 1.0):
                raise ValueError(f"split ratio {r} outside [0, 1]")
        total = self.train_ratio + self.dev_ratio + self.test_ratio
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split ratios sum to {total}, expected 1")


def _split_fraction(seed: int, index: int) -> float:
    h = hashlib.blake2b(f"{seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little") / 2.0 ** 64


def assign_split(spec: SplitSpec, index: int) -> str:
    u = _split_fraction(spec.seed, index)
    if u < spec.train_ratio:
        return "train"
    if u < spec.train_ratio + spec.dev_ratio:
        return "dev"
    return "test"


def split_corpus(sentences: list, spec: SplitSpec):
    """Deterministic hash split; identical inputs give identical splits."""
    spec.validate()
    out = {"train": [], "dev": [], "test": []}
    for i, s in enumerate(sentences):
        out[assign_split(spec, i)].append(s)
    return out["train"], out["dev"], out["test"]


def batches(examples: list, batch_size: int, shuffle_seed: int) -> list[list]:
    """Deterministically shuffled full batches (last may be short)."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = np.random.default_rng(shuffle_seed).permutation(len(examples))
    shuffled = [examples[i] for i in order]
    return [shuffled[i:i + batch_size] for i in range(0, len(shuffled), batch_size)]


def diacritic_ratio(sentence: Sentence) -> float:
    """(diacritic chars) / (target chars); 1.0 for sentences with no targets."""
    total = 0
    marked = 0
    for ch in sentence.raw_text:
        got = classify_char(ch)
        if got is None:
            continue
        total += 1
        if got[1] != DiacriticClass.NONE:
            marked += 1
    return marked / total if total else 1.0
