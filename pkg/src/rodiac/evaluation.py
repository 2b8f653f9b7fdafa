# -*- coding: utf-8 -*-
"""Metrics (char/word accuracy, per-letter precision/recall/F1, confusion),
error analysis, and the unigram majority baseline."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .dataset import TargetInstance, extract_targets
from .textnorm import (DiacriticClass, Sentence, apply_mark, classify_char,
                       strip_diacritics)

# Report row order, fixed.
LETTERS = ["a", "ă", "â", "i", "î", "s", "ș", "t", "ț"]
_LETTER_INDEX = {ch: i for i, ch in enumerate(LETTERS)}


class PredictionMismatchError(ValueError):
    pass


def letter_index(base, cls) -> int:
    return _LETTER_INDEX[apply_mark(base.name.lower(), cls)]


@dataclass
class Metrics:
    char_acc: float
    word_acc_ambiguous: float
    word_acc_all: float
    confusion: np.ndarray  # [9, 9] counts, predicted letter x gold letter
    per_letter: dict[str, tuple[float, float, float]]  # letter -> (P, R, F)

    @property
    def n_targets(self) -> int:
        return int(self.confusion.sum())


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if (p + r) > 0 else 0.0


def compute_metrics(predictions: list[tuple[TargetInstance, DiacriticClass]],
                    sentences: list[Sentence]) -> Metrics:
    """Score a full prediction set against the gold sentences.

    Every target occurrence in ``sentences`` must appear exactly once in
    ``predictions``; duplicates or gaps raise PredictionMismatchError.
    """
    seen = set()
    for t, _ in predictions:
        key = (t.sentence_index, t.char_pos)
        if key in seen:
            raise PredictionMismatchError(f"duplicate prediction at {key}")
        seen.add(key)
    expected = sum(len(extract_targets(s, i)) for i, s in enumerate(sentences))
    if len(predictions) != expected:
        raise PredictionMismatchError(
            f"{len(predictions)} predictions for {expected} target occurrences")

    confusion = np.zeros((9, 9), dtype=np.int64)
    word_ok: dict[tuple[int, int], bool] = {}
    for t, pred in predictions:
        gold_ix = letter_index(t.base, t.gold)
        pred_ix = letter_index(t.base, pred)
        confusion[pred_ix, gold_ix] += 1
        key = (t.sentence_index, t.token_index)
        word_ok[key] = word_ok.get(key, True) and pred == t.gold
    n = confusion.sum()
    char_acc = float(np.trace(confusion)) / n if n else 0.0

    ambiguous_words = len(word_ok)
    correct_ambiguous = sum(word_ok.values())
    total_words = sum(len(s.tokens) for s in sentences)
    plain_words = total_words - ambiguous_words
    word_acc_ambiguous = correct_ambiguous / ambiguous_words if ambiguous_words else 0.0
    word_acc_all = ((correct_ambiguous + plain_words) / total_words
                    if total_words else 0.0)

    per_letter = {}
    for i, ch in enumerate(LETTERS):
        pred_total = confusion[i, :].sum()
        gold_total = confusion[:, i].sum()
        p = confusion[i, i] / pred_total if pred_total else 0.0
        r = confusion[i, i] / gold_total if gold_total else 0.0
        per_letter[ch] = (float(p), float(r), _f1(float(p), float(r)))
    return Metrics(char_acc=char_acc, word_acc_ambiguous=word_acc_ambiguous,
                   word_acc_all=word_acc_all, confusion=confusion,
                   per_letter=per_letter)


def per_letter_report(m: Metrics) -> str:
    """Nine-row table, columns Precision/Recall/F-Score in percent."""
    lines = [f"{'Letter':<8}{'Precision (%)':>15}{'Recall (%)':>13}{'F-Score (%)':>14}"]
    for ch in LETTERS:
        p, r, f = m.per_letter[ch]
        i = _LETTER_INDEX[ch]
        empty = m.confusion[i, :].sum() == 0 and m.confusion[:, i].sum() == 0
        mark = "  -" if empty else ""
        lines.append(f"{ch:<8}{100 * p:>15.2f}{100 * r:>13.2f}{100 * f:>14.2f}{mark}")
    return "\n".join(lines)


def metrics_tsv(m: Metrics) -> str:
    """Machine-readable dump: a header line, then one row per letter."""
    lines = ["letter\tprecision\trecall\tf1"]
    for ch in LETTERS:
        p, r, f = m.per_letter[ch]
        lines.append(f"{ch}\t{p:.6f}\t{r:.6f}\t{f:.6f}")
    lines.append(f"char_acc\t{m.char_acc:.6f}\t\t")
    lines.append(f"word_acc_ambiguous\t{m.word_acc_ambiguous:.6f}\t\t")
    lines.append(f"word_acc_all\t{m.word_acc_all:.6f}\t\t")
    return "\n".join(lines)


def hardest_words(predictions: list[tuple[TargetInstance, DiacriticClass]],
                  sentences: list[Sentence], k: int = 10
                  ) -> list[tuple[str, int, list[str]]]:
    """Top-k gold word forms by word-level error count.

    Ties break by total frequency (descending), then lexicographically.
    Each entry carries up to three distinct wrong restorations as examples.
    """
    by_word: dict[tuple[int, int], list[tuple[TargetInstance, DiacriticClass]]] = \
        defaultdict(list)
    for t, pred in predictions:
        by_word[(t.sentence_index, t.token_index)].append((t, pred))

    freq: Counter = Counter()
    errors: Counter = Counter()
    samples: dict[str, list[str]] = defaultdict(list)
    for (si, ti), items in by_word.items():
        token = sentences[si].tokens[ti]
        gold_form = token.surface.lower()
        freq[gold_form] += 1
        if all(pred == t.gold for t, pred in items):
            continue
        errors[gold_form] += 1
        predicted = _render_word(token, items)
        if predicted not in samples[gold_form] and len(samples[gold_form]) < 3:
            samples[gold_form].append(predicted)
    ranked = sorted(errors, key=lambda w: (-errors[w], -freq[w], w))
    return [(w, errors[w], samples[w]) for w in ranked[:k]]


def _render_word(token, items) -> str:
    chars = list(strip_diacritics(token.surface.lower()))
    for t, pred in items:
        local = t.char_pos - token.start
        chars[local] = apply_mark(chars[local], pred)
    return "".join(chars)


def unigram_baseline(train_sentences: list[Sentence],
                     test_sentences: list[Sentence]) -> Metrics:
    """Predict each word's most frequent diacritized training form.

    Unseen stripped forms get all-NONE predictions.  Ties on frequency break
    lexicographically for determinism.
    """
    counts: dict[str, Counter] = defaultdict(Counter)
    for s in train_sentences:
        for tok in s.tokens:
            counts[tok.stripped_lower][tok.surface.lower()] += 1
    majority = {stripped: min(forms, key=lambda w: (-forms[w], w))
                for stripped, forms in counts.items()}

    predictions = []
    for si, s in enumerate(test_sentences):
        for t in extract_targets(s, si):
            tok = s.tokens[t.token_index]
            form = majority.get(tok.stripped_lower)
            local = t.char_pos - tok.start
            if form is None or local >= len(form):
                pred = DiacriticClass.NONE
            else:
                got = classify_char(form[local])
                pred = got[1] if got is not None else DiacriticClass.NONE
            predictions.append((t, pred))
    return compute_metrics(predictions, test_sentences)
