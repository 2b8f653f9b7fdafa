# -*- coding: utf-8 -*-
"""Apply a trained model to diacritic-free text, sentence at a time.

Existing diacritics are stripped and re-predicted by default, which gives
consistent output on mixed input; ``preserve_existing`` keeps characters that
already carry a mark.
"""

from __future__ import annotations

from . import model as M
from .dataset import CharVocab, extract_targets, make_example
from .embeddings import EmbeddingTable
from .textnorm import (_SENT_END_RE, DiacriticClass, apply_mark, classify_char,
                       make_sentence, normalize, strip_diacritics)


def sentence_spans(text: str) -> list[tuple[int, str]]:
    """(start offset, chunk) pairs covering the whole text, split after ., ! or ?
    followed by whitespace or end-of-text."""
    spans = []
    pos = 0
    for m in _SENT_END_RE.finditer(text):
        spans.append((pos, text[pos:m.end()]))
        pos = m.end()
    if pos < len(text):
        spans.append((pos, text[pos:]))
    return spans


def restore_line(params: M.ModelParams, vocab: CharVocab,
                 emb: EmbeddingTable | None, line: str,
                 preserve_existing: bool = False, batch_size: int = 512) -> str:
    """Restore one line of text; whitespace and non-target characters pass
    through unchanged."""
    norm = normalize(line)
    stripped = strip_diacritics(norm)
    out = list(stripped)
    cfg = params.config

    examples = []
    positions = []
    for start, chunk in sentence_spans(stripped):
        sentence = make_sentence(chunk)
        for t in extract_targets(sentence):
            examples.append(make_example(sentence, t, vocab, emb,
                                         window=cfg.window, max_sent=cfg.max_sent))
            positions.append(start + t.char_pos)

    for i in range(0, len(examples), batch_size):
        chunk_ex = examples[i:i + batch_size]
        preds = M.predict_batch(params, M.collate(chunk_ex, cfg))
        for pos, p in zip(positions[i:i + batch_size], preds):
            out[pos] = apply_mark(stripped[pos], DiacriticClass(int(p)))

    if preserve_existing:
        for i, ch in enumerate(norm):
            got = classify_char(ch)
            if got is not None and got[1] != DiacriticClass.NONE:
                out[i] = ch
    return "".join(out)


def restore_text(params: M.ModelParams, vocab: CharVocab,
                 emb: EmbeddingTable | None, text: str,
                 preserve_existing: bool = False) -> str:
    return "\n".join(restore_line(params, vocab, emb, line, preserve_existing)
                     for line in text.split("\n"))
