# -*- coding: utf-8 -*-
"""Mini-batch training loop with per-epoch dev evaluation and best-checkpoint
selection by dev char accuracy."""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field

import numpy as np

from . import model as M
from . import nn
from .dataset import CharVocab, Example, batches, extract_targets, make_example
from .embeddings import EmbeddingTable
from .evaluation import Metrics, compute_metrics
from .textnorm import DiacriticClass, Sentence


class TrainingAbort(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 256
    lr: float = 1e-3
    class_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    shuffle_seed: int = 0
    grad_clip: float = 0.0  # 0 disables clipping
    weight_mode: str = "none"  # "none" or "inverse_frequency"

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if any(w <= 0 for w in self.class_weights):
            raise ValueError(f"class weights must be positive, got {self.class_weights}")
        if self.weight_mode not in ("none", "inverse_frequency"):
            raise ValueError(f"unknown weight_mode {self.weight_mode!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_char_acc: float
    seconds: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def lines(self) -> list[str]:
        return [f"{r.epoch}\t{r.train_loss:.6f}\t{r.dev_char_acc:.6f}\t{r.seconds:.3f}"
                for r in self.records]


def build_examples(sentences: list[Sentence], vocab: CharVocab,
                   emb: EmbeddingTable | None, cfg: M.ModelConfig
                   ) -> tuple[list[Example], list]:
    """Examples plus their (instance, sentence index) provenance, in order."""
    examples, instances = [], []
    for si, s in enumerate(sentences):
        for t in extract_targets(s, si):
            examples.append(make_example(s, t, vocab, emb,
                                         window=cfg.window, max_sent=cfg.max_sent))
            instances.append(t)
    return examples, instances


def inverse_frequency_weights(examples: list[Example]) -> tuple[float, ...]:
    """Class weights proportional to 1/frequency, normalized to mean 1."""
    counts = np.zeros(4)
    for ex in examples:
        counts[int(ex.gold)] += 1
    counts = np.maximum(counts, 1.0)
    w = 1.0 / counts
    w *= 4.0 / w.sum()
    return tuple(float(x) for x in w)


def evaluate(params: M.ModelParams, sentences: list[Sentence],
             emb: EmbeddingTable | None, vocab: CharVocab,
             batch_size: int = 512) -> Metrics:
    """Run predict on every target occurrence and score against gold."""
    examples, instances = build_examples(sentences, vocab, emb, params.config)
    if not examples:
        raise ValueError("nothing to evaluate: no target letters in the dataset")
    predictions = []
    for i in range(0, len(examples), batch_size):
        chunk = examples[i:i + batch_size]
        preds = M.predict_batch(params, M.collate(chunk, params.config))
        for t, p in zip(instances[i:i + batch_size], preds):
            predictions.append((t, DiacriticClass(int(p))))
    return compute_metrics(predictions, sentences)


def _clip_gradients(params: list[nn.Var], max_norm: float) -> None:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad ** 2).sum())
    norm = np.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale


def train(model_cfg: M.ModelConfig, train_cfg: TrainConfig,
          train_sentences: list[Sentence], dev_sentences: list[Sentence],
          emb: EmbeddingTable | None, vocab: CharVocab,
          progress=None) -> tuple[M.ModelParams, TrainLog]:
    """Train for the configured epochs; return the best-dev-accuracy params.

    Ties in dev accuracy keep the earlier epoch.  ``progress`` is an optional
    callback receiving each EpochRecord as it completes.
    """
    train_cfg.validate()
    if not train_sentences or not dev_sentences:
        raise ValueError("train and dev sets must be non-empty")

    params = M.init(model_cfg, vocab.size)
    examples, _ = build_examples(train_sentences, vocab, emb, model_cfg)
    if not examples:
        raise ValueError("no target letters in the training set")
    weights = np.array(train_cfg.class_weights, dtype=model_cfg.np_dtype)
    if train_cfg.weight_mode == "inverse_frequency":
        weights = np.array(inverse_frequency_weights(examples),
                           dtype=model_cfg.np_dtype)

    variables = params.variables()
    opt = nn.Adam(variables, lr=train_cfg.lr)
    log = TrainLog()
    best_acc = -1.0
    best_values = None

    for epoch in range(1, train_cfg.epochs + 1):
        t0 = time.perf_counter()
        epoch_batches = batches(examples, train_cfg.batch_size,
                                train_cfg.shuffle_seed + epoch)
        loss_sum = 0.0
        n_seen = 0
        for bi, chunk in enumerate(epoch_batches):
            batch = M.collate(chunk, model_cfg)
            opt.zero_grad()
            with nn.Tape() as tape:
                logits = M.forward_batch(params, batch)
                loss, _ = nn.masked_softmax_xent(logits, batch.gold,
                                                 batch.valid_mask, weights)
            if not np.isfinite(loss.value):
                raise TrainingAbort(f"non-finite loss in epoch {epoch}, batch {bi}")
            tape.backward(loss)
            if train_cfg.grad_clip > 0:
                _clip_gradients(variables, train_cfg.grad_clip)
            opt.step()
            loss_sum += float(loss.value) * len(chunk)
            n_seen += len(chunk)

        dev = evaluate(params, dev_sentences, emb, vocab)
        record = EpochRecord(epoch=epoch, train_loss=loss_sum / n_seen,
                             dev_char_acc=dev.char_acc,
                             seconds=time.perf_counter() - t0)
        log.records.append(record)
        if progress is not None:
            progress(record)
        if dev.char_acc > best_acc:
            best_acc = dev.char_acc
            log.best_epoch = epoch
            best_values = [v.value.copy() for v in variables]

    best_params = copy.deepcopy(params)
    for var, value in zip(best_params.variables(), best_values):
        var.value = value
    return best_params, log
