# -*- coding: utf-8 -*-
"""Command-line surface: prepare, embed, train, evaluate, restore, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter

import numpy as np

from . import embeddings as E
from . import model as M
from . import nn
from .dataset import SplitSpec, build_char_vocab, diacritic_ratio
from .evaluation import (LETTERS, hardest_words, metrics_tsv, per_letter_report,
                         unigram_baseline)
from .nn.optim import NonFiniteGradientError
from .restore import restore_line
from .textnorm import (VALID_CLASSES, DiacriticClass, TargetLetter,
                       make_sentence, normalize, split_sentences)
from .train import TrainConfig, TrainingAbort, build_examples, evaluate, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class RunConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s in ("true", "1", "yes"):
        return True
    if s in ("false", "0", "no"):
        return False
    raise RunConfigError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(","))


def _parse_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(","))


# All recognized run-config keys with their parsers and defaults.
RUN_CONFIG_KEYS = {
    # paths
    "data_dir": (str, None),
    "embeddings_cache": (str, None),
    "checkpoint_out": (str, "model.ckpt"),
    "log_out": (str, None),
    # model
    "char_emb_dim": (int, 20),
    "char_lstm_h": (int, 64),
    "hidden_sizes": (_parse_int_list, (256,)),
    "use_word_path": (_parse_bool, True),
    "use_sentence_path": (_parse_bool, True),
    "sent_lstm_h": (int, None),  # defaults to the embedding dimension
    "window": (int, 13),
    "max_sent": (int, 31),
    "activation": (str, "relu"),
    "seed": (int, 0),
    "min_char_freq": (int, 1),
    # training
    "epochs": (int, 5),
    "batch_size": (int, 256),
    "lr": (float, 1e-3),
    "class_weights": (_parse_float_list, (1.0, 1.0, 1.0, 1.0)),
    "shuffle_seed": (int, 0),
    "grad_clip": (float, 0.0),
    "weight_mode": (str, "none"),
}


def parse_run_config(path: str | None, overrides: list[str]) -> dict:
    """Flat key=value file (# comments) plus --set overrides; unknown keys are
    an error so typos never pass silently."""
    values = {k: default for k, (_, default) in RUN_CONFIG_KEYS.items()}

    def apply(key: str, raw: str, where: str):
        if key not in RUN_CONFIG_KEYS:
            raise RunConfigError(f"{where}: unknown config key {key!r}")
        parser, _ = RUN_CONFIG_KEYS[key]
        try:
            values[key] = parser(raw)
        except (ValueError, RunConfigError) as e:
            raise RunConfigError(f"{where}: bad value for {key}: {e}")

    if path is not None:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise RunConfigError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                apply(key.strip(), value.strip(), f"{path}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise RunConfigError(f"--set {item!r}: expected key=value")
        key, value = item.split("=", 1)
        apply(key.strip(), value.strip(), f"--set {key}")
    return values


def _letter_histogram(sentences) -> Counter:
    counts: Counter = Counter()
    for s in sentences:
        for ch in s.raw_text.lower():
            if ch in LETTERS:
                counts[ch] += 1
    return counts


def cmd_prepare(args) -> int:
    ratios = _parse_float_list(args.split)
    if len(ratios) != 3:
        raise RunConfigError(f"--split needs three ratios, got {args.split!r}")
    spec = SplitSpec(*ratios, seed=args.seed)
    spec.validate()
    with open(args.corpus, encoding="utf-8") as f:
        text = normalize(f.read())
    sentences = split_sentences(text)
    if args.min_diacritic_ratio is not None:
        sentences = [s for s in sentences
                     if diacritic_ratio(s) >= args.min_diacritic_ratio]
    if not sentences:
        raise RunConfigError("no sentences left after filtering")

    os.makedirs(args.out, exist_ok=True)
    from .dataset import assign_split
    with open(os.path.join(args.out, "corpus.txt"), "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(s.raw_text.replace("\n", " ") + "\n")
    with open(os.path.join(args.out, "split.tsv"), "w", encoding="utf-8") as f:
        for i in range(len(sentences)):
            f.write(f"{i + 1}\t{assign_split(spec, i)}\n")

    hist = _letter_histogram(sentences)
    print(f"sentences: {len(sentences)}")
    print("target letters: " + "  ".join(f"{ch}={hist.get(ch, 0)}" for ch in LETTERS))
    return EXIT_OK


def load_prepared(data_dir: str) -> dict:
    """Read corpus.txt + split.tsv back into per-split sentence lists."""
    corpus_path = os.path.join(data_dir, "corpus.txt")
    split_path = os.path.join(data_dir, "split.tsv")
    with open(corpus_path, encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f]
    assignment = {}
    with open(split_path, encoding="utf-8") as f:
        for raw in f:
            raw = raw.strip()
            if not raw:
                continue
            num, split = raw.split("\t")
            assignment[int(num)] = split
    out = {"train": [], "dev": [], "test": []}
    for i, line in enumerate(lines, 1):
        split = assignment.get(i)
        if split is None:
            raise RunConfigError(f"{split_path}: no split assignment for line {i}")
        if split not in out:
            raise RunConfigError(f"{split_path}: unknown split {split!r} on line {i}")
        out[split].append(make_sentence(normalize(line)))
    return out


def cmd_embed(args) -> int:
    raw = E.load_vectors(args.vectors)
    table = E.build_stripped_table(raw)
    E.save_cache(table, args.out)
    if raw.duplicate_count:
        print(f"warning: {raw.duplicate_count} duplicate words (last occurrence kept)")
    print(f"vectors: {len(raw.entries)} words, dim {raw.dim}")
    print(f"stripped table: {len(table)} keys -> {args.out}")
    return EXIT_OK


def _load_embeddings_if_needed(cfg_values: dict, path_override: str | None = None):
    need = cfg_values["use_word_path"] or cfg_values["use_sentence_path"]
    if not need:
        return None
    cache = path_override or cfg_values.get("embeddings_cache")
    if cache is None:
        raise RunConfigError(
            "word/sentence paths enabled but no embeddings_cache configured; "
            "run the embed command first and set embeddings_cache")
    return E.load_cache(cache)


def cmd_train(args) -> int:
    values = parse_run_config(args.config, args.set or [])
    if values["data_dir"] is None:
        raise RunConfigError("config key data_dir is required for train")
    data = load_prepared(values["data_dir"])
    emb = _load_embeddings_if_needed(values)
    word_dim = emb.dim if emb is not None else 1
    model_cfg = M.ModelConfig(
        char_emb_dim=values["char_emb_dim"],
        char_lstm_h=values["char_lstm_h"],
        hidden_sizes=values["hidden_sizes"],
        use_word_path=values["use_word_path"],
        use_sentence_path=values["use_sentence_path"],
        word_dim=word_dim,
        sent_lstm_h=values["sent_lstm_h"] if values["sent_lstm_h"] is not None else word_dim,
        window=values["window"],
        max_sent=values["max_sent"],
        activation=values["activation"],
        seed=values["seed"],
    )
    train_cfg = TrainConfig(
        epochs=values["epochs"], batch_size=values["batch_size"], lr=values["lr"],
        class_weights=values["class_weights"], shuffle_seed=values["shuffle_seed"],
        grad_clip=values["grad_clip"], weight_mode=values["weight_mode"])
    vocab = build_char_vocab(data["train"], min_freq=values["min_char_freq"])

    log_lines = []

    def progress(record):
        line = (f"{record.epoch}\t{record.train_loss:.6f}"
                f"\t{record.dev_char_acc:.6f}\t{record.seconds:.3f}")
        log_lines.append(line)
        print(f"epoch {line}")

    params, log = train(model_cfg, train_cfg, data["train"], data["dev"],
                        emb, vocab, progress=progress)
    M.save_checkpoint(params, vocab, values["checkpoint_out"])
    print(f"best epoch: {log.best_epoch}; checkpoint -> {values['checkpoint_out']}")
    if values["log_out"]:
        with open(values["log_out"], "w", encoding="utf-8") as f:
            f.write("\n".join(log_lines) + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    params, cfg, vocab = M.load_checkpoint(args.checkpoint)
    data = load_prepared(args.data)
    split = data[args.split]
    if not split:
        raise RunConfigError(f"split {args.split!r} is empty")
    emb = None
    if cfg.use_word_path or cfg.use_sentence_path:
        if args.embeddings is None:
            raise RunConfigError("this checkpoint needs --embeddings CACHE")
        emb = E.load_cache(args.embeddings)

    examples, instances = build_examples(split, vocab, emb, cfg)
    predictions = []
    for i in range(0, len(examples), 512):
        chunk = examples[i:i + 512]
        preds = M.predict_batch(params, M.collate(chunk, cfg))
        predictions += [(t, DiacriticClass(int(p)))
                        for t, p in zip(instances[i:i + 512], preds)]
    from .evaluation import compute_metrics
    metrics = compute_metrics(predictions, split)
    baseline = unigram_baseline(data["train"], split)

    if args.tsv:
        print(metrics_tsv(metrics))
        print(f"baseline_char_acc\t{baseline.char_acc:.6f}\t\t")
        return EXIT_OK
    print(f"targets:            {metrics.n_targets}")
    print(f"char accuracy:      {100 * metrics.char_acc:.3f}%")
    print(f"word accuracy:      {100 * metrics.word_acc_ambiguous:.3f}% "
          f"(ambiguous words), {100 * metrics.word_acc_all:.3f}% (all words)")
    print(f"unigram baseline:   {100 * baseline.char_acc:.3f}% char accuracy")
    print()
    print(per_letter_report(metrics))
    hardest = hardest_words(predictions, split, k=args.hardest)
    if hardest:
        print("\nhardest words (gold form, word errors, sample mistakes):")
        for word, count, samples in hardest:
            print(f"  {word}\t{count}\t{', '.join(samples)}")
    return EXIT_OK


def cmd_restore(args) -> int:
    params, cfg, vocab = M.load_checkpoint(args.checkpoint)
    emb = None
    if cfg.use_word_path or cfg.use_sentence_path:
        if args.embeddings is None:
            raise RunConfigError("this checkpoint needs --embeddings CACHE")
        emb = E.load_cache(args.embeddings)
    stream = open(args.input, encoding="utf-8") if args.input else sys.stdin
    try:
        for line in stream:
            restored = restore_line(params, vocab, emb, line.rstrip("\n"),
                                    preserve_existing=args.preserve_existing)
            print(restored)
    finally:
        if args.input:
            stream.close()
    return EXIT_OK


def _gradcheck_loss_fn(params, cfg, rng):
    """Fixed random batch of examples for the tiny-model gradient check."""
    B = 4
    window_ids = rng.integers(0, params.char_vocab_size, size=(B, cfg.window))
    word_vecs = rng.normal(size=(B, cfg.word_dim))
    L = 5
    sent = rng.normal(size=(B, L, cfg.word_dim))
    sent_mask = np.ones((B, L))
    sent_mask[0, 3:] = 0.0  # exercise the padding path
    base = rng.integers(0, 4, size=B)
    gold = np.array([int(rng.choice([int(c) for c in
                                     VALID_CLASSES[TargetLetter(int(b))]]))
                     for b in base])
    batch = M.Batch(window_ids=window_ids.astype(np.int32),
                    word_vecs=word_vecs, sent=sent, sent_mask=sent_mask,
                    base=base, gold=gold)
    weights = np.ones(4)

    def loss_fn():
        logits = M.forward_batch(params, batch)
        loss, _ = nn.masked_softmax_xent(logits, batch.gold, batch.valid_mask,
                                         weights)
        return loss
    return loss_fn


def cmd_gradcheck(args) -> int:
    cfg = M.ModelConfig(char_emb_dim=4, char_lstm_h=4, hidden_sizes=(8,),
                        use_word_path=True, use_sentence_path=True,
                        word_dim=4, sent_lstm_h=4, window=13, max_sent=31,
                        seed=args.seed, dtype="float64")
    params = M.init(cfg, char_vocab_size=20)
    rng = np.random.default_rng(args.seed)
    loss_fn = _gradcheck_loss_fn(params, cfg, rng)
    max_err = nn.grad_check(loss_fn, params.variables(), eps=args.eps,
                            samples_per_tensor=8, seed=args.seed)
    print(f"max relative error: {max_err:.3e} (threshold {args.threshold:.1e})")
    return EXIT_OK if max_err < args.threshold else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodiac", description="Romanian diacritics restoration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="normalize and split a raw corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-diacritic-ratio", type=float, default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("embed", help="build the stripped embedding cache")
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("dev", "test"), required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--tsv", action="store_true")
    p.add_argument("--hardest", type=int, default=10)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("restore", help="restore diacritics in text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--preserve-existing", action="store_true")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (TrainingAbort, NonFiniteGradientError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
