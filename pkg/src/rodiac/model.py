# -*- coding: utf-8 -*-
"""The three-path restoration model: character window BiLSTM, current-word
vector, and sentence BiLSTM, concatenated into a dense stack over 4 logits.

The sentence is represented by the concatenated final forward/backward states
of its BiLSTM (one fixed vector per sentence); the separate current-word path
lets the network select the relevant part of that encoded context.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .dataset import CharVocab, Example
from .nn import DenseParams, LSTMCellParams, Var
from .textnorm import NUM_CLASSES, VALID_CLASSES, DiacriticClass, TargetLetter

CHECKPOINT_MAGIC = b"DIAC-MDL1"

# [4 bases, 4 classes] validity table used for loss masking and prediction.
VALID_MASKS = np.zeros((4, NUM_CLASSES), dtype=bool)
for _base, _classes in VALID_CLASSES.items():
    for _cls in _classes:
        VALID_MASKS[_base, _cls] = True


class ConfigError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    char_emb_dim: int = 20
    char_lstm_h: int = 64
    hidden_sizes: tuple[int, ...] = (256,)
    use_word_path: bool = True
    use_sentence_path: bool = True
    word_dim: int = 300
    sent_lstm_h: int = 300
    window: int = 13
    max_sent: int = 31
    activation: str = "relu"
    seed: int = 0
    dtype: str = "float32"

    def validate(self) -> None:
        if self.window % 2 != 1 or self.window < 1:
            raise ConfigError(f"window must be odd and positive, got {self.window}")
        if not self.hidden_sizes:
            raise ConfigError("hidden_sizes must be non-empty")
        if any(h < 1 for h in self.hidden_sizes):
            raise ConfigError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if self.activation not in ("relu", "linear"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"unknown dtype {self.dtype!r}")
        for name in ("char_emb_dim", "char_lstm_h", "word_dim", "sent_lstm_h",
                     "max_sent"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def classifier_input_size(self) -> int:
        size = 2 * self.char_lstm_h
        if self.use_word_path:
            size += self.word_dim
        if self.use_sentence_path:
            size += 2 * self.sent_lstm_h
        return size


@dataclass
class ModelParams:
    config: ModelConfig
    char_vocab_size: int
    char_emb: Var
    char_fwd: LSTMCellParams
    char_bwd: LSTMCellParams
    sent_fwd: LSTMCellParams | None
    sent_bwd: LSTMCellParams | None
    hidden: list[DenseParams] = field(default_factory=list)
    out: DenseParams = None

    def named_variables(self) -> list[tuple[str, Var]]:
        """All trainable tensors in the fixed checkpoint order."""
        named = [("char_emb", self.char_emb)]
        for tag, cell in (("char_fwd", self.char_fwd), ("char_bwd", self.char_bwd),
                          ("sent_fwd", self.sent_fwd), ("sent_bwd", self.sent_bwd)):
            if cell is None:
                continue
            named += [(f"{tag}.W_x", cell.W_x), (f"{tag}.W_h", cell.W_h),
                      (f"{tag}.b", cell.b)]
        for i, layer in enumerate(self.hidden):
            named += [(f"hidden{i}.W", layer.W), (f"hidden{i}.b", layer.b)]
        named += [("out.W", self.out.W), ("out.b", self.out.b)]
        return named

    def variables(self) -> list[Var]:
        return [v for _, v in self.named_variables()]


def init(config: ModelConfig, char_vocab_size: int) -> ModelParams:
    """Allocate and initialize all tensors deterministically from the seed."""
    config.validate()
    if char_vocab_size < 2:
        raise ConfigError(f"char vocab size {char_vocab_size} too small")
    dt = config.np_dtype
    rng = np.random.default_rng(config.seed)
    char_emb = Var(rng.uniform(-0.05, 0.05,
                               size=(char_vocab_size, config.char_emb_dim)).astype(dt))
    char_fwd = nn.init_lstm(rng, config.char_emb_dim, config.char_lstm_h, dt)
    char_bwd = nn.init_lstm(rng, config.char_emb_dim, config.char_lstm_h, dt)
    sent_fwd = sent_bwd = None
    if config.use_sentence_path:
        sent_fwd = nn.init_lstm(rng, config.word_dim, config.sent_lstm_h, dt)
        sent_bwd = nn.init_lstm(rng, config.word_dim, config.sent_lstm_h, dt)
    hidden = []
    in_size = config.classifier_input_size()
    for h in config.hidden_sizes:
        hidden.append(nn.init_dense(rng, in_size, h, dt))
        in_size = h
    out = nn.init_dense(rng, in_size, NUM_CLASSES, dt)
    return ModelParams(config=config, char_vocab_size=char_vocab_size,
                       char_emb=char_emb, char_fwd=char_fwd, char_bwd=char_bwd,
                       sent_fwd=sent_fwd, sent_bwd=sent_bwd, hidden=hidden, out=out)


@dataclass
class Batch:
    window_ids: np.ndarray  # int32 [B, W]
    word_vecs: np.ndarray   # [B, Dw]
    sent: np.ndarray        # [B, Lmax, Dw]
    sent_mask: np.ndarray   # [B, Lmax]
    base: np.ndarray        # int64 [B]
    gold: np.ndarray        # int64 [B]

    @property
    def valid_mask(self) -> np.ndarray:
        return VALID_MASKS[self.base]

    def __len__(self) -> int:
        return len(self.base)


def collate(examples: list[Example], config: ModelConfig) -> Batch:
    B = len(examples)
    dt = config.np_dtype
    window_ids = np.stack([ex.window_ids for ex in examples])
    base = np.array([int(ex.base) for ex in examples], dtype=np.int64)
    gold = np.array([int(ex.gold) for ex in examples], dtype=np.int64)
    dw = config.word_dim
    if config.use_word_path or config.use_sentence_path:
        word_vecs = np.stack([ex.word_vec for ex in examples]).astype(dt)
        lmax = max(ex.sent_vecs.shape[0] for ex in examples)
        sent = np.zeros((B, lmax, dw), dtype=dt)
        sent_mask = np.zeros((B, lmax), dtype=dt)
        for i, ex in enumerate(examples):
            L = ex.sent_vecs.shape[0]
            sent[i, :L] = ex.sent_vecs
            sent_mask[i, :L] = 1.0
    else:
        word_vecs = np.zeros((B, 0), dtype=dt)
        sent = np.zeros((B, 1, 0), dtype=dt)
        sent_mask = np.ones((B, 1), dtype=dt)
    return Batch(window_ids=window_ids, word_vecs=word_vecs, sent=sent,
                 sent_mask=sent_mask, base=base, gold=gold)


def forward_batch(p: ModelParams, batch: Batch) -> Var:
    """Logits [B, 4] for a collated batch (no softmax here)."""
    cfg = p.config
    chars = nn.gather_rows(p.char_emb, batch.window_ids)  # [B, W, E]
    char_steps = [nn.select_step(chars, t) for t in range(cfg.window)]
    h_cf, h_cb = nn.bilstm_encode(p.char_fwd, p.char_bwd, None, as_vars=char_steps)
    parts = [h_cf, h_cb]
    if cfg.use_word_path:
        parts.append(Var(batch.word_vecs))
    if cfg.use_sentence_path:
        h_sf, h_sb = nn.bilstm_encode(p.sent_fwd, p.sent_bwd, batch.sent,
                                      mask=batch.sent_mask)
        parts += [h_sf, h_sb]
    x = nn.concat(parts, axis=-1)
    for layer in p.hidden:
        x = nn.dense(layer, x, activation=cfg.activation)
    return nn.dense(p.out, x, activation="linear")


def forward(p: ModelParams, ex: Example) -> np.ndarray:
    """Logits [4] for one example (inference, no tape)."""
    return forward_batch(p, collate([ex], p.config)).value[0]


def predict_batch(p: ModelParams, batch: Batch) -> np.ndarray:
    """Masked argmax over logits; ties break toward the lower class index."""
    logits = forward_batch(p, batch).value
    masked = np.where(batch.valid_mask, logits, -np.inf)
    return masked.argmax(axis=1)


def predict(p: ModelParams, ex: Example) -> DiacriticClass:
    return DiacriticClass(int(predict_batch(p, collate([ex], p.config))[0]))


def predict_classes(logits: np.ndarray, base: TargetLetter) -> DiacriticClass:
    """Masked argmax for raw logits, exposed for property tests."""
    masked = np.where(VALID_MASKS[int(base)], logits, -np.inf)
    return DiacriticClass(int(masked.argmax()))


# --- checkpoint I/O ---------------------------------------------------------

_CONFIG_PARSERS = {
    "char_emb_dim": int, "char_lstm_h": int, "word_dim": int, "sent_lstm_h": int,
    "window": int, "max_sent": int, "seed": int,
    "use_word_path": lambda s: s == "true", "use_sentence_path": lambda s: s == "true",
    "activation": str, "dtype": str,
    "hidden_sizes": lambda s: tuple(int(x) for x in s.split(",")),
}


def _config_to_text(cfg: ModelConfig) -> str:
    lines = []
    for key in sorted(_CONFIG_PARSERS):
        v = getattr(cfg, key)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{key}={v}")
    return "\n".join(lines)


def _config_from_text(text: str) -> ModelConfig:
    kwargs = {}
    for line in text.splitlines():
        key, _, value = line.partition("=")
        if key not in _CONFIG_PARSERS:
            raise CheckpointError(f"unknown config key {key!r} in checkpoint")
        kwargs[key] = _CONFIG_PARSERS[key](value)
    return ModelConfig(**kwargs)


def save_checkpoint(p: ModelParams, char_vocab: CharVocab, path: str) -> None:
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        cfg_bytes = _config_to_text(p.config).encode("utf-8")
        f.write(struct.pack("<I", len(cfg_bytes)))
        f.write(cfg_bytes)
        chars = char_vocab.chars_in_id_order()
        f.write(struct.pack("<I", len(chars)))
        for c in chars:
            cb = c.encode("utf-8")
            f.write(struct.pack("<I", len(cb)))
            f.write(cb)
        named = p.named_variables()
        f.write(struct.pack("<I", len(named)))
        for name, var in named:
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", var.value.ndim))
            for d in var.value.shape:
                f.write(struct.pack("<I", d))
            f.write(var.value.astype("<f4").tobytes())


def load_checkpoint(path: str) -> tuple[ModelParams, ModelConfig, CharVocab]:
    with open(path, "rb") as f:
        data = f.read()
    off = 0

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise CheckpointError(f"{path}: truncated checkpoint")
        chunk = data[off:off + n]
        off += n
        return chunk

    def u32() -> int:
        return struct.unpack("<I", take(4))[0]

    if take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad checkpoint magic")
    cfg = _config_from_text(take(u32()).decode("utf-8"))
    n_chars = u32()
    id_of = {}
    for i in range(n_chars):
        c = take(u32()).decode("utf-8")
        id_of[c] = i + 2
    vocab = CharVocab(id_of=id_of)

    tensors: dict[str, np.ndarray] = {}
    n_tensors = u32()
    for _ in range(n_tensors):
        name = take(u32()).decode("utf-8")
        rank = u32()
        shape = tuple(u32() for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape).copy()
        tensors[name] = arr.astype(cfg.np_dtype)
    if off != len(data):
        raise CheckpointError(f"{path}: trailing bytes in checkpoint")

    params = init(cfg, vocab.size)
    for name, var in params.named_variables():
        if name not in tensors:
            raise CheckpointError(f"{path}: missing tensor {name!r}")
        if tensors[name].shape != var.value.shape:
            raise CheckpointError(
                f"{path}: tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {var.value.shape}")
        var.value = tensors[name]
    return params, cfg, vocab


def with_seed(cfg: ModelConfig, seed: int) -> ModelConfig:
    return replace(cfg, seed=seed)
