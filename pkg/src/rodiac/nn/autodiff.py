# -*- coding: utf-8 -*-
"""Minimal reverse-mode automatic differentiation over numpy arrays.

A ``Tape`` records one closure per forward operation; ``Tape.backward`` replays
them in exact reverse order, accumulating gradients into ``Var.grad``.  Ops run
without any recording when no tape is active, which is the inference path.

Only the ops this model needs are provided.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


class TapeConsumedError(RuntimeError):
    """backward() was called twice on the same tape."""


class Var:
    """A value in the computation graph.  Leaf Vars are the parameters."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Var(shape={self.value.shape}, dtype={self.value.dtype})"


_current_tape: Optional["Tape"] = None


class Tape:
    """Records operations for reverse-mode differentiation.

    Used as a context manager; nesting is not supported (the model does not
    need it).
    """

    def __init__(self):
        self._ops = []
        self._consumed = False

    def __enter__(self):
        global _current_tape
        if _current_tape is not None:
            raise RuntimeError("a tape is already active")
        _current_tape = self
        return self

    def __exit__(self, *exc):
        global _current_tape
        _current_tape = None
        return False

    def record(self, out: "Var", backward_fn) -> None:
        self._ops.append((out, backward_fn))

    def backward(self, loss: Var) -> None:
        """Seed d(loss)/d(loss) = 1 and run all recorded ops in reverse."""
        if self._consumed:
            raise TapeConsumedError("tape has already been consumed by backward()")
        if loss.value.ndim != 0 and loss.value.size != 1:
            raise ValueError(f"loss must be a scalar, got shape {loss.value.shape}")
        self._consumed = True
        loss.accumulate(np.ones_like(loss.value))
        for out, fn in reversed(self._ops):
            if out.grad is not None:  # unused outputs contribute nothing
                fn()


def _tape() -> Optional[Tape]:
    return _current_tape


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to the shape of its input."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def constant(value, dtype=None) -> Var:
    return Var(np.asarray(value, dtype=dtype))


def add(a: Var, b: Var) -> Var:
    out = Var(a.value + b.value)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(_unbroadcast(out.grad, a.value.shape))
            b.accumulate(_unbroadcast(out.grad, b.value.shape))
        t.record(out, bwd)
    return out


def mul(a: Var, b: Var) -> Var:
    out = Var(a.value * b.value)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(_unbroadcast(out.grad * b.value, a.value.shape))
            b.accumulate(_unbroadcast(out.grad * a.value, b.value.shape))
        t.record(out, bwd)
    return out


def scale(a: Var, s: float) -> Var:
    out = Var(a.value * s)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad * s)
        t.record(out, bwd)
    return out


def matmul(a: Var, b: Var) -> Var:
    """2-D matrix product a @ b."""
    out = Var(a.value @ b.value)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad @ b.value.T)
            b.accumulate(a.value.T @ out.grad)
        t.record(out, bwd)
    return out


def sigmoid(a: Var) -> Var:
    # Numerically stable logistic via tanh.
    y = 0.5 * (np.tanh(0.5 * a.value) + 1.0)
    out = Var(y)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad * y * (1.0 - y))
        t.record(out, bwd)
    return out


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    out = Var(y)
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad * (1.0 - y * y))
        t.record(out, bwd)
    return out


def relu(a: Var) -> Var:
    mask = a.value > 0
    out = Var(np.where(mask, a.value, 0.0))
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad * mask)
        t.record(out, bwd)
    return out


def concat(parts: list[Var], axis: int = -1) -> Var:
    out = Var(np.concatenate([p.value for p in parts], axis=axis))
    t = _tape()
    if t is not None:
        sizes = [p.value.shape[axis] for p in parts]
        splits = np.cumsum(sizes)[:-1]

        def bwd():
            grads = np.split(out.grad, splits, axis=axis)
            for p, g in zip(parts, grads):
                p.accumulate(g)
        t.record(out, bwd)
    return out


def slice_cols(a: Var, start: int, stop: int) -> Var:
    """Slice the last axis; used to unpack the 4H gate block of an LSTM."""
    out = Var(a.value[..., start:stop])
    t = _tape()
    if t is not None:
        def bwd():
            g = np.zeros_like(a.value)
            g[..., start:stop] = out.grad
            a.accumulate(g)
        t.record(out, bwd)
    return out


def select_step(a: Var, t: int) -> Var:
    """a[:, t, :] for a [B, T, D] Var; used to walk a sequence stepwise."""
    out = Var(a.value[:, t, :])
    tape = _tape()
    if tape is not None:
        def bwd():
            g = np.zeros_like(a.value)
            g[:, t, :] = out.grad
            a.accumulate(g)
        tape.record(out, bwd)
    return out


def gather_rows(table: Var, indices: np.ndarray) -> Var:
    """Embedding lookup: rows of ``table`` selected by an integer array.

    Output shape is ``indices.shape + (table.shape[1],)``; the backward pass
    scatter-adds, so repeated indices accumulate correctly.
    """
    idx = np.asarray(indices)
    out = Var(table.value[idx])
    t = _tape()
    if t is not None:
        def bwd():
            g = np.zeros_like(table.value)
            np.add.at(g, idx.reshape(-1), out.grad.reshape(-1, table.value.shape[1]))
            table.accumulate(g)
        t.record(out, bwd)
    return out


def reshape(a: Var, shape: tuple) -> Var:
    out = Var(a.value.reshape(shape))
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(out.grad.reshape(a.value.shape))
        t.record(out, bwd)
    return out


def mean_all(a: Var) -> Var:
    out = Var(np.asarray(a.value.mean()))
    t = _tape()
    if t is not None:
        n = a.value.size

        def bwd():
            a.accumulate(np.full_like(a.value, out.grad / n))
        t.record(out, bwd)
    return out


def sum_all(a: Var) -> Var:
    out = Var(np.asarray(a.value.sum()))
    t = _tape()
    if t is not None:
        def bwd():
            a.accumulate(np.full_like(a.value, out.grad))
        t.record(out, bwd)
    return out


def masked_softmax_xent(logits: Var,
                        gold: np.ndarray,
                        valid_mask: np.ndarray,
                        class_weights: np.ndarray) -> tuple[Var, np.ndarray]:
    """Fused masked softmax + weighted cross-entropy, mean over the batch.

    ``logits`` is [B, C] (or [C], treated as a batch of one).  Invalid classes
    are given logit -inf, so their probability is exactly 0.  Returns the
    scalar loss Var and the [B, C] probability array (plain numpy; probs are a
    diagnostic output, gradients flow through the loss).
    """
    squeeze = logits.value.ndim == 1
    x = logits.value if not squeeze else logits.value[None, :]
    gold = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    mask = np.asarray(valid_mask, dtype=bool)
    if mask.ndim == 1:
        mask = np.broadcast_to(mask, x.shape)
    weights = np.asarray(class_weights, dtype=x.dtype)
    B = x.shape[0]
    rows = np.arange(B)

    if not mask[rows, gold].all():
        bad = int(rows[~mask[rows, gold]][0])
        raise ValueError(f"gold class {int(gold[bad])} is masked out for example {bad}")
    if (mask.sum(axis=1) < 2).any():
        raise ValueError("masked_softmax_xent needs at least two valid classes")

    neg = np.finfo(x.dtype).min
    z = np.where(mask, x, neg)
    z = z - z.max(axis=1, keepdims=True)
    e = np.where(mask, np.exp(z), 0.0)
    probs = e / e.sum(axis=1, keepdims=True)

    w = weights[gold]
    logp = np.log(probs[rows, gold])
    loss_val = -(w * logp).mean()
    out = Var(np.asarray(loss_val, dtype=x.dtype))

    t = _tape()
    if t is not None:
        def bwd():
            onehot = np.zeros_like(probs)
            onehot[rows, gold] = 1.0
            g = (probs - onehot) * w[:, None] * (out.grad / B)
            g = np.where(mask, g, 0.0)
            logits.accumulate(g[0] if squeeze else g)
        t.record(out, bwd)
    probs_out = probs[0] if squeeze else probs
    return out, probs_out
